#include "fixtures.hpp"

#include <iostream>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gsstyle_make_fixtures <dir>\n";
        return 2;
    }
    gsstyle::testing::write_cli_fixtures(argv[1]);
    return 0;
}
