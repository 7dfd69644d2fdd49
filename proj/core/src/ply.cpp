#include "gsstyle/ply.hpp"

#include "gsstyle/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fmt/core.h>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace gsstyle {

    namespace {

        enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

        struct Property {
            std::string name;
            ScalarType type;
            std::size_t offset;
        };

        std::optional<ScalarType> parse_type(const std::string& t) {
            static const std::unordered_map<std::string, ScalarType> types = {
                {"char", ScalarType::Int8}, {"int8", ScalarType::Int8},
                {"uchar", ScalarType::UInt8}, {"uint8", ScalarType::UInt8},
                {"short", ScalarType::Int16}, {"int16", ScalarType::Int16},
                {"ushort", ScalarType::UInt16}, {"uint16", ScalarType::UInt16},
                {"int", ScalarType::Int32}, {"int32", ScalarType::Int32},
                {"uint", ScalarType::UInt32}, {"uint32", ScalarType::UInt32},
                {"float", ScalarType::Float32}, {"float32", ScalarType::Float32},
                {"double", ScalarType::Float64}, {"float64", ScalarType::Float64},
            };
            auto it = types.find(t);
            if (it == types.end()) {
                return std::nullopt;
            }
            return it->second;
        }

        std::size_t type_size(ScalarType t) noexcept {
            switch (t) {
            case ScalarType::Int8:
            case ScalarType::UInt8: return 1;
            case ScalarType::Int16:
            case ScalarType::UInt16: return 2;
            case ScalarType::Int32:
            case ScalarType::UInt32:
            case ScalarType::Float32: return 4;
            case ScalarType::Float64: return 8;
            }
            return 0;
        }

        template <typename T>
        T read_le(const unsigned char* p) noexcept {
            unsigned char bytes[sizeof(T)];
            std::memcpy(bytes, p, sizeof(T));
            if constexpr (std::endian::native == std::endian::big) {
                std::reverse(bytes, bytes + sizeof(T));
            }
            T v;
            std::memcpy(&v, bytes, sizeof(T));
            return v;
        }

        double read_scalar(const unsigned char* p, ScalarType t) noexcept {
            switch (t) {
            case ScalarType::Int8: return read_le<std::int8_t>(p);
            case ScalarType::UInt8: return read_le<std::uint8_t>(p);
            case ScalarType::Int16: return read_le<std::int16_t>(p);
            case ScalarType::UInt16: return read_le<std::uint16_t>(p);
            case ScalarType::Int32: return read_le<std::int32_t>(p);
            case ScalarType::UInt32: return read_le<std::uint32_t>(p);
            case ScalarType::Float32: return read_le<float>(p);
            case ScalarType::Float64: return read_le<double>(p);
            }
            return 0.0;
        }

        void write_float_le(std::string& out, double value) {
            const float f = static_cast<float>(value);
            unsigned char bytes[4];
            std::memcpy(bytes, &f, 4);
            if constexpr (std::endian::native == std::endian::big) {
                std::reverse(bytes, bytes + 4);
            }
            out.append(reinterpret_cast<const char*>(bytes), 4);
        }

        struct Header {
            std::size_t vertex_count = 0;
            std::vector<Property> properties;
            std::size_t stride = 0;
            std::size_t body_offset = 0;
        };

        Header parse_header(const std::string& content) {
            const auto end_marker = content.find("end_header");
            if (content.rfind("ply", 0) != 0 || end_marker == std::string::npos) {
                throw FormatError("header", "not a PLY file (missing 'ply' magic or 'end_header')");
            }
            const auto body = content.find('\n', end_marker);
            if (body == std::string::npos) {
                throw FormatError("header", "unterminated PLY header");
            }

            Header header;
            header.body_offset = body + 1;
            std::istringstream lines(content.substr(0, end_marker));
            std::string line;
            bool in_vertex = false;
            bool saw_vertex = false;
            bool saw_format = false;
            while (std::getline(lines, line)) {
                if (!line.empty() && line.back() == '\r') {
                    line.pop_back();
                }
                std::istringstream tokens(line);
                std::string keyword;
                tokens >> keyword;
                if (keyword == "format") {
                    std::string encoding;
                    tokens >> encoding;
                    if (encoding != "binary_little_endian") {
                        throw UnsupportedEncodingError(
                            fmt::format("unsupported PLY encoding '{}': only binary_little_endian is read", encoding));
                    }
                    saw_format = true;
                } else if (keyword == "element") {
                    std::string name;
                    std::size_t count = 0;
                    tokens >> name >> count;
                    if (name == "vertex") {
                        if (saw_vertex) {
                            throw FormatError("vertex", "duplicate vertex element");
                        }
                        in_vertex = true;
                        saw_vertex = true;
                        header.vertex_count = count;
                    } else {
                        if (!saw_vertex) {
                            throw FormatError(name, fmt::format("element '{}' before vertex is not supported", name));
                        }
                        in_vertex = false; // trailing elements are ignored
                    }
                } else if (keyword == "property") {
                    if (!in_vertex) {
                        continue;
                    }
                    std::string type_name;
                    std::string name;
                    tokens >> type_name;
                    if (type_name == "list") {
                        throw FormatError("vertex", "list properties are not supported on the vertex element");
                    }
                    tokens >> name;
                    auto type = parse_type(type_name);
                    if (!type) {
                        throw FormatError(name, fmt::format("unknown property type '{}'", type_name));
                    }
                    header.properties.push_back({name, *type, header.stride});
                    header.stride += type_size(*type);
                }
            }
            if (!saw_format) {
                throw FormatError("format", "PLY header has no format line");
            }
            if (!saw_vertex) {
                throw FormatError("vertex", "PLY header has no vertex element");
            }
            return header;
        }

        int degree_from_rest_count(std::size_t count) {
            for (int degree = 0; degree <= 3; ++degree) {
                if (count == 3 * static_cast<std::size_t>(sh_rest_per_channel(degree))) {
                    return degree;
                }
            }
            throw FormatError("f_rest", fmt::format("{} f_rest properties do not match any SH degree 0..3", count));
        }

    } // namespace

    std::vector<std::string> canonical_ply_properties(int sh_degree) {
        std::vector<std::string> names = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"};
        const int rest = 3 * sh_rest_per_channel(sh_degree);
        for (int i = 0; i < rest; ++i) {
            names.push_back(fmt::format("f_rest_{}", i));
        }
        names.emplace_back("opacity");
        for (int i = 0; i < 3; ++i) {
            names.push_back(fmt::format("scale_{}", i));
        }
        for (int i = 0; i < 4; ++i) {
            names.push_back(fmt::format("rot_{}", i));
        }
        return names;
    }

    GaussianCloud load_ply(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw IoError(fmt::format("cannot open '{}'", path.string()));
        }
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const Header header = parse_header(content);

        std::unordered_map<std::string, const Property*> by_name;
        for (const auto& p : header.properties) {
            by_name[p.name] = &p;
        }
        auto require = [&](const std::string& name) -> const Property& {
            auto it = by_name.find(name);
            if (it == by_name.end()) {
                throw FormatError(name, fmt::format("PLY is missing required property '{}'", name));
            }
            return *it->second;
        };

        std::size_t rest_count = 0;
        while (by_name.count(fmt::format("f_rest_{}", rest_count))) {
            ++rest_count;
        }
        for (const auto& p : header.properties) {
            if (p.name.rfind("f_rest_", 0) == 0) {
                const auto idx = std::stoul(p.name.substr(7));
                if (idx >= rest_count) {
                    throw FormatError(p.name, fmt::format("f_rest properties are not contiguous: found '{}' but f_rest_{} is missing",
                                                          p.name, rest_count));
                }
            }
        }
        const int degree = degree_from_rest_count(rest_count);

        std::vector<const Property*> pos, dc, scale, rot, rest;
        for (const char* n : {"x", "y", "z"}) {
            pos.push_back(&require(n));
        }
        for (int i = 0; i < 3; ++i) {
            dc.push_back(&require(fmt::format("f_dc_{}", i)));
            scale.push_back(&require(fmt::format("scale_{}", i)));
        }
        for (int i = 0; i < 4; ++i) {
            rot.push_back(&require(fmt::format("rot_{}", i)));
        }
        for (std::size_t i = 0; i < rest_count; ++i) {
            rest.push_back(by_name.at(fmt::format("f_rest_{}", i)));
        }
        const Property& opacity = require("opacity");

        const std::size_t n = header.vertex_count;
        const std::size_t needed = n * header.stride;
        if (content.size() - header.body_offset < needed) {
            throw FormatError("vertex", fmt::format("PLY body truncated: header declares {} vertices ({} bytes), file has {} bytes",
                                                    n, needed, content.size() - header.body_offset));
        }

        GaussianCloud cloud = GaussianCloud::with_size(n, degree);
        const auto* body = reinterpret_cast<const unsigned char*>(content.data()) + header.body_offset;
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned char* row = body + i * header.stride;
            auto get = [row](const Property* p) { return read_scalar(row + p->offset, p->type); };
            for (int k = 0; k < 3; ++k) {
                cloud.positions[i * 3 + k] = get(pos[k]);
                cloud.sh_dc[i * 3 + k] = get(dc[k]);
                cloud.log_scales[i * 3 + k] = get(scale[k]);
            }
            for (int k = 0; k < 4; ++k) {
                cloud.rotations[i * 4 + k] = get(rot[k]);
            }
            for (std::size_t k = 0; k < rest_count; ++k) {
                cloud.sh_rest[i * rest_count + k] = get(rest[k]);
            }
            cloud.opacity_logits[i] = get(&opacity);
        }
        cloud.normalize_rotations();
        return cloud;
    }

    void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path) {
        cloud.validate();
        const auto names = canonical_ply_properties(cloud.sh_degree);
        const std::size_t n = cloud.size();

        std::string out = fmt::format("ply\nformat binary_little_endian 1.0\nelement vertex {}\n", n);
        for (const auto& name : names) {
            out += fmt::format("property float {}\n", name);
        }
        out += "end_header\n";
        out.reserve(out.size() + n * names.size() * 4);

        const std::size_t rest = cloud.sh_rest.size() / std::max<std::size_t>(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < 3; ++k) {
                write_float_le(out, cloud.positions[i * 3 + k]);
            }
            for (int k = 0; k < 3; ++k) {
                write_float_le(out, cloud.sh_dc[i * 3 + k]);
            }
            for (std::size_t k = 0; k < rest; ++k) {
                write_float_le(out, cloud.sh_rest[i * rest + k]);
            }
            write_float_le(out, cloud.opacity_logits[i]);
            for (int k = 0; k < 3; ++k) {
                write_float_le(out, cloud.log_scales[i * 3 + k]);
            }
            for (int k = 0; k < 4; ++k) {
                write_float_le(out, cloud.rotations[i * 4 + k]);
            }
        }

        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        if (!file) {
            throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
        }
        file.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!file) {
            throw IoError(fmt::format("failed writing '{}'", path.string()));
        }
    }

} // namespace gsstyle
