#include "gsstyle/image_io.hpp"

#include "gsstyle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fmt/core.h>
#include <memory>
#include <png.h>
#include <vector>

namespace gsstyle {

    namespace {

        struct FileCloser {
            void operator()(std::FILE* f) const noexcept {
                if (f) {
                    std::fclose(f);
                }
            }
        };
        using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

    } // namespace

    double linear_to_srgb(double v) noexcept {
        v = std::clamp(v, 0.0, 1.0);
        return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
    }

    std::uint8_t quantize_unit(double v) noexcept {
        v = std::clamp(v, 0.0, 1.0);
        return static_cast<std::uint8_t>(std::lround(v * 255.0));
    }

    void write_png(const std::filesystem::path& path, const Image& image, Transfer transfer) {
        if (image.channels() != 1 && image.channels() != 3) {
            throw ArgumentError(fmt::format("PNG export needs 1 or 3 channels, got {}", image.channels()));
        }
        if (image.width() <= 0 || image.height() <= 0) {
            throw ArgumentError("cannot export a zero-size image");
        }
        FilePtr file(std::fopen(path.string().c_str(), "wb"));
        if (!file) {
            throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
        }
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png ? png_create_info_struct(png) : nullptr;
        if (!png || !info) {
            png_destroy_write_struct(&png, &info);
            throw IoError("libpng initialization failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw IoError(fmt::format("libpng failed while writing '{}'", path.string()));
        }
        png_init_io(png, file.get());
        const int color_type = image.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
        png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()),
                     8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * image.channels());
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < image.width(); ++x) {
                for (int c = 0; c < image.channels(); ++c) {
                    double v = image.at(x, y, c);
                    if (transfer == Transfer::Srgb) {
                        v = linear_to_srgb(v);
                    }
                    row[static_cast<std::size_t>(x) * image.channels() + c] = quantize_unit(v);
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }

    Image read_png(const std::filesystem::path& path) {
        FilePtr file(std::fopen(path.string().c_str(), "rb"));
        if (!file) {
            throw IoError(fmt::format("cannot open '{}'", path.string()));
        }
        png_byte sig[8];
        if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
            throw IoError(fmt::format("'{}' is not a PNG file", path.string()));
        }
        png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png ? png_create_info_struct(png) : nullptr;
        if (!png || !info) {
            png_destroy_read_struct(&png, &info, nullptr);
            throw IoError("libpng initialization failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_read_struct(&png, &info, nullptr);
            throw IoError(fmt::format("libpng failed while reading '{}'", path.string()));
        }
        png_init_io(png, file.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);

        const png_byte color_type = png_get_color_type(png, info);
        if (png_get_bit_depth(png, info) == 16) {
            png_set_strip_16(png);
        }
        if (color_type == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(png);
        }
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
            if (png_get_bit_depth(png, info) < 8) {
                png_set_expand_gray_1_2_4_to_8(png);
            }
            png_set_gray_to_rgb(png);
        }
        if (color_type & PNG_COLOR_MASK_ALPHA) {
            png_set_strip_alpha(png);
        }
        if (png_get_valid(png, info, PNG_INFO_tRNS)) {
            png_set_tRNS_to_alpha(png);
            png_set_strip_alpha(png);
        }
        png_read_update_info(png, info);

        const int width = static_cast<int>(png_get_image_width(png, info));
        const int height = static_cast<int>(png_get_image_height(png, info));
        const auto rowbytes = png_get_rowbytes(png, info);
        std::vector<png_byte> buffer(rowbytes * static_cast<std::size_t>(height));
        std::vector<png_bytep> rows(static_cast<std::size_t>(height));
        for (int y = 0; y < height; ++y) {
            rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * static_cast<std::size_t>(y);
        }
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        png_destroy_read_struct(&png, &info, nullptr);

        Image image(width, height, 3);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    image.at(x, y, c) = rows[static_cast<std::size_t>(y)][x * 3 + c] / 255.0;
                }
            }
        }
        return image;
    }

} // namespace gsstyle
