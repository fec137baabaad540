#include "dran/image_io.hpp"

#include <png.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "dran/error.hpp"

namespace dran::io {
namespace {

struct PngImage {
    png_image image{};

    explicit PngImage(const std::string& path) {
        image.version = PNG_IMAGE_VERSION;
        if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
            throw IoError(path + ": " + image.message);
        }
    }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;

    std::vector<png_byte> read(const std::string& path, png_uint_32 format) {
        image.format = format;
        std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
        if (png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr) == 0) {
            throw IoError(path + ": " + image.message);
        }
        return pixels;
    }
};

void write_png(const std::string& path, png_uint_32 format, int width, int height,
               const std::vector<png_byte>& pixels) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path temp = target;
    temp += ".tmp" + std::to_string(::getpid());

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.format = format;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    if (png_image_write_to_file(&image, temp.c_str(), 0, pixels.data(), 0, nullptr) == 0) {
        const std::string message = image.message;
        png_image_free(&image);
        std::error_code ignored;
        fs::remove(temp, ignored);
        throw IoError(path + ": " + message);
    }
    png_image_free(&image);
    std::error_code ec;
    fs::rename(temp, target, ec);
    if (ec) {
        fs::remove(temp, ec);
        throw IoError(path + ": cannot move output into place");
    }
}

}  // namespace

unsigned char quantize(double value) noexcept {
    const double clamped = std::clamp(value, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

FeatureMap read_rgb_png(const std::string& path) {
    PngImage png(path);
    const int w = static_cast<int>(png.image.width);
    const int h = static_cast<int>(png.image.height);
    const auto pixels = png.read(path, PNG_FORMAT_RGB);
    FeatureMap map(3, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                      static_cast<std::size_t>(x)) * 3;
            for (int c = 0; c < 3; ++c) map.at(c, y, x) = pixels[base + static_cast<std::size_t>(c)] / 255.0;
        }
    }
    return map;
}

SegMask read_mask_png(const std::string& path) {
    PngImage png(path);
    if ((png.image.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR)) != 0) {
        throw IoError(path + ": mask must be an 8-bit grayscale PNG");
    }
    const int w = static_cast<int>(png.image.width);
    const int h = static_cast<int>(png.image.height);
    auto pixels = png.read(path, PNG_FORMAT_GRAY);
    return SegMask(h, w, std::vector<std::uint8_t>(pixels.begin(), pixels.end()));
}

void write_rgb_png(const std::string& path, const FeatureMap& image) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw InvalidArgument("write_rgb_png: expected 1 or 3 channels, got " +
                              std::to_string(image.channels()));
    }
    const int w = image.width();
    const int h = image.height();
    std::vector<png_byte> pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                      static_cast<std::size_t>(x)) * 3;
            for (int c = 0; c < 3; ++c) {
                pixels[base + static_cast<std::size_t>(c)] =
                    quantize(image.at(image.channels() == 3 ? c : 0, y, x));
            }
        }
    }
    write_png(path, PNG_FORMAT_RGB, w, h, pixels);
}

void write_mask_png(const std::string& path, const SegMask& mask) {
    const auto labels = mask.labels();
    write_png(path, PNG_FORMAT_GRAY, mask.width(), mask.height(),
              std::vector<png_byte>(labels.begin(), labels.end()));
}

}  // namespace dran::io
