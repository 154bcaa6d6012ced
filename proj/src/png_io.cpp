#include "auggs/png_io.hpp"

#include "auggs/error.hpp"

#include <png.h>

#include <cstring>

namespace auggs {

std::string encode_png(const RawPng& raw) {
    if (raw.width <= 0 || raw.height <= 0 || (raw.channels != 1 && raw.channels != 3) ||
        raw.pixels.size() != static_cast<std::size_t>(raw.width) * raw.height * raw.channels) {
        throw ContractViolation("encode_png: inconsistent image buffer");
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(raw.width);
    image.height = static_cast<png_uint_32>(raw.height);
    image.format = raw.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, raw.pixels.data(), 0, nullptr)) {
        throw FormatError(std::string("png encode failed: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, raw.pixels.data(), 0, nullptr)) {
        throw FormatError(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

RawPng decode_png(std::string_view bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw FormatError(std::string("png decode failed: ") + image.message);
    }
    RawPng raw;
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    raw.width = static_cast<int>(image.width);
    raw.height = static_cast<int>(image.height);
    raw.channels = color ? 3 : 1;
    raw.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, raw.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw FormatError(std::string("png decode failed: ") + image.message);
    }
    return raw;
}

} // namespace auggs
