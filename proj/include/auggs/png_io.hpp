#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace auggs {

struct RawPng {
    int width = 0;
    int height = 0;
    /// 1 (gray) or 3 (RGB) after expansion.
    int channels = 0;
    std::vector<std::uint8_t> pixels;
};

/// 8-bit PNG encoding of interleaved pixels with 1 or 3 channels.
std::string encode_png(const RawPng& raw);

/// Decodes to 8-bit gray or RGB; palette and 16-bit inputs are converted, alpha is removed.
RawPng decode_png(std::string_view bytes);

} // namespace auggs
