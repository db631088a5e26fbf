#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hl2ss {

/// Dense interleaved image, row-major, `channels` values per pixel.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> pixels;

    Image() = default;
    Image(int w, int h, int c = 1, T fill = T{})
        : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t index(int u, int v, int c = 0) const noexcept {
        return (static_cast<std::size_t>(v) * width + u) * channels + c;
    }
    T& at(int u, int v, int c = 0) noexcept { return pixels[index(u, v, c)]; }
    const T& at(int u, int v, int c = 0) const noexcept { return pixels[index(u, v, c)]; }

    bool contains(int u, int v) const noexcept { return u >= 0 && v >= 0 && u < width && v < height; }

    bool operator==(const Image&) const = default;
};

using GrayImage = Image<std::uint8_t>;
using ColorImage = Image<std::uint8_t>;  // 3 channels, BGR
using DepthImage = Image<std::uint16_t>;

}  // namespace hl2ss
