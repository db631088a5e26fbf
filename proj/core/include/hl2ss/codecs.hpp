#pragma once

// Payload codecs.
//
// Depth frames travel as a lossless 8-bit RGBA PNG, 320x288, where every
// pixel packs [depth lo, depth hi, ab lo, ab hi]. Pixels flagged invalid by
// the sigma channel have their depth zeroed before packing; the sigma
// channel itself is never transmitted.
//
// Video and audio go through PayloadCodec. Only the RAW test codec ships:
//
//   "HL2SRAW0" | u32 width | u32 height | data

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "hl2ss/bytes.hpp"
#include "hl2ss/image.hpp"

namespace hl2ss {

inline constexpr int kDepthWidth = 320;
inline constexpr int kDepthHeight = 288;
inline constexpr std::size_t kDepthPixels = static_cast<std::size_t>(kDepthWidth) * kDepthHeight;

/// Paired depth (millimeters, 0 = invalid) and active-brightness images.
struct DepthAbImage {
    std::vector<std::uint16_t> depth = std::vector<std::uint16_t>(kDepthPixels, 0);
    std::vector<std::uint16_t> ab = std::vector<std::uint16_t>(kDepthPixels, 0);

    static std::size_t index(int u, int v) noexcept { return static_cast<std::size_t>(v) * kDepthWidth + u; }

    bool operator==(const DepthAbImage&) const = default;
};

/// Nonzero sigma marks an invalid depth pixel.
struct SigmaMask {
    std::vector<std::uint8_t> sigma = std::vector<std::uint8_t>(kDepthPixels, 0);
};

struct PngOptions {
    int compression_level = 1;
};

/// Copy of `img` with depth zeroed wherever the mask is nonzero.
DepthAbImage apply_sigma_mask(const DepthAbImage& img, const SigmaMask& mask);

/// Throws ValidationError when image or mask dimensions are wrong.
Bytes encode_depth_png(const DepthAbImage& img, const SigmaMask& mask, const PngOptions& options = {});
Bytes encode_depth_png(const DepthAbImage& img, const PngOptions& options = {});

/// Throws ProtocolError on malformed, truncated or wrongly shaped PNGs.
DepthAbImage decode_depth_png(ByteView payload);

// ---------------------------------------------------------------------------

struct RawFrame {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    Bytes data;

    bool operator==(const RawFrame&) const = default;
};

/// Boundary for H264 / HEVC / AAC implementations.
class PayloadCodec {
public:
    virtual ~PayloadCodec() = default;

    virtual std::string_view codec_id() const noexcept = 0;
    virtual Bytes encode(const RawFrame& frame) const = 0;
    /// Throws CodecError.
    virtual RawFrame decode(ByteView payload) const = 0;
};

class RawCodec final : public PayloadCodec {
public:
    static constexpr std::array<char, 8> kMagic{'H', 'L', '2', 'S', 'R', 'A', 'W', '0'};
    static constexpr std::size_t kHeaderSize = 16;

    std::string_view codec_id() const noexcept override { return "raw"; }
    Bytes encode(const RawFrame& frame) const override;
    RawFrame decode(ByteView payload) const override;
};

std::shared_ptr<const PayloadCodec> raw_codec();

// Helpers mapping decoded RAW frames to the per-stream array shapes.

/// Planar 2 x 1024 float samples.
inline constexpr int kAudioChannels = 2;
inline constexpr int kAudioSamplesPerFrame = 1024;
inline constexpr int kAudioSampleRate = 48000;

using AudioFrame = Image<float>;  // width = samples, height = channels

Bytes audio_to_bytes(const AudioFrame& audio);
AudioFrame audio_from_raw(const RawFrame& raw);
GrayImage gray_from_raw(const RawFrame& raw);
ColorImage color_from_raw(const RawFrame& raw);

}  // namespace hl2ss
