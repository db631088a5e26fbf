#include "hl2ss/codecs.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <string>

#include "hl2ss/errors.hpp"

namespace hl2ss {

namespace {

void check_dims(const DepthAbImage& img) {
    if (img.depth.size() != kDepthPixels || img.ab.size() != kDepthPixels) {
        throw ValidationError("depth/ab images must be 320x288 (" + std::to_string(kDepthPixels) + " pixels), got " +
                              std::to_string(img.depth.size()) + " / " + std::to_string(img.ab.size()));
    }
}

struct PngWriteState {
    Bytes out;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t length) {
    auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
    st->out.insert(st->out.end(), data, data + length);
}

void png_flush_cb(png_structp) {}

struct PngReadState {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t length) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->size - st->pos < length) png_error(png, "truncated PNG stream");
    std::memcpy(out, st->data + st->pos, length);
    st->pos += length;
}

// Error messages are copied here by the error callback before longjmp.
struct PngErrorSink {
    char message[256];
};

void png_error_cb(png_structp png, png_const_charp msg) {
    auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
    std::strncpy(sink->message, msg, sizeof(sink->message) - 1);
    sink->message[sizeof(sink->message) - 1] = '\0';
    png_longjmp(png, 1);
}

void png_warning_cb(png_structp, png_const_charp) {}

// Only trivially destructible locals live between setjmp and the libpng
// calls that may longjmp.
bool write_rgba(const std::uint8_t* rgba, png_bytep* rows, int level, PngWriteState* state, PngErrorSink* err) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_error_cb, png_warning_cb);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, state, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, kDepthWidth, kDepthHeight, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, level);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
    for (int v = 0; v < kDepthHeight; ++v) {
        rows[v] = const_cast<png_bytep>(rgba + static_cast<std::size_t>(v) * kDepthWidth * 4);
    }
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

enum class ReadStatus { Ok, Error, BadShape };

ReadStatus read_rgba(PngReadState* src, std::uint8_t* rgba, png_bytep* rows, PngErrorSink* err,
                     png_uint_32* width, png_uint_32* height, int* depth, int* color) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err, png_error_cb, png_warning_cb);
    if (!png) return ReadStatus::Error;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return ReadStatus::Error;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return ReadStatus::Error;
    }
    png_set_read_fn(png, src, png_read_cb);
    png_read_info(png, info);
    int interlace = 0;
    png_get_IHDR(png, info, width, height, depth, color, &interlace, nullptr, nullptr);
    if (*width != static_cast<png_uint_32>(kDepthWidth) || *height != static_cast<png_uint_32>(kDepthHeight) ||
        *depth != 8 || *color != PNG_COLOR_TYPE_RGBA) {
        png_destroy_read_struct(&png, &info, nullptr);
        return ReadStatus::BadShape;
    }
    if (interlace != PNG_INTERLACE_NONE) png_set_interlace_handling(png);
    png_read_update_info(png, info);
    for (int v = 0; v < kDepthHeight; ++v) rows[v] = rgba + static_cast<std::size_t>(v) * kDepthWidth * 4;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return ReadStatus::Ok;
}

}  // namespace

DepthAbImage apply_sigma_mask(const DepthAbImage& img, const SigmaMask& mask) {
    check_dims(img);
    if (mask.sigma.size() != kDepthPixels) {
        throw ValidationError("sigma mask must be 320x288, got " + std::to_string(mask.sigma.size()) + " pixels");
    }
    DepthAbImage out = img;
    for (std::size_t i = 0; i < kDepthPixels; ++i) {
        if (mask.sigma[i] != 0) out.depth[i] = 0;
    }
    return out;
}

Bytes encode_depth_png(const DepthAbImage& img, const SigmaMask& mask, const PngOptions& options) {
    return encode_depth_png(apply_sigma_mask(img, mask), options);
}

Bytes encode_depth_png(const DepthAbImage& img, const PngOptions& options) {
    check_dims(img);
    std::vector<std::uint8_t> rgba(kDepthPixels * 4);
    for (std::size_t i = 0; i < kDepthPixels; ++i) {
        rgba[4 * i + 0] = static_cast<std::uint8_t>(img.depth[i]);
        rgba[4 * i + 1] = static_cast<std::uint8_t>(img.depth[i] >> 8);
        rgba[4 * i + 2] = static_cast<std::uint8_t>(img.ab[i]);
        rgba[4 * i + 3] = static_cast<std::uint8_t>(img.ab[i] >> 8);
    }
    std::vector<png_bytep> rows(kDepthHeight);
    PngWriteState state;
    state.out.reserve(kDepthPixels * 2);
    PngErrorSink err{};
    if (!write_rgba(rgba.data(), rows.data(), options.compression_level, &state, &err)) {
        throw CodecError(std::string("png encode failed: ") + err.message);
    }
    return std::move(state.out);
}

DepthAbImage decode_depth_png(ByteView payload) {
    std::vector<std::uint8_t> rgba(kDepthPixels * 4);
    std::vector<png_bytep> rows(kDepthHeight);
    PngReadState src{payload.data(), payload.size(), 0};
    PngErrorSink err{};
    png_uint_32 width = 0, height = 0;
    int depth = 0, color = 0;
    switch (read_rgba(&src, rgba.data(), rows.data(), &err, &width, &height, &depth, &color)) {
        case ReadStatus::Ok: break;
        case ReadStatus::Error: throw ProtocolError(std::string("depth png: ") + err.message);
        case ReadStatus::BadShape:
            throw ProtocolError("depth png must be 320x288 8-bit RGBA, got " + std::to_string(width) + "x" +
                                std::to_string(height) + " depth " + std::to_string(depth) + " color type " +
                                std::to_string(color));
    }
    DepthAbImage img;
    for (std::size_t i = 0; i < kDepthPixels; ++i) {
        img.depth[i] = static_cast<std::uint16_t>(rgba[4 * i] | (rgba[4 * i + 1] << 8));
        img.ab[i] = static_cast<std::uint16_t>(rgba[4 * i + 2] | (rgba[4 * i + 3] << 8));
    }
    return img;
}

// ---------------------------------------------------------------------------

Bytes RawCodec::encode(const RawFrame& frame) const {
    ByteWriter w(kHeaderSize + frame.data.size());
    w.bytes(ByteView(reinterpret_cast<const std::uint8_t*>(kMagic.data()), kMagic.size()))
        .u32(frame.width)
        .u32(frame.height)
        .bytes(frame.data);
    return std::move(w).take();
}

RawFrame RawCodec::decode(ByteView payload) const {
    if (payload.size() < kHeaderSize) {
        throw CodecError("raw codec: payload shorter than header", Bytes(payload.begin(), payload.end()));
    }
    if (std::memcmp(payload.data(), kMagic.data(), kMagic.size()) != 0) {
        throw CodecError("raw codec: bad magic", Bytes(payload.begin(), payload.end()));
    }
    RawFrame f;
    f.width = load_u32(payload.data() + 8);
    f.height = load_u32(payload.data() + 12);
    f.data.assign(payload.begin() + kHeaderSize, payload.end());
    return f;
}

std::shared_ptr<const PayloadCodec> raw_codec() {
    static const auto codec = std::make_shared<const RawCodec>();
    return codec;
}

// ---------------------------------------------------------------------------

Bytes audio_to_bytes(const AudioFrame& audio) {
    Bytes out(audio.pixels.size() * 4);
    for (std::size_t i = 0; i < audio.pixels.size(); ++i) store_f32(out.data() + 4 * i, audio.pixels[i]);
    return out;
}

AudioFrame audio_from_raw(const RawFrame& raw) {
    if (raw.width != kAudioSamplesPerFrame || raw.height != kAudioChannels ||
        raw.data.size() != static_cast<std::size_t>(kAudioSamplesPerFrame) * kAudioChannels * 4) {
        throw CodecError("audio frame must be 2x1024 float", raw.data);
    }
    AudioFrame a(kAudioSamplesPerFrame, kAudioChannels);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) a.pixels[i] = load_f32(raw.data.data() + 4 * i);
    return a;
}

GrayImage gray_from_raw(const RawFrame& raw) {
    if (raw.data.size() != static_cast<std::size_t>(raw.width) * raw.height) {
        throw CodecError("gray frame size does not match " + std::to_string(raw.width) + "x" +
                             std::to_string(raw.height),
                         raw.data);
    }
    GrayImage img(static_cast<int>(raw.width), static_cast<int>(raw.height), 1);
    img.pixels = raw.data;
    return img;
}

ColorImage color_from_raw(const RawFrame& raw) {
    if (raw.data.size() != static_cast<std::size_t>(raw.width) * raw.height * 3) {
        throw CodecError("color frame size does not match " + std::to_string(raw.width) + "x" +
                             std::to_string(raw.height) + "x3",
                         raw.data);
    }
    ColorImage img(static_cast<int>(raw.width), static_cast<int>(raw.height), 3);
    img.pixels = raw.data;
    return img;
}

}  // namespace hl2ss
