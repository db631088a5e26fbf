#include <random>

#include <gtest/gtest.h>

#include "hl2ss/codecs.hpp"
#include "hl2ss/errors.hpp"
#include "png_reader.hpp"

using namespace hl2ss;

namespace {

DepthAbImage random_depth(std::mt19937_64& rng) {
    DepthAbImage img;
    for (auto& d : img.depth) d = static_cast<std::uint16_t>(rng());
    for (auto& a : img.ab) a = static_cast<std::uint16_t>(rng());
    return img;
}

SigmaMask random_mask(std::mt19937_64& rng) {
    SigmaMask m;
    for (auto& s : m.sigma) s = (rng() % 4 == 0) ? static_cast<std::uint8_t>(1 + rng() % 255) : 0;
    return m;
}

}  // namespace

TEST(DepthPng, AllZero) {
    const DepthAbImage zero;
    EXPECT_EQ(decode_depth_png(encode_depth_png(zero)), zero);
}

TEST(DepthPng, SinglePixelKeptOrMasked) {
    DepthAbImage img;
    img.depth[DepthAbImage::index(10, 20)] = 1000;
    img.ab[DepthAbImage::index(10, 20)] = 77;
    SigmaMask mask;
    EXPECT_EQ(decode_depth_png(encode_depth_png(img, mask)).depth[DepthAbImage::index(10, 20)], 1000);
    mask.sigma[DepthAbImage::index(10, 20)] = 255;
    const auto out = decode_depth_png(encode_depth_png(img, mask));
    EXPECT_EQ(out.depth[DepthAbImage::index(10, 20)], 0);
    EXPECT_EQ(out.ab[DepthAbImage::index(10, 20)], 77);
}

TEST(DepthPng, RandomRoundTripsWithZeroMask) {
    std::mt19937_64 rng(1);
    const SigmaMask none;
    for (int i = 0; i < 100; ++i) {
        const auto img = random_depth(rng);
        ASSERT_EQ(decode_depth_png(encode_depth_png(img, none, {static_cast<int>(i % 10)})), img);
    }
}

TEST(DepthPng, MaskedRoundTrip) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 30; ++i) {
        const auto img = random_depth(rng);
        const auto mask = random_mask(rng);
        auto expected = img;
        for (std::size_t k = 0; k < kDepthPixels; ++k)
            if (mask.sigma[k]) expected.depth[k] = 0;
        EXPECT_EQ(apply_sigma_mask(img, mask), expected);
        ASSERT_EQ(decode_depth_png(encode_depth_png(img, mask)), expected);
    }
}

TEST(DepthPng, IndependentReaderSeesPackedChannels) {
    std::mt19937_64 rng(3);
    const auto img = random_depth(rng);
    const auto mask = random_mask(rng);
    const Bytes png = encode_depth_png(img, mask, {6});
    const auto parsed = testsupport::read_png(png);
    ASSERT_EQ(parsed.width, 320u);
    ASSERT_EQ(parsed.height, 288u);
    ASSERT_EQ(parsed.bit_depth, 8);
    ASSERT_EQ(parsed.color_type, 6);
    for (std::size_t k = 0; k < kDepthPixels; ++k) {
        const std::uint16_t d = mask.sigma[k] ? 0 : img.depth[k];
        ASSERT_EQ(parsed.pixels[4 * k + 0], d & 0xFF);
        ASSERT_EQ(parsed.pixels[4 * k + 1], d >> 8);
        ASSERT_EQ(parsed.pixels[4 * k + 2], img.ab[k] & 0xFF);
        ASSERT_EQ(parsed.pixels[4 * k + 3], img.ab[k] >> 8);
    }
}

TEST(DepthPng, DecodesForeignEncoderOutput) {
    std::mt19937_64 rng(4);
    std::vector<std::uint8_t> rgba(kDepthPixels * 4);
    for (auto& b : rgba) b = static_cast<std::uint8_t>(rng());
    const auto png = testsupport::write_png(320, 288, 6, rgba);
    const auto img = decode_depth_png(png);
    for (std::size_t k = 0; k < kDepthPixels; ++k) {
        ASSERT_EQ(img.depth[k], rgba[4 * k] | (rgba[4 * k + 1] << 8));
        ASSERT_EQ(img.ab[k], rgba[4 * k + 2] | (rgba[4 * k + 3] << 8));
    }
}

TEST(DepthPng, WrongShapesRejected) {
    EXPECT_THROW(decode_depth_png(testsupport::write_png(321, 288, 6, Bytes(321 * 288 * 4))), ProtocolError);
    EXPECT_THROW(decode_depth_png(testsupport::write_png(320, 288, 2, Bytes(320 * 288 * 3))), ProtocolError);
}

TEST(DepthPng, TruncatedAndGarbageRejected) {
    const Bytes png = encode_depth_png(DepthAbImage{});
    EXPECT_THROW(decode_depth_png(ByteView(png.data(), png.size() / 2)), ProtocolError);
    EXPECT_THROW(decode_depth_png(ByteView(png.data(), 7)), ProtocolError);
    EXPECT_THROW(decode_depth_png(Bytes(100, 0x42)), ProtocolError);
    EXPECT_THROW(decode_depth_png(Bytes{}), ProtocolError);
}

TEST(DepthPng, DimensionMismatchOnEncode) {
    DepthAbImage img;
    img.depth.pop_back();
    EXPECT_THROW(encode_depth_png(img), ValidationError);
    SigmaMask mask;
    mask.sigma.resize(10);
    EXPECT_THROW(encode_depth_png(DepthAbImage{}, mask), ValidationError);
}

TEST(RawCodec, EmptyAndRandomIdentity) {
    const RawCodec codec;
    const RawFrame empty;
    EXPECT_EQ(codec.decode(codec.encode(empty)), empty);

    std::mt19937_64 rng(5);
    RawFrame f{640, 480, Bytes(640 * 480)};
    for (auto& b : f.data) b = static_cast<std::uint8_t>(rng());
    const Bytes enc = codec.encode(f);
    EXPECT_EQ(enc.size(), RawCodec::kHeaderSize + f.data.size());
    EXPECT_EQ(std::string(enc.begin(), enc.begin() + 8), "HL2SRAW0");
    EXPECT_EQ(codec.decode(enc), f);
}

TEST(RawCodec, CorruptMagicKeepsPayload) {
    const RawCodec codec;
    Bytes enc = codec.encode(RawFrame{2, 1, {1, 2}});
    enc[0] ^= 0xFF;
    try {
        codec.decode(enc);
        FAIL();
    } catch (const CodecError& e) {
        EXPECT_EQ(e.raw_payload(), enc);
    }
    EXPECT_THROW(codec.decode(Bytes(5)), CodecError);
}

TEST(RawCodec, ShapeHelpers) {
    AudioFrame a(kAudioSamplesPerFrame, kAudioChannels);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) a.pixels[i] = static_cast<float>(i) * 0.001f;
    const RawFrame raw{kAudioSamplesPerFrame, kAudioChannels, audio_to_bytes(a)};
    EXPECT_EQ(audio_from_raw(raw), a);
    EXPECT_THROW(audio_from_raw(RawFrame{1, 1, {0}}), CodecError);

    const RawFrame gray{4, 2, Bytes(8, 9)};
    EXPECT_EQ(gray_from_raw(gray).at(3, 1), 9);
    EXPECT_THROW(color_from_raw(gray), CodecError);
}
