// Helper for the Pillow interoperability check.
//
//   write_depth_pngs write <dir> <count>   writes depth_N.png and depth_N.rgba
//   write_depth_pngs decode <png> <out>    writes depth then AB as u16 LE

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <string>

#include "hl2ss/codecs.hpp"
#include "hl2ss/errors.hpp"

using namespace hl2ss;

namespace {

void write_file(const std::filesystem::path& p, const Bytes& b) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

Bytes read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

int write_set(const std::filesystem::path& dir, int count) {
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(31337);
    for (int i = 0; i < count; ++i) {
        DepthAbImage img;
        SigmaMask mask;
        for (std::size_t k = 0; k < kDepthPixels; ++k) {
            img.depth[k] = static_cast<std::uint16_t>(rng());
            img.ab[k] = static_cast<std::uint16_t>(rng());
            mask.sigma[k] = rng() % 4 == 0 ? 0x80 : 0;
        }
        const auto masked = apply_sigma_mask(img, mask);
        Bytes rgba(kDepthPixels * 4);
        for (std::size_t k = 0; k < kDepthPixels; ++k) {
            rgba[4 * k + 0] = static_cast<std::uint8_t>(masked.depth[k]);
            rgba[4 * k + 1] = static_cast<std::uint8_t>(masked.depth[k] >> 8);
            rgba[4 * k + 2] = static_cast<std::uint8_t>(masked.ab[k]);
            rgba[4 * k + 3] = static_cast<std::uint8_t>(masked.ab[k] >> 8);
        }
        const std::string stem = "depth_" + std::to_string(i);
        write_file(dir / (stem + ".png"), encode_depth_png(img, mask, {i % 10}));
        write_file(dir / (stem + ".rgba"), rgba);
    }
    return 0;
}

int decode_one(const std::filesystem::path& png, const std::filesystem::path& out) {
    const auto img = decode_depth_png(read_file(png));
    Bytes raw;
    raw.reserve(kDepthPixels * 4);
    for (const auto* plane : {&img.depth, &img.ab}) {
        for (std::uint16_t v : *plane) {
            raw.push_back(static_cast<std::uint8_t>(v));
            raw.push_back(static_cast<std::uint8_t>(v >> 8));
        }
    }
    write_file(out, raw);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const std::string cmd = argc > 1 ? argv[1] : "";
        if (cmd == "write" && argc == 4) return write_set(argv[2], std::stoi(argv[3]));
        if (cmd == "decode" && argc == 4) return decode_one(argv[2], argv[3]);
        std::cerr << "usage: write_depth_pngs write <dir> <count> | decode <png> <out>\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
