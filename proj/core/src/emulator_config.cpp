#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hl2ss/emulator.hpp"
#include "hl2ss/errors.hpp"

namespace hl2ss {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T number(const json& v, const std::string& key, T lo, T hi) {
    if (!v.is_number()) throw ValidationError("'" + key + "' must be a number");
    const double d = v.get<double>();
    if (d < static_cast<double>(lo) || d > static_cast<double>(hi)) {
        throw ValidationError("'" + key + "' out of range");
    }
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw ValidationError("'" + key + "' must be an integer");
        return static_cast<T>(v.get<std::int64_t>());
    } else {
        return static_cast<T>(d);
    }
}

}  // namespace

EmulatorConfig parse_emulator_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("emulator config: ") + e.what());
    }
    if (!root.is_object()) throw ValidationError("emulator config must be a JSON object");
    reject_unknown(root,
                   {"bind_address", "port_offset", "clock_multiplier", "clock_origin_ticks", "rates", "pv_modes",
                    "tracking_loss", "version", "handshake_timeout_ms", "png_compression_level"},
                   "emulator config");

    EmulatorConfig cfg;
    if (root.contains("bind_address")) {
        if (!root["bind_address"].is_string()) throw ValidationError("'bind_address' must be a string");
        cfg.bind_address = root["bind_address"].get<std::string>();
    }
    if (root.contains("port_offset")) cfg.port_offset = number<std::uint16_t>(root["port_offset"], "port_offset", 0, 60000);
    if (root.contains("clock_multiplier")) {
        cfg.clock_multiplier = number<double>(root["clock_multiplier"], "clock_multiplier", 1e-3, 1e3);
    }
    if (root.contains("clock_origin_ticks")) {
        cfg.clock_origin_ticks =
            number<std::uint64_t>(root["clock_origin_ticks"], "clock_origin_ticks", 0, std::uint64_t{1} << 62);
    }
    if (root.contains("rates")) {
        const auto& r = root["rates"];
        if (!r.is_object()) throw ValidationError("'rates' must be an object");
        reject_unknown(r, {"vlc", "depth", "imu_accel", "imu_gyro", "imu_mag", "spatial_input"}, "rates");
        auto rate = [&](const char* key, std::uint32_t& out, std::uint32_t hi) {
            if (r.contains(key)) out = number<std::uint32_t>(r[key], key, 1, hi);
        };
        rate("vlc", cfg.rates.vlc, 120);
        rate("depth", cfg.rates.depth, 5);
        rate("imu_accel", cfg.rates.imu_accel, 1000);
        rate("imu_gyro", cfg.rates.imu_gyro, 1000);
        rate("imu_mag", cfg.rates.imu_mag, 1000);
        rate("spatial_input", cfg.rates.spatial_input, 240);
    }
    if (root.contains("pv_modes")) {
        const auto& p = root["pv_modes"];
        if (p.is_string()) {
            std::filesystem::path path = p.get<std::string>();
            if (path.is_relative()) path = base_dir / path;
            cfg.pv_modes = PvModeWhitelist::load(path);
        } else if (p.is_array()) {
            std::string text;
            for (const auto& line : p) {
                if (!line.is_string()) throw ValidationError("'pv_modes' entries must be strings like 1280x720@30");
                text += line.get<std::string>() + "\n";
            }
            cfg.pv_modes = PvModeWhitelist::parse(text);
        } else {
            throw ValidationError("'pv_modes' must be a file name or a list of WxH@FPS strings");
        }
    }
    if (root.contains("tracking_loss")) {
        const auto& t = root["tracking_loss"];
        if (!t.is_array()) throw ValidationError("'tracking_loss' must be a list of [start, end] pairs");
        for (const auto& iv : t) {
            if (!iv.is_array() || iv.size() != 2) throw ValidationError("tracking_loss interval must be [start, end]");
            TrackingLossInterval i{number<double>(iv[0], "tracking_loss", 0.0, 1e9),
                                   number<double>(iv[1], "tracking_loss", 0.0, 1e9)};
            if (i.end_s <= i.start_s) throw ValidationError("tracking_loss interval must have end > start");
            cfg.tracking_loss.push_back(i);
        }
    }
    if (root.contains("version")) {
        const auto& v = root["version"];
        if (!v.is_array() || v.size() != 4) throw ValidationError("'version' must be four integers");
        for (std::size_t i = 0; i < 4; ++i) cfg.version[i] = number<std::uint16_t>(v[i], "version", 0, 65535);
    }
    if (root.contains("handshake_timeout_ms")) {
        cfg.handshake_timeout =
            net::Duration(number<std::int64_t>(root["handshake_timeout_ms"], "handshake_timeout_ms", 1, 600000));
    }
    if (root.contains("png_compression_level")) {
        cfg.png_compression_level = number<int>(root["png_compression_level"], "png_compression_level", 0, 9);
    }
    return cfg;
}

EmulatorConfig load_emulator_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read emulator config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_emulator_config(ss.str(), path.parent_path());
}

}  // namespace hl2ss
