#include "hl2ss_cli/cli.hpp"

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "hl2ss/calibration.hpp"
#include "hl2ss/client.hpp"
#include "hl2ss/emulator.hpp"
#include "hl2ss/errors.hpp"
#include "hl2ss/recording.hpp"

namespace hl2ss::cli {

namespace {

std::atomic<bool> g_interrupt{false};

// ---------------------------------------------------------------------------
// argument helpers

StreamPort parse_stream_port(const std::string& text) {
    const auto p = port_from_name(text);
    if (!p || !is_data_stream(*p)) throw UsageError("'" + text + "' is not a stream port (name or number)");
    return *p;
}

struct VideoFlags {
    int width = 0;
    int height = 0;
    int fps = 0;
    std::uint32_t bitrate = 0;
    std::string pv_modes;

    void add(CLI::App& app) {
        app.add_option("--width", width, "PV width");
        app.add_option("--height", height, "PV height");
        app.add_option("--fps", fps, "PV frame rate");
        app.add_option("--bitrate", bitrate, "Video bitrate in bits/s");
        app.add_option("--pv-modes", pv_modes, "File of WxH@FPS lines accepted for PV");
    }

    StreamConfig apply(StreamPort port, StreamConfig cfg) const {
        if (auto* v = std::get_if<VideoConfig>(&cfg)) {
            if (width) v->width = static_cast<std::uint16_t>(width);
            if (height) v->height = static_cast<std::uint16_t>(height);
            if (fps) v->framerate = static_cast<std::uint8_t>(fps);
            if (bitrate) v->bitrate = bitrate;
        } else if (width || height || fps || bitrate) {
            throw UsageError(std::string("--width/--height/--fps/--bitrate do not apply to ") +
                             std::string(port_name(port)));
        }
        return cfg;
    }

    PvModeWhitelist whitelist() const { return pv_modes.empty() ? PvModeWhitelist() : PvModeWhitelist::load(pv_modes); }
};

std::string hex(ByteView b, std::size_t limit = 32) {
    std::ostringstream ss;
    ss << std::hex << std::setfill('0');
    for (std::size_t i = 0; i < b.size() && i < limit; ++i) ss << std::setw(2) << static_cast<int>(b[i]);
    if (b.size() > limit) ss << "...";
    return ss.str();
}

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Sleeps in short slices until `done` returns true, the deadline passes or
/// an interrupt arrives.
template <typename Done>
void wait_loop(double seconds, Done&& done) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(seconds);
    while (!g_interrupt.load() && !done()) {
        if (seconds > 0 && std::chrono::steady_clock::now() >= deadline) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

// ---------------------------------------------------------------------------
// scene script tokens

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream ss{std::string(line)};
    for (std::string w; ss >> w;) out.push_back(w);
    return out;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
    T v{};
    const char* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) throw UsageError(std::string("bad ") + what + " '" + s + "'");
    return v;
}

std::uint32_t parse_key(const std::string& s, std::uint32_t last_key) {
    if (s == "$") return last_key;
    return parse_number<std::uint32_t>(s, "key");
}

Bytes parse_hex(const std::string& s) {
    if (s.size() % 2) throw UsageError("hex payload must have an even number of digits");
    Bytes out;
    for (std::size_t i = 0; i < s.size(); i += 2) {
        std::uint8_t v = 0;
        const auto [p, ec] = std::from_chars(s.data() + i, s.data() + i + 2, v, 16);
        if (ec != std::errc() || p != s.data() + i + 2) throw UsageError("bad hex digits in '" + s + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

std::optional<SceneCommand> parse_scene_line(std::string_view raw, std::uint32_t last_key) {
    std::string_view line = raw.substr(0, raw.find('#'));
    const auto words = split_words(line);
    if (words.empty()) return std::nullopt;
    const std::string& op = words[0];
    auto need = [&](std::size_t n) {
        if (words.size() != n + 1) {
            throw UsageError("'" + op + "' takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
        }
    };
    auto f = [&](std::size_t i) {
        // from_chars ignores the locale.
        float v = 0.0f;
        const auto& s = words[i];
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) throw UsageError("bad number '" + s + "'");
        return v;
    };
    auto key = [&](std::size_t i) { return parse_key(words[i], last_key); };

    if (op == "create_primitive" || op == "create") {
        need(1);
        const auto type = primitive_from_name(words[1]);
        if (!type) throw UsageError("unknown primitive '" + words[1] + "'");
        return CreatePrimitive{*type};
    }
    if (op == "set_active") {
        need(2);
        return SetActive{key(1), parse_number<std::uint32_t>(words[2], "state")};
    }
    if (op == "set_world_transform") {
        need(11);
        SetWorldTransform t;
        t.key = key(1);
        t.position = {f(2), f(3), f(4)};
        t.rotation = {f(5), f(6), f(7), f(8)};
        t.scale = {f(9), f(10), f(11)};
        return t;
    }
    if (op == "set_color") {
        need(5);
        return SetColor{key(1), {f(2), f(3), f(4), f(5)}};
    }
    if (op == "set_texture") {
        need(2);
        return SetTexture{key(1), read_file(words[2])};
    }
    if (op == "create_text") {
        need(0);
        return CreateText{};
    }
    if (op == "set_text") {
        if (words.size() < 7) throw UsageError("'set_text' takes key size r g b a text...");
        SetText t;
        t.key = key(1);
        t.font_size = f(2);
        t.rgba = {f(3), f(4), f(5), f(6)};
        // Text is the rest of the line after the sixth argument, verbatim.
        std::size_t pos = 0;
        for (int w = 0; w < 7; ++w) {
            pos = line.find_first_not_of(" \t", pos);
            pos = line.find_first_of(" \t", pos);
            if (pos == std::string_view::npos) break;
        }
        pos = line.find_first_not_of(" \t", pos);
        std::string_view text = pos == std::string_view::npos ? std::string_view() : line.substr(pos);
        while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
        t.text = std::string(text);
        return t;
    }
    if (op == "remove") {
        need(1);
        return Remove{key(1)};
    }
    if (op == "remove_all") {
        need(0);
        return RemoveAll{};
    }
    if (op == "begin_display_list") {
        need(0);
        return BeginDisplayList{};
    }
    if (op == "end_display_list") {
        need(0);
        return EndDisplayList{};
    }
    if (op == "set_target_mode") {
        need(1);
        return SetTargetMode{parse_number<std::uint32_t>(words[1], "mode")};
    }
    if (op == "raw") {
        if (words.size() < 2 || words.size() > 3) throw UsageError("'raw' takes an id and optional hex params");
        IpcMessage msg;
        msg.command_id = parse_number<std::uint32_t>(words[1], "command id");
        if (!is_scene_command_id(msg.command_id)) {
            throw UsageError("command id " + words[1] + " is not a remote-scene command");
        }
        if (words.size() == 3) msg.params = parse_hex(words[2]);
        try {
            return decode_scene(msg);
        } catch (const ProtocolError& e) {
            throw UsageError(e.what());
        }
    }
    throw UsageError("unknown scene command '" + op + "'");
}

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const TransportError*>(&e)) return kExitTransport;
    if (dynamic_cast<const ProtocolError*>(&e) || dynamic_cast<const HandshakeError*>(&e) ||
        dynamic_cast<const CodecError*>(&e)) {
        return kExitProtocol;
    }
    return kExitUsage;
}

void request_interrupt() noexcept { g_interrupt.store(true); }
void clear_interrupt() noexcept { g_interrupt.store(false); }
bool interrupt_requested() noexcept { return g_interrupt.load(); }

// ---------------------------------------------------------------------------
// commands

namespace {

struct Common {
    std::string host = "127.0.0.1";
    std::uint16_t port_offset = 0;

    void add(CLI::App& app) {
        app.add_option("--host", host, "Server address")->capture_default_str();
        app.add_option("--port-offset", port_offset, "Added to every protocol port");
    }

    ClientOptions client() const {
        ClientOptions o;
        o.port_offset = port_offset;
        return o;
    }
};

int cmd_probe(const Common& c, std::ostream& out) {
    ControlClient control(c.host, c.client());
    out << format_version(control.get_version()) << "\n";
    return kExitOk;
}

struct RecordArgs {
    std::string port;
    int mode = 0;
    double duration = 2.0;
    std::string out;
    VideoFlags video;
};

int cmd_record(const Common& c, const RecordArgs& a, std::ostream& out) {
    const StreamPort port = parse_stream_port(a.port);
    const StreamMode mode = mode_from_int(a.mode);
    if (mode == StreamMode::MODE_2) throw UsageError("mode 2 is a calibration download; use 'calib'");
    if (!supports_mode(port, mode)) {
        throw UnsupportedError(std::string(port_name(port)) + " does not support mode " + std::to_string(a.mode));
    }
    if (!(a.duration > 0)) throw UsageError("--duration must be positive");

    ClientOptions opts = c.client();
    opts.pv_modes = a.video.whitelist();
    RxSession rx(c.host, port, a.video.apply(port, default_config(port, mode)), opts);
    rx.open();
    RecordingWriter writer(a.out, port, mode, rx.config_blob());

    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    std::thread timer([&] {
        std::unique_lock lock(mu);
        cv.wait_for(lock, std::chrono::duration<double>(a.duration), [&] { return done; });
        rx.close();
    });
    auto stop_timer = [&] {
        {
            std::lock_guard lock(mu);
            done = true;
        }
        cv.notify_all();
        if (timer.joinable()) timer.join();
    };

    try {
        for (;;) writer.write(rx.get_next_packet());
    } catch (const UsageError&) {
        // closed by the timer
    } catch (const EndOfStream&) {
        // server finished
    } catch (...) {
        stop_timer();
        throw;
    }
    stop_timer();
    writer.finish();
    out << "recorded " << writer.count() << " frames from " << port_name(port) << " to " << a.out << "\n";
    return kExitOk;
}

struct ReplayArgs {
    std::string in;
    double pace = 0.0;
    std::uint64_t sessions = 0;
    double duration = 0.0;
    std::string bind = "127.0.0.1";
};

int cmd_replay(const Common& c, const ReplayArgs& a, std::ostream& out) {
    Recording rec = load_recording(a.in);
    const auto frames = rec.frames.size();
    const auto port = rec.port;
    ReplayServer::Options o;
    o.bind_address = a.bind;
    o.port_offset = c.port_offset;
    o.pace = a.pace;
    ReplayServer server(std::move(rec), o);
    server.start();
    out << "replaying " << frames << " " << port_name(port) << " frames on port " << server.tcp_port() << "\n"
        << std::flush;
    wait_loop(a.duration, [&] { return a.sessions && server.sessions_served() >= a.sessions; });
    server.stop();
    out << "served " << server.sessions_served() << " session(s)\n";
    return kExitOk;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
    const Recording rec = load_recording(path);
    out << "file:      " << path << "\n"
        << "port:      " << static_cast<int>(rec.port) << " (" << port_name(rec.port) << ")\n"
        << "mode:      " << static_cast<int>(rec.mode) << "\n"
        << "config:    " << rec.config.size() << " bytes " << hex(rec.config) << "\n"
        << "frames:    " << rec.frames.size() << "\n";
    if (rec.frames.empty()) return kExitOk;

    std::size_t total = 0, min_size = SIZE_MAX, max_size = 0, valid = 0;
    for (const auto& f : rec.frames) {
        total += f.payload.size();
        min_size = std::min(min_size, f.payload.size());
        max_size = std::max(max_size, f.payload.size());
        if (f.pose && f.pose->valid()) ++valid;
    }
    const auto first = rec.frames.front().timestamp.ticks, last = rec.frames.back().timestamp.ticks;
    out << "first_ts:  " << first << "\n"
        << "last_ts:   " << last << "\n";
    if (rec.frames.size() > 1) {
        const double span = static_cast<double>(last - first);
        out << "mean_dt:   " << std::fixed << std::setprecision(1) << span / (rec.frames.size() - 1.0) << " ticks ("
            << std::setprecision(2) << (rec.frames.size() - 1.0) * kTicksPerSecond / span << " fps)\n";
    }
    out << "payload:   " << total << " bytes (min " << min_size << ", max " << max_size << ")\n";
    if (rec.mode == StreamMode::MODE_1) {
        out << "poses:     " << valid << " valid, " << rec.frames.size() - valid << " invalid\n";
    }
    return kExitOk;
}

struct CalibArgs {
    std::string port;
    std::string out = ".";
    VideoFlags video;
};

int cmd_calib(const Common& c, const CalibArgs& a, std::ostream& out) {
    const StreamPort port = parse_stream_port(a.port);
    if (!supports_mode(port, StreamMode::MODE_2)) {
        throw UnsupportedError(std::string(port_name(port)) +
                               " has no calibration: mode 2 is not available for this stream");
    }
    ClientOptions opts = c.client();
    opts.pv_modes = a.video.whitelist();
    const StreamConfig cfg = a.video.apply(port, default_config(port, StreamMode::MODE_2));
    const Bytes blob =
        download_calibration_blob(c.host, port, encode_config(port, cfg, opts.pv_modes), calibration_size(port), opts);
    const Calibration cal = parse_calibration(port, blob);

    std::filesystem::create_directories(a.out);
    const auto base = std::filesystem::path(a.out) / (std::string(port_name(port)) + "_calibration");
    const auto bin = base.string() + ".bin", txt = base.string() + ".txt";
    {
        std::ofstream f(bin, std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
        if (!f) throw UsageError("cannot write " + bin);
    }
    {
        std::ofstream f(txt, std::ios::trunc);
        f << describe_calibration(cal);
        if (!f) throw UsageError("cannot write " + txt);
    }
    out << "wrote " << bin << " (" << blob.size() << " bytes) and " << txt << "\n";
    return kExitOk;
}

int cmd_scene(const Common& c, const std::string& script_path, std::ostream& out) {
    std::ifstream in(script_path);
    if (!in) throw UsageError("cannot read " + script_path);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);

    // Validate the whole script before anything reaches the server.
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            if (const auto cmd = parse_scene_line(lines[i], 0)) (void)encode_scene(*cmd);
        } catch (const Error& e) {
            throw UsageError(script_path + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }

    IpcClient ipc(c.host, c.client());
    std::uint32_t last_key = 0;
    for (const auto& l : lines) {
        const auto cmd = parse_scene_line(l, last_key);
        if (!cmd) continue;
        const std::uint32_t reply = ipc.call(*cmd);
        if (scene_command_creates(*cmd)) {
            if (reply) last_key = reply;
            out << reply << "\n";
        } else {
            out << (reply == SceneState::kSuccess ? "ok" : "fail") << "\n";
        }
    }
    return kExitOk;
}

struct EmulateArgs {
    std::string config;
    double clock_mult = 0.0;
    std::optional<std::uint16_t> port_offset;
    double duration = 0.0;
    std::string bind;
};

int cmd_emulate(const EmulateArgs& a, std::ostream& out) {
    EmulatorConfig cfg = a.config.empty() ? EmulatorConfig{} : load_emulator_config(a.config);
    if (a.clock_mult > 0) cfg.clock_multiplier = a.clock_mult;
    if (a.port_offset) cfg.port_offset = *a.port_offset;
    if (!a.bind.empty()) cfg.bind_address = a.bind;

    Emulator emu(cfg);
    emu.start();
    out << "emulator listening on " << cfg.bind_address << ":";
    for (StreamPort p : all_server_ports()) out << " " << tcp_port(p, cfg.port_offset);
    out << " (clock x" << cfg.clock_multiplier << ")\n" << std::flush;
    wait_loop(a.duration, [] { return false; });
    emu.stop();
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"HoloLens 2 sensor streaming tools", "hl2ss"};
    app.require_subcommand(1);

    Common common;

    auto* probe = app.add_subcommand("probe", "Print the server version");
    common.add(*probe);

    RecordArgs rec;
    auto* record = app.add_subcommand("record", "Record a stream to a container file");
    common.add(*record);
    record->add_option("--port", rec.port, "Stream name or port number")->required();
    record->add_option("--mode", rec.mode, "0 (data) or 1 (data + pose)");
    record->add_option("--duration", rec.duration, "Seconds to record")->capture_default_str();
    record->add_option("--out", rec.out, "Output file")->required();
    rec.video.add(*record);

    ReplayArgs rep;
    auto* replay = app.add_subcommand("replay", "Serve a recording on its stream port");
    common.add(*replay);
    replay->add_option("--in,in", rep.in, "Recording file")->required();
    replay->add_option("--pace", rep.pace, "Follow timestamps at this speed-up; 0 = unpaced");
    replay->add_option("--sessions", rep.sessions, "Exit after this many sessions");
    replay->add_option("--duration", rep.duration, "Exit after this many seconds");
    replay->add_option("--bind", rep.bind, "Listen address");

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "Summarize a recording");
    inspect->add_option("file", inspect_path, "Recording file")->required();

    CalibArgs cal;
    auto* calib = app.add_subcommand("calib", "Download a calibration blob and text sidecar");
    common.add(*calib);
    calib->add_option("--port", cal.port, "Stream name or port number")->required();
    calib->add_option("--out", cal.out, "Output directory");
    cal.video.add(*calib);

    std::string script;
    auto* scene = app.add_subcommand("scene", "Run a remote-scene script");
    common.add(*scene);
    scene->add_option("script", script, "Script file")->required();

    EmulateArgs emu;
    auto* emulate = app.add_subcommand("emulate", "Run the device emulator");
    emulate->add_option("--config", emu.config, "Emulator JSON configuration");
    emulate->add_option("--clock-mult", emu.clock_mult, "Synthetic clock speed-up");
    emulate->add_option("--port-offset", emu.port_offset, "Added to every protocol port");
    emulate->add_option("--duration", emu.duration, "Exit after this many seconds; 0 runs until interrupted");
    emulate->add_option("--bind", emu.bind, "Listen address");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*probe) return cmd_probe(common, out);
        if (*record) return cmd_record(common, rec, out);
        if (*replay) return cmd_replay(common, rep, out);
        if (*inspect) return cmd_inspect(inspect_path, out);
        if (*calib) return cmd_calib(common, cal, out);
        if (*scene) return cmd_scene(common, script, out);
        if (*emulate) return cmd_emulate(emu, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace hl2ss::cli
