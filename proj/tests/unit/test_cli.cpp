#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <unistd.h>

#include "hl2ss/client.hpp"
#include "hl2ss/emulator.hpp"
#include "hl2ss/errors.hpp"
#include "hl2ss/recording.hpp"
#include "hl2ss_cli/cli.hpp"
#include "ports.hpp"

using namespace hl2ss;
using namespace std::chrono_literals;

#ifndef HL2SS_CONFIG_DIR
#define HL2SS_CONFIG_DIR ""
#endif

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct CliFixture : ::testing::Test {
    void SetUp() override {
        EmulatorConfig cfg;
        cfg.port_offset = testsupport::next_port_offset();
        cfg.clock_multiplier = 10.0;
        offset = std::to_string(cfg.port_offset);
        emu = serve(std::move(cfg));
        dir = std::filesystem::temp_directory_path() /
              ("hl2ss_cli_" + std::to_string(::getpid()) + "_" + offset);
        std::filesystem::create_directories(dir);
    }
    void TearDown() override {
        emu.reset();
        std::filesystem::remove_all(dir);
    }

    std::vector<std::string> with_offset(std::vector<std::string> args) const {
        args.insert(args.end(), {"--port-offset", offset});
        return args;
    }

    std::string offset;
    std::unique_ptr<Emulator> emu;
    std::filesystem::path dir;
};

}  // namespace

TEST_F(CliFixture, ProbePrintsVersion) {
    const auto r = invoke(with_offset({"probe"}));
    EXPECT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(r.out, "v1.0.0.0\n");
}

TEST_F(CliFixture, RecordInspectReplay) {
    const auto file = (dir / "depth.rec").string();
    auto r = invoke(with_offset({"record", "--port", "depth_longthrow", "--mode", "1", "--duration", "0.5", "--out", file}));
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const Recording rec = load_recording(file);
    EXPECT_EQ(rec.port, StreamPort::DEPTH_LONGTHROW);
    EXPECT_EQ(rec.mode, StreamMode::MODE_1);
    EXPECT_EQ(rec.config, Bytes{0x01});
    ASSERT_GT(rec.frames.size(), 3u);
    for (const auto& f : rec.frames) EXPECT_TRUE(f.pose);
    EXPECT_NE(r.out.find("recorded " + std::to_string(rec.frames.size()) + " frames"), std::string::npos);

    r = invoke({"inspect", file});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("3805 (depth_longthrow)"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("frames:    " + std::to_string(rec.frames.size())), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("poses:"), std::string::npos);

    // Replay on a fresh offset so the emulator's depth port is not in the way.
    const auto replay_offset = testsupport::next_port_offset();
    Result replayed{};
    std::thread server([&] {
        replayed = invoke({"replay", file, "--port-offset", std::to_string(replay_offset), "--sessions", "1",
                           "--duration", "20"});
    });
    ClientOptions co;
    co.port_offset = replay_offset;
    std::vector<DataFrame> got;
    for (int attempt = 0; attempt < 200 && got.empty(); ++attempt) {
        try {
            RxSession rx("127.0.0.1", rec.port, default_config(rec.port, rec.mode), co);
            rx.open();
            try {
                for (;;) got.push_back(rx.get_next_packet());
            } catch (const EndOfStream&) {
            }
        } catch (const TransportError&) {
            std::this_thread::sleep_for(20ms);
        }
    }
    server.join();
    EXPECT_EQ(replayed.code, cli::kExitOk) << replayed.err;
    EXPECT_EQ(got, rec.frames);
    EXPECT_NE(replayed.out.find("served 1 session"), std::string::npos) << replayed.out;
}

TEST_F(CliFixture, CalibWritesBlobAndSidecar) {
    const auto out_dir = (dir / "cal").string();
    auto r = invoke(with_offset({"calib", "--port", "vlc_leftfront", "--out", out_dir}));
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto bin = std::filesystem::path(out_dir) / "vlc_leftfront_calibration.bin";
    const auto txt = std::filesystem::path(out_dir) / "vlc_leftfront_calibration.txt";
    ASSERT_TRUE(std::filesystem::exists(bin));
    ASSERT_TRUE(std::filesystem::exists(txt));
    EXPECT_EQ(std::filesystem::file_size(bin), calibration_size(StreamPort::VLC_LEFTFRONT));
    std::ifstream in(bin, std::ios::binary);
    const Bytes blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(parse_calibration(StreamPort::VLC_LEFTFRONT, blob), synth::calibration(StreamPort::VLC_LEFTFRONT));

    r = invoke(with_offset({"calib", "--port", "imu_mag", "--out", out_dir}));
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("mode 2"), std::string::npos) << r.err;
    r = invoke(with_offset({"calib", "--port", "microphone", "--out", out_dir}));
    EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST_F(CliFixture, SceneScriptRuns) {
    const auto script = (dir / "scene.txt").string();
    {
        std::ofstream f(script);
        f << "# a red cube\n"
             "create cube\n"
             "set_color $ 1 0 0 1\n"
             "set_world_transform $ 0 0 2  0 0 0 1  0.5 0.5 0.5\n"
             "\n"
             "create_text\n"
             "set_text $ 0.2 1 1 1 1 hello world\n"
             "remove 1\n"
             "remove 1\n";
    }
    const auto r = invoke(with_offset({"scene", script}));
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(r.out, "1\nok\nok\n2\nok\nok\nfail\n");
    const SceneState s = emu->scene();
    ASSERT_EQ(s.objects().size(), 1u);
    EXPECT_EQ(s.find(2)->text, "hello world");
}

TEST_F(CliFixture, BadScriptSendsNothing) {
    const auto script = (dir / "bad.txt").string();
    {
        std::ofstream f(script);
        f << "create cube\nraw 99\n";
    }
    auto r = invoke(with_offset({"scene", script}));
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;
    {
        std::ofstream f(script, std::ios::trunc);
        f << "create cube\nset_color $ 1 0 0 2\n";
    }
    r = invoke(with_offset({"scene", script}));
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;
    EXPECT_TRUE(emu->scene().objects().empty());
}

TEST_F(CliFixture, RecordRejectsUnsupportedMode) {
    const auto file = (dir / "mic.rec").string();
    EXPECT_EQ(invoke(with_offset({"record", "--port", "microphone", "--mode", "1", "--out", file})).code,
              cli::kExitUsage);
    EXPECT_EQ(invoke(with_offset({"record", "--port", "pv", "--mode", "2", "--out", file})).code, cli::kExitUsage);
    EXPECT_EQ(invoke(with_offset({"record", "--port", "control", "--out", file})).code, cli::kExitUsage);
}

TEST(Cli, TransportFailureExitCode) {
    // Nothing listens on this offset.
    const auto off = std::to_string(testsupport::next_port_offset());
    const auto r = invoke({"probe", "--port-offset", off});
    EXPECT_EQ(r.code, cli::kExitTransport);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(invoke({}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"record", "--port", "pv"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"inspect", "/nonexistent/file.rec"}).code, cli::kExitTransport);
    EXPECT_EQ(invoke({"--help"}).code, cli::kExitOk);
}

TEST(Cli, InspectRejectsCorruptFile) {
    const auto path = std::filesystem::temp_directory_path() / ("hl2ss_cli_corrupt_" + std::to_string(::getpid()));
    {
        std::ofstream f(path, std::ios::binary);
        f << "HL2SREC0 garbage";
    }
    EXPECT_EQ(invoke({"inspect", path.string()}).code, cli::kExitProtocol);
    std::filesystem::remove(path);
}

TEST(Cli, EmulateRunsForDuration) {
    const auto off = testsupport::next_port_offset();
    std::vector<std::string> args{"emulate", "--port-offset", std::to_string(off), "--duration", "1", "--clock-mult", "5"};
    if (!std::string(HL2SS_CONFIG_DIR).empty()) {
        args.insert(args.end(), {"--config", std::string(HL2SS_CONFIG_DIR) + "/emulator.json"});
    }
    Result r{};
    std::thread t([&] { r = invoke(args); });
    ClientOptions co;
    co.port_offset = off;
    std::optional<ServerVersion> v;
    for (int i = 0; i < 40 && !v; ++i) {
        try {
            ControlClient c("127.0.0.1", co);
            v = c.get_version();
        } catch (const TransportError&) {
            std::this_thread::sleep_for(20ms);
        }
    }
    t.join();
    EXPECT_EQ(r.code, cli::kExitOk) << r.err;
    ASSERT_TRUE(v);
    EXPECT_EQ(format_version(*v), "v1.0.0.0");
    EXPECT_NE(r.out.find("clock x5"), std::string::npos) << r.out;
}

TEST(SceneScript, ParsesEachCommand) {
    EXPECT_EQ(cli::parse_scene_line("  # nothing"), std::nullopt);
    EXPECT_EQ(cli::parse_scene_line(""), std::nullopt);
    EXPECT_EQ(cli::parse_scene_line("create sphere"), SceneCommand(CreatePrimitive{PrimitiveType::SPHERE}));
    EXPECT_EQ(cli::parse_scene_line("create_primitive quad"), SceneCommand(CreatePrimitive{PrimitiveType::QUAD}));
    EXPECT_EQ(cli::parse_scene_line("set_active $ 0", 7), SceneCommand(SetActive{7, 0}));
    EXPECT_EQ(cli::parse_scene_line("set_color 3 0.5 0.25 0 1  # trailing"),
              SceneCommand(SetColor{3, {0.5f, 0.25f, 0.0f, 1.0f}}));
    SetWorldTransform t{4, {1, 2, 3}, {0, 0, 0, 1}, {2, 2, 2}};
    EXPECT_EQ(cli::parse_scene_line("set_world_transform 4 1 2 3 0 0 0 1 2 2 2"), SceneCommand(t));
    EXPECT_EQ(cli::parse_scene_line("set_text 2 0.1 1 1 1 1   two  words "),
              SceneCommand(SetText{2, 0.1f, {1, 1, 1, 1}, "two  words"}));
    EXPECT_EQ(cli::parse_scene_line("remove_all"), SceneCommand(RemoveAll{}));
    EXPECT_EQ(cli::parse_scene_line("begin_display_list"), SceneCommand(BeginDisplayList{}));
    EXPECT_EQ(cli::parse_scene_line("end_display_list"), SceneCommand(EndDisplayList{}));
    EXPECT_EQ(cli::parse_scene_line("set_target_mode 1"), SceneCommand(SetTargetMode{1}));
    EXPECT_EQ(cli::parse_scene_line("raw 17"), SceneCommand(RemoveAll{}));
    EXPECT_EQ(cli::parse_scene_line("raw 16 05000000"), SceneCommand(Remove{5}));
}

TEST(SceneScript, RejectsMalformedLines) {
    for (const char* bad : {"create", "create blob", "set_active x 1", "set_color 1 0 0 0", "remove 1 2",
                            "raw 21", "raw 3", "raw 16 050", "raw 16 zz", "frobnicate", "set_text 1 2 3"}) {
        EXPECT_THROW(cli::parse_scene_line(bad), Error) << bad;
    }
    EXPECT_THROW(cli::parse_scene_line("raw 21"), UsageError);
}

TEST(ExitCodes, MapErrorClasses) {
    EXPECT_EQ(cli::exit_code_for(TransportError("x")), cli::kExitTransport);
    EXPECT_EQ(cli::exit_code_for(EndOfStream("x")), cli::kExitTransport);
    EXPECT_EQ(cli::exit_code_for(ProtocolError("x")), cli::kExitProtocol);
    EXPECT_EQ(cli::exit_code_for(TruncatedError("x")), cli::kExitProtocol);
    EXPECT_EQ(cli::exit_code_for(HandshakeError("x")), cli::kExitProtocol);
    EXPECT_EQ(cli::exit_code_for(ValidationError("x")), cli::kExitUsage);
    EXPECT_EQ(cli::exit_code_for(UsageError("x")), cli::kExitUsage);
}
