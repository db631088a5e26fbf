#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hl2ss/control.hpp"

namespace hl2ss::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitTransport = 2,
    kExitProtocol = 3,
    kExitUsage = 4,
};

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Maps a library exception to a process exit code.
int exit_code_for(const std::exception& e) noexcept;

/// Parses one scene-script line. Blank lines and `#` comments yield
/// nothing. A key written as `$` means the key returned by the most recent
/// create command. Throws UsageError on anything malformed, including
/// command ids outside the protocol's set.
std::optional<SceneCommand> parse_scene_line(std::string_view line, std::uint32_t last_key = 0);

/// Long-running commands (emulate, replay) return once this is set.
void request_interrupt() noexcept;
void clear_interrupt() noexcept;
bool interrupt_requested() noexcept;

}  // namespace hl2ss::cli
