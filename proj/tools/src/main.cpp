#include <csignal>
#include <iostream>

#include "hl2ss_cli/cli.hpp"

namespace {

extern "C" void on_signal(int) { hl2ss::cli::request_interrupt(); }

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    return hl2ss::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
