#pragma once

// Command-line surface. Every subcommand writes its CSV/JSON outputs into the
// output directory together with `<command>.manifest.json`, and prints its
// main JSON result on stdout.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hill4bp/io.hpp"

namespace hill4bp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDomain = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitUsage = 64;

std::string version();

struct RunManifest {
    std::string command;
    io::json parameters = io::json::object();
    io::json tolerances = io::json::object();
    double wall_time = 0.0; // seconds
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;

    io::json to_json() const;
};

/// Flat `key = value` file; blank lines and `#` comments are skipped. Keys
/// are option names without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config(const std::filesystem::path &path);

/// Runs one command line (without the program name). Returns the exit status.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

int main(int argc, char **argv);

} // namespace hill4bp::cli
