#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace mtm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Default output directory: $MTM_OUT_DIR if set, else the working directory.
std::string default_out_dir();

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::string& path);

/// Provenance record written next to the outputs of every subcommand.
struct RunManifest {
    std::string subcommand;
    std::map<std::string, std::string> parameters;
    std::string tool_version;
    double wall_time_s = 0.0;
    std::map<std::string, std::string> inputs;   // path -> digest
    std::map<std::string, std::string> outputs;  // path -> digest

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
    void write(const std::string& path) const;
};

/// Parse argv, run one subcommand and return the process exit code.
int run(int argc, char** argv);

}  // namespace mtm::cli
