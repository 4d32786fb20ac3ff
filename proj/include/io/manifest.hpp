#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace io {

inline constexpr const char* kToolVersion = "0.1.0";

struct Manifest {
    std::string subcommand;
    std::vector<std::pair<std::string, std::string>> flags; // as parsed
    uint64_t seed = 0;
    double wall_seconds = 0;
    int exit_code = 0;
};

// JSON sidecar written for every run, success or not.
void write_manifest(const std::string& path, const Manifest& manifest);

// Default artifact directory: $COUNTLAB_OUT_DIR or ".".
std::string default_out_dir();

} // namespace io
