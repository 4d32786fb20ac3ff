#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "io/manifest.hpp"

namespace io {

void write_manifest(const std::string& path, const Manifest& manifest) {
    nlohmann::json flags = nlohmann::json::object();
    for (const auto& [key, value] : manifest.flags) flags[key] = value;
    const nlohmann::json doc = {
        {"subcommand", manifest.subcommand},
        {"flags", flags},
        {"seed", manifest.seed},
        {"wall_seconds", manifest.wall_seconds},
        {"exit_code", manifest.exit_code},
        {"version", kToolVersion},
    };
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("write_manifest: cannot open " + path);
    file << doc.dump(2) << '\n';
    if (!file) throw std::runtime_error("write_manifest: write failed " + path);
}

std::string default_out_dir() {
    const char* env = std::getenv("COUNTLAB_OUT_DIR");
    return env && *env ? env : ".";
}

} // namespace io
