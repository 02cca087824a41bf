#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace ddfilt::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Everything needed to re-run a subcommand: parameters with every default
// filled in, the files it read and wrote, and the tool version.
struct RunManifest {
    std::string subcommand;
    nlohmann::json parameters = nlohmann::json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    std::string version = kToolVersion;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

// Writes through a temporary sibling and renames, so readers never see a
// half-written file.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace ddfilt::cli
