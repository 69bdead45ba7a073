#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace tndve::cli {

inline constexpr const char* kVersion = "0.1.0";

std::string sha256_file(const std::filesystem::path& path);
std::string utc_now();

// Written next to every output. `argv` holds the resolved arguments (seed
// made explicit, output location included) so a replay runs the same thing.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string started, finished;
  std::filesystem::path cwd = std::filesystem::current_path();
  std::vector<std::filesystem::path> inputs, outputs;

  // outputs are recorded relative to `base`
  nlohmann::json to_json(const std::filesystem::path& base) const;
  void write(const std::filesystem::path& file, const std::filesystem::path& base) const;
};

}  // namespace tndve::cli
