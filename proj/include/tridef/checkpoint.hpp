#pragma once

#include "tridef/net.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tridef {

/// Self-describing container for network weights and optimizer state:
/// magic + version + JSON header + named float64 arrays, little-endian.
/// Everything is stored as 64-bit regardless of the in-memory scalar.
class CheckpointFile {
 public:
  nlohmann::json header;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  static constexpr std::uint32_t kVersion = 1;

  void add_array(const std::string& name, std::vector<double> values);
  const std::vector<double>& array(const std::string& name) const;
  bool has_array(const std::string& name) const;

  void write(const std::filesystem::path& path) const;
  static CheckpointFile read(const std::filesystem::path& path);
};

NetworkSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const NetworkSpec& spec);

/// Single-network checkpoint (the every-100-episodes actor saves).
template <typename Scalar>
void save_mlp(const std::filesystem::path& path, const Mlp<Scalar>& net,
              const std::string& kind);

template <typename Scalar>
Mlp<Scalar> load_mlp(const std::filesystem::path& path, std::string* kind = nullptr);

}  // namespace tridef
