#include "tridef/checkpoint.hpp"

#include "tridef/engagement.hpp"  // ConfigError

#include <cstring>
#include <fstream>

namespace tridef {

namespace {
constexpr char kMagic[8] = {'T', 'D', 'F', 'C', 'K', 'P', 'T', '\n'};
}

void CheckpointFile::add_array(const std::string& name, std::vector<double> values) {
  arrays.emplace_back(name, std::move(values));
}

const std::vector<double>& CheckpointFile::array(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return v;
  throw ConfigError("checkpoint: missing array '" + name + "'");
}

bool CheckpointFile::has_array(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return true;
  return false;
}

void CheckpointFile::write(const std::filesystem::path& path) const {
  nlohmann::json full = header;
  auto& list = full["arrays"] = nlohmann::json::array();
  for (const auto& [name, values] : arrays) {
    list.push_back({{"name", name}, {"len", values.size()}});
  }
  full["format_version"] = kVersion;
  const std::string head = full.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kVersion;
  const std::uint64_t head_len = head.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), std::streamsize(head.size()));
  for (const auto& [name, values] : arrays) {
    out.write(reinterpret_cast<const char*>(values.data()),
              std::streamsize(values.size() * sizeof(double)));
  }
  if (!out) throw ConfigError("short write on checkpoint: " + path.string());
}

CheckpointFile CheckpointFile::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("not a checkpoint file: " + path.string());
  std::uint32_t version = 0;
  std::uint64_t head_len = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
  if (version != kVersion)
    throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  std::string head(head_len, '\0');
  in.read(head.data(), std::streamsize(head_len));
  if (!in) throw ConfigError("truncated checkpoint header: " + path.string());

  CheckpointFile file;
  file.header = nlohmann::json::parse(head);
  for (const auto& entry : file.header.at("arrays")) {
    std::vector<double> values(entry.at("len").get<std::size_t>());
    in.read(reinterpret_cast<char*>(values.data()),
            std::streamsize(values.size() * sizeof(double)));
    if (!in) throw ConfigError("truncated checkpoint data: " + path.string());
    file.arrays.emplace_back(entry.at("name").get<std::string>(), std::move(values));
  }
  return file;
}

nlohmann::json spec_to_json(const NetworkSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden", spec.hidden},
          {"output_dim", spec.output_dim},
          {"tanh_head", spec.tanh_head},
          {"layer_norm", spec.layer_norm}};
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.hidden = j.at("hidden").get<std::vector<int>>();
  spec.output_dim = j.at("output_dim").get<int>();
  spec.tanh_head = j.at("tanh_head").get<bool>();
  spec.layer_norm = j.at("layer_norm").get<bool>();
  spec.validate();
  return spec;
}

template <typename Scalar>
void save_mlp(const std::filesystem::path& path, const Mlp<Scalar>& net,
              const std::string& kind) {
  CheckpointFile file;
  file.header["payload"] = "mlp";
  file.header["kind"] = kind;
  file.header["spec"] = spec_to_json(net.spec());
  std::vector<double> flat(net.params().begin(), net.params().end());
  file.add_array("params", std::move(flat));
  file.write(path);
}

template <typename Scalar>
Mlp<Scalar> load_mlp(const std::filesystem::path& path, std::string* kind) {
  const CheckpointFile file = CheckpointFile::read(path);
  if (file.header.at("payload") != "mlp")
    throw ConfigError("checkpoint does not hold a single network: " + path.string());
  if (kind) *kind = file.header.value("kind", "");
  Mlp<Scalar> net(spec_from_json(file.header.at("spec")), 0);
  const auto& flat = file.array("params");
  if (flat.size() != net.param_count())
    throw ConfigError("checkpoint parameter count mismatch: " + path.string());
  auto dst = net.params();
  for (std::size_t i = 0; i < flat.size(); ++i) dst[i] = Scalar(flat[i]);
  return net;
}

template void save_mlp<double>(const std::filesystem::path&, const Mlp<double>&,
                               const std::string&);
template void save_mlp<float>(const std::filesystem::path&, const Mlp<float>&,
                              const std::string&);
template Mlp<double> load_mlp<double>(const std::filesystem::path&, std::string*);
template Mlp<float> load_mlp<float>(const std::filesystem::path&, std::string*);

}  // namespace tridef
