#include "ptnlab/checkpoint.hpp"

#include <bit>
#include <fstream>

namespace ptnlab {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void save_checkpoint(const ParameterStore& params,
                     const std::filesystem::path& path,
                     const nlohmann::json& meta) {
  nlohmann::ordered_json header;
  header["format_version"] = 1;
  header["entries"] = nlohmann::ordered_json::array();
  for (const auto& [name, e] : params) {
    nlohmann::ordered_json je;
    je["name"] = name;
    je["shape"] = e.value.shape;
    je["frozen"] = e.frozen;
    header["entries"].push_back(std::move(je));
  }
  if (!meta.is_null() && !meta.empty()) header["meta"] = meta;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  out << header.dump() << '\n';
  for (const auto& [name, e] : params) {
    out.write(reinterpret_cast<const char*>(e.value.data.data()),
              static_cast<std::streamsize>(e.value.numel() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed " + path.string());
}

ParameterStore load_checkpoint(const std::filesystem::path& path,
                               nlohmann::json* meta_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("checkpoint: missing header in " + path.string());
  const nlohmann::json header = nlohmann::json::parse(line);
  if (header.at("format_version").get<int>() != 1)
    throw std::runtime_error("checkpoint: unsupported format version");
  if (meta_out)
    *meta_out = header.contains("meta") ? header["meta"]
                                        : nlohmann::json::object();

  ParameterStore params;
  for (const auto& je : header.at("entries")) {
    const auto name = je.at("name").get<std::string>();
    Tensor t(je.at("shape").get<std::vector<Index>>());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in)
      throw std::runtime_error("checkpoint: truncated data for entry " + name);
    params.add(name, std::move(t), je.at("frozen").get<bool>());
  }
  return params;
}

}  // namespace ptnlab
