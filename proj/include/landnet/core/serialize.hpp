#ifndef LANDNET_CORE_SERIALIZE_HPP
#define LANDNET_CORE_SERIALIZE_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "landnet/core/nn.hpp"

namespace landnet {

/// Checkpoint layout: <dir>/index.json describing every tensor
/// (name -> file, shape, dtype, frozen/buffer flags) plus caller-supplied
/// metadata, and one raw little-endian blob per tensor under <dir>/tensors/.
template <typename T>
void save_checkpoint(const std::filesystem::path& dir,
                     const nn::ParamList<T>& params,
                     const nlohmann::json& meta) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "tensors");
  nlohmann::json index;
  index["meta"] = meta;
  nlohmann::json tensors = nlohmann::json::object();
  int file_id = 0;
  for (const auto& p : params) {
    char fname[32];
    std::snprintf(fname, sizeof(fname), "%04d.bin", file_id++);
    const fs::path blob = dir / "tensors" / fname;
    std::ofstream out(blob, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write " + blob.string());
    out.write(reinterpret_cast<const char*>(p.tensor.data()),
              static_cast<std::streamsize>(p.tensor.numel() * sizeof(T)));
    nlohmann::json entry;
    entry["file"] = std::string("tensors/") + fname;
    entry["shape"] = p.tensor.shape();
    entry["dtype"] = sizeof(T) == 4 ? "f32" : "f64";
    entry["frozen"] = p.frozen;
    entry["buffer"] = p.buffer;
    tensors[p.name] = entry;
  }
  index["tensors"] = tensors;
  std::ofstream out(dir / "index.json");
  if (!out)
    throw DataError("checkpoint: cannot write " + (dir / "index.json").string());
  out << index.dump(2) << "\n";
}

/// Load tensors by name into an existing parameter list. Every parameter in
/// `params` must be present in the checkpoint with a matching shape;
/// mismatches are reported together in one error.
template <typename T>
nlohmann::json load_checkpoint(const std::filesystem::path& dir,
                               nn::ParamList<T>& params) {
  namespace fs = std::filesystem;
  const fs::path index_path = dir / "index.json";
  std::ifstream in(index_path);
  if (!in) throw DataError("checkpoint: cannot open " + index_path.string());
  nlohmann::json index = nlohmann::json::parse(in);
  const auto& tensors = index.at("tensors");
  std::string problems;
  for (auto& p : params) {
    if (!tensors.contains(p.name)) {
      problems += "  missing tensor: " + p.name + "\n";
      continue;
    }
    const auto& entry = tensors.at(p.name);
    const std::vector<int> shape = entry.at("shape").template get<std::vector<int>>();
    if (shape != p.tensor.shape()) {
      problems += "  shape mismatch for " + p.name + ": checkpoint " +
                  nlohmann::json(shape).dump() + " vs model " +
                  nlohmann::json(p.tensor.shape()).dump() + "\n";
      continue;
    }
    const fs::path blob = dir / entry.at("file").template get<std::string>();
    std::ifstream bin(blob, std::ios::binary);
    if (!bin) {
      problems += "  missing blob: " + blob.string() + "\n";
      continue;
    }
    bin.read(reinterpret_cast<char*>(p.tensor.data()),
             static_cast<std::streamsize>(p.tensor.numel() * sizeof(T)));
    if (bin.gcount() !=
        static_cast<std::streamsize>(p.tensor.numel() * sizeof(T)))
      problems += "  truncated blob: " + blob.string() + "\n";
  }
  if (!problems.empty())
    throw DataError("checkpoint load failed:\n" + problems);
  return index.at("meta");
}

/// FNV-1a over the raw bytes of all frozen parameters, in registration
/// order. Used by the frozen-weight audit.
template <typename T>
std::uint64_t frozen_checksum(const nn::ParamList<T>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params) {
    if (!p.frozen || p.buffer) continue;
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.tensor.data());
    const std::int64_t n = p.tensor.numel() * static_cast<std::int64_t>(sizeof(T));
    for (std::int64_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace landnet

#endif  // LANDNET_CORE_SERIALIZE_HPP
