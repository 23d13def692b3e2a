#pragma once

#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "blockpred/binio.hpp"
#include "blockpred/nn/tensor.hpp"

namespace blockpred::nn {

inline constexpr std::string_view kCheckpointMagic = "BPCKPT01";
inline constexpr int kCheckpointVersion = 1;

template <class T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

template <class T>
constexpr const char* dtype_name() {
  if constexpr (std::is_same_v<T, float>) return "f32";
  else return "f64";
}

template <class T>
void save_checkpoint(const std::string& path, const std::vector<NamedTensor<T>>& tensors,
                     const nlohmann::json& meta = nlohmann::json::object()) {
  nlohmann::json header;
  header["version"] = kCheckpointVersion;
  header["dtype"] = dtype_name<T>();
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors) header["tensors"].push_back({{"name", t.name}, {"shape", t.tensor.shape()}});
  auto os = binio::open_out(path);
  binio::write_header(os, kCheckpointMagic, header);
  for (const auto& t : tensors) binio::write_le(os, t.tensor.data());
  if (!os) throw FormatError(FormatErrc::io, "write failed: " + path);
}

template <class T>
struct Checkpoint {
  nlohmann::json meta;
  std::vector<NamedTensor<T>> tensors;
};

template <class T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  auto is = binio::open_in(path);
  const auto header = binio::read_header(is, kCheckpointMagic);
  if (header.value("version", 0) != kCheckpointVersion)
    throw FormatError(FormatErrc::unsupported_version, "checkpoint version in " + path);
  if (header.value("dtype", std::string()) != dtype_name<T>())
    throw FormatError(FormatErrc::inconsistent, "checkpoint dtype is " + header.value("dtype", std::string()));
  Checkpoint<T> ck;
  ck.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    NamedTensor<T> t{entry.at("name").get<std::string>(), Tensor<T>(entry.at("shape").get<Shape>())};
    binio::read_le(is, t.tensor.data());
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

} // namespace blockpred::nn
