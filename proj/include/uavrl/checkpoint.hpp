#pragma once

#include <map>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "uavrl/tensor.hpp"

namespace uavrl {

// Named-parameter archive. Tensor payloads are base64-coded little-endian
// 64-bit floats, so save/load round-trips bit-exactly.
struct ParamArchive {
  int version = 1;
  nlohmann::ordered_json manifest;              // config hash, train step, seed, ...
  std::map<std::string, ag::Tensor> params;

  std::string to_json() const;
  static ParamArchive from_json(const std::string& text);

  void save(const std::string& path) const;
  static ParamArchive load(const std::string& path);
};

std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::vector<std::uint8_t> base64_decode(const std::string& text);

std::string doubles_to_base64(const std::vector<double>& values);
std::vector<double> doubles_from_base64(const std::string& text);

// FNV-1a 64-bit digest as 16 hex chars; used for config provenance stamps.
std::string fnv1a_hex(const std::string& text);

}  // namespace uavrl
