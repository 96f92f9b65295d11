#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "omnitraj/nn/layers.hpp"

namespace omnitraj::nn {

using Fingerprint = std::array<std::uint8_t, 16>;

// FNV-1a, 128-bit.
Fingerprint fingerprint_bytes(std::string_view bytes);
std::string to_hex(const Fingerprint& fp);

/// Weight container. Layout (little-endian):
///   "OTWT" | u32 version | u32 config length | config text |
///   u32 entry count | entries: u32 name length, name, u32 rows, u32 cols,
///   u64 offset (in f32 elements from payload start) | f32 payload.
struct Checkpoint {
  std::string config_text;
  std::vector<std::pair<std::string, Tensor>> tensors;

  static Checkpoint capture(const std::string& config_text, const ParameterSet& params);

  std::string serialize() const;
  static Checkpoint deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  // Copies stored values into `params`; names and shapes must match exactly.
  void apply_to(ParameterSet& params) const;

  Fingerprint fingerprint() const { return fingerprint_bytes(serialize()); }
};

}  // namespace omnitraj::nn
