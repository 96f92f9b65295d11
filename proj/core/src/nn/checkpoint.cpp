#include "omnitraj/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "omnitraj/binary_io.hpp"
#include "omnitraj/error.hpp"

namespace omnitraj::nn {

Fingerprint fingerprint_bytes(std::string_view bytes) {
  __extension__ typedef unsigned __int128 u128;
  const u128 prime = (static_cast<u128>(0x0000000001000000ULL) << 64) | 0x000000000000013BULL;
  u128 hash = (static_cast<u128>(0x6c62272e07bb0142ULL) << 64) | 0x62b821756295c58dULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= prime;
  }
  Fingerprint fp{};
  for (int i = 0; i < 16; ++i) fp[i] = static_cast<std::uint8_t>(hash >> (8 * (15 - i)));
  return fp;
}

std::string to_hex(const Fingerprint& fp) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (auto b : fp) {
    out += digits[b >> 4];
    out += digits[b & 15];
  }
  return out;
}

Checkpoint Checkpoint::capture(const std::string& config_text, const ParameterSet& params) {
  Checkpoint c;
  c.config_text = config_text;
  for (const auto& [name, v] : params.entries()) c.tensors.emplace_back(name, v.value());
  return c;
}

std::string Checkpoint::serialize() const {
  std::ostringstream out(std::ios::binary);
  binary::write_magic(out, "OTWT");
  binary::write<std::uint32_t>(out, 1);
  binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(config_text.size()));
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows()));
    binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
    binary::write<std::uint64_t>(out, offset);
    offset += t.size();
  }
  for (const auto& [name, t] : tensors)
    for (double v : t.values()) binary::write<float>(out, static_cast<float>(v));
  return out.str();
}

Checkpoint Checkpoint::deserialize(std::string_view bytes) {
  std::istringstream in(std::string(bytes), std::ios::binary);
  binary::expect_magic(in, "OTWT");
  const auto version = binary::read<std::uint32_t>(in);
  if (version != 1) throw IoError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.config_text.resize(binary::read<std::uint32_t>(in));
  in.read(c.config_text.data(), static_cast<std::streamsize>(c.config_text.size()));
  const auto count = binary::read<std::uint32_t>(in);
  struct Entry {
    std::string name;
    std::uint32_t rows, cols;
    std::uint64_t offset;
  };
  std::vector<Entry> entries(count);
  for (auto& e : entries) {
    e.name.resize(binary::read<std::uint32_t>(in));
    in.read(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    e.rows = binary::read<std::uint32_t>(in);
    e.cols = binary::read<std::uint32_t>(in);
    e.offset = binary::read<std::uint64_t>(in);
  }
  std::vector<float> payload;
  {
    const auto start = static_cast<std::size_t>(in.tellg());
    if (start > bytes.size() || (bytes.size() - start) % sizeof(float) != 0)
      throw IoError("checkpoint payload is truncated");
    payload.resize((bytes.size() - start) / sizeof(float));
    std::memcpy(payload.data(), bytes.data() + start, payload.size() * sizeof(float));
  }
  for (const auto& e : entries) {
    const std::size_t n = static_cast<std::size_t>(e.rows) * e.cols;
    if (e.offset + n > payload.size()) throw IoError("checkpoint entry " + e.name + " overruns payload");
    Tensor t(e.rows, e.cols);
    for (std::size_t i = 0; i < n; ++i) t.data()[i] = payload[e.offset + i];
    c.tensors.emplace_back(e.name, std::move(t));
  }
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const auto bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

void Checkpoint::apply_to(ParameterSet& params) const {
  if (params.entries().size() != tensors.size())
    throw ConfigError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                      std::to_string(params.entries().size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& [name, t] = tensors[i];
    auto v = params.entries()[i].second;
    if (params.entries()[i].first != name || !v.value().same_shape(t))
      throw ConfigError("checkpoint tensor " + name + " does not match model parameter " +
                        params.entries()[i].first);
    v.mutable_value() = t;
  }
}

}  // namespace omnitraj::nn
