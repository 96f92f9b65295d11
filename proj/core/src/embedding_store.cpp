#include "omnitraj/embedding_store.hpp"

#include <cmath>
#include <fstream>

#include "omnitraj/binary_io.hpp"
#include "omnitraj/error.hpp"

namespace omnitraj {

EmbeddingStore::EmbeddingStore(ModalityMask modality, std::uint32_t width, nn::Fingerprint fingerprint,
                               std::vector<TrajectoryId> ids, std::vector<float> matrix)
    : modality_(modality), width_(width), fingerprint_(fingerprint), ids_(std::move(ids)), matrix_(std::move(matrix)) {
  if (width_ == 0) throw ParameterError("embedding width must be positive");
  if (matrix_.size() != ids_.size() * width_)
    throw ShapeError("embedding matrix has " + std::to_string(matrix_.size()) + " values for " +
                     std::to_string(ids_.size()) + " rows of width " + std::to_string(width_));
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw DataError("duplicate trajectory id " + std::to_string(ids_[i]));
    double norm = 0.0;
    for (float v : row(i)) norm += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-4)
      throw NumericError("row for trajectory " + std::to_string(ids_[i]) + " is not unit norm");
  }
}

std::optional<std::size_t> EmbeddingStore::index_of(TrajectoryId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  binary::write_magic(out, "OTES");
  binary::write<std::uint8_t>(out, kVersion);
  binary::write<std::uint8_t>(out, modality_);
  binary::write<std::uint64_t>(out, ids_.size());
  binary::write<std::uint32_t>(out, width_);
  out.write(reinterpret_cast<const char*>(fingerprint_.data()), fingerprint_.size());
  out.write(reinterpret_cast<const char*>(ids_.data()), static_cast<std::streamsize>(ids_.size() * sizeof(TrajectoryId)));
  out.write(reinterpret_cast<const char*>(matrix_.data()), static_cast<std::streamsize>(matrix_.size() * sizeof(float)));
  if (!out) throw IoError("failed writing " + path.string());
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  binary::expect_magic(in, "OTES");
  const auto version = binary::read<std::uint8_t>(in);
  if (version != kVersion) throw IoError("unsupported store version " + std::to_string(version));
  const auto modality = binary::read<std::uint8_t>(in);
  const auto rows = binary::read<std::uint64_t>(in);
  const auto width = binary::read<std::uint32_t>(in);
  nn::Fingerprint fp{};
  in.read(reinterpret_cast<char*>(fp.data()), fp.size());
  std::vector<TrajectoryId> ids(rows);
  std::vector<float> matrix(rows * width);
  in.read(reinterpret_cast<char*>(ids.data()), static_cast<std::streamsize>(ids.size() * sizeof(TrajectoryId)));
  in.read(reinterpret_cast<char*>(matrix.data()), static_cast<std::streamsize>(matrix.size() * sizeof(float)));
  if (!in) throw IoError("truncated embedding store " + path.string());
  return EmbeddingStore(modality, width, fp, std::move(ids), std::move(matrix));
}

EmbeddingStore build_store(const OmniModel& model, const std::vector<PreparedSample>& samples,
                           ModalityMask modality) {
  const auto width = static_cast<std::uint32_t>(model.config().h);
  std::vector<TrajectoryId> ids;
  std::vector<float> matrix;
  ids.reserve(samples.size());
  matrix.reserve(samples.size() * width);
  for (const auto& s : samples) {
    try {
      const auto v = model.embed_vector(modality, s);
      matrix.insert(matrix.end(), v.begin(), v.end());
    } catch (const VocabularyError& e) {
      throw ConfigError("dataset does not match checkpoint vocabulary: " + std::string(e.what()));
    }
    ids.push_back(s.id);
  }
  return EmbeddingStore(modality, width, model.checkpoint().fingerprint(), std::move(ids), std::move(matrix));
}

}  // namespace omnitraj
