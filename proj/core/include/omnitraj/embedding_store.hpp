#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "omnitraj/model.hpp"
#include "omnitraj/nn/checkpoint.hpp"

namespace omnitraj {

/// Immutable matrix of unit-norm f32 embeddings, one row per trajectory.
///
/// File layout (little-endian): "OTES" | u8 version | u8 modality mask |
/// u64 row count | u32 width | 16-byte checkpoint fingerprint |
/// i64 ids[rows] | f32 matrix[rows * width].
class EmbeddingStore {
 public:
  static constexpr std::uint8_t kVersion = 1;

  EmbeddingStore() = default;
  // Validates unique ids and unit-norm rows (within 1e-4).
  EmbeddingStore(ModalityMask modality, std::uint32_t width, nn::Fingerprint fingerprint,
                 std::vector<TrajectoryId> ids, std::vector<float> matrix);

  ModalityMask modality() const { return modality_; }
  std::uint32_t width() const { return width_; }
  std::size_t size() const { return ids_.size(); }
  const nn::Fingerprint& fingerprint() const { return fingerprint_; }
  const std::vector<TrajectoryId>& ids() const { return ids_; }
  const std::vector<float>& matrix() const { return matrix_; }
  std::span<const float> row(std::size_t i) const { return {matrix_.data() + i * width_, width_}; }
  std::optional<std::size_t> index_of(TrajectoryId id) const;

  void save(const std::filesystem::path& path) const;
  static EmbeddingStore load(const std::filesystem::path& path);

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
    return a.modality_ == b.modality_ && a.width_ == b.width_ && a.fingerprint_ == b.fingerprint_ &&
           a.ids_ == b.ids_ && a.matrix_ == b.matrix_;
  }

 private:
  ModalityMask modality_ = kTraj;
  std::uint32_t width_ = 0;
  nn::Fingerprint fingerprint_{};
  std::vector<TrajectoryId> ids_;
  std::vector<float> matrix_;
  std::unordered_map<TrajectoryId, std::size_t> index_;
};

/// Encodes every sample's view for `modality` (a single modality or a
/// trained fusion subset). Vocabulary mismatches surface as ConfigError.
EmbeddingStore build_store(const OmniModel& model, const std::vector<PreparedSample>& samples,
                           ModalityMask modality);

}  // namespace omnitraj
