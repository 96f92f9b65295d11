#include "omnitraj/model.hpp"

#include <algorithm>

#include "omnitraj/error.hpp"
#include "omnitraj/modality.hpp"
#include "omnitraj/preprocess.hpp"

namespace omnitraj {

using nn::Var;

namespace {

constexpr ModalityMask kCanonicalOrder[] = {kTraj, kTopology, kRoad, kRegion};

const char* single_name(ModalityMask m) {
  switch (m) {
    case kTraj: return "traj";
    case kTopology: return "top";
    case kRoad: return "road";
    case kRegion: return "reg";
  }
  return "?";
}

}  // namespace

std::string modality_name(ModalityMask m) {
  // Table-style names list the coarse modalities first: "reg+road+top".
  std::string out;
  for (ModalityMask bit : {kRegion, kRoad, kTopology, kTraj}) {
    if (!(m & bit)) continue;
    if (!out.empty()) out += '+';
    out += single_name(bit);
  }
  return out.empty() ? "none" : out;
}

ModalityMask parse_modality(std::string_view s) {
  ModalityMask m = 0;
  while (!s.empty()) {
    const auto plus = s.find('+');
    const auto part = s.substr(0, plus);
    ModalityMask bit = 0;
    if (part == "traj" || part == "trajectory") bit = kTraj;
    else if (part == "top" || part == "topology") bit = kTopology;
    else if (part == "road") bit = kRoad;
    else if (part == "reg" || part == "region") bit = kRegion;
    else throw ParameterError("unknown modality: " + std::string(part));
    if (m & bit) throw ParameterError("duplicate modality: " + std::string(part));
    m |= bit;
    s = plus == std::string_view::npos ? std::string_view{} : s.substr(plus + 1);
  }
  if (m == 0) throw ParameterError("empty modality specification");
  return m;
}

bool is_single_modality(ModalityMask m) { return m != 0 && (m & (m - 1)) == 0; }

const std::vector<ModalityMask>& fusion_subsets() {
  static const std::vector<ModalityMask> subsets{
      static_cast<ModalityMask>(kTopology | kRegion),
      static_cast<ModalityMask>(kTopology | kRoad),
      static_cast<ModalityMask>(kTopology | kRoad | kRegion),
  };
  return subsets;
}

std::string supported_subsets_text() {
  std::string out;
  for (auto m : fusion_subsets()) {
    if (!out.empty()) out += ", ";
    out += modality_name(m);
  }
  return out;
}

OmniModel::OmniModel(EncoderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const auto d = static_cast<std::size_t>(cfg_.d);
  const auto h = static_cast<std::size_t>(cfg_.h);
  trajectory_encoder = TrajectoryEncoder(cfg_, rng);
  topology_encoder = TopologyEncoder(cfg_, rng);
  road_encoder = RoadEncoder(cfg_, rng);
  region_encoder = RegionEncoder(cfg_, rng);
  traj_head = ProjectionHead(d, h, cfg_.head_activation, rng);
  topology_head = ProjectionHead(d, h, cfg_.head_activation, rng);
  road_head = ProjectionHead(d, h, cfg_.head_activation, rng);
  region_head = ProjectionHead(d, h, cfg_.head_activation, rng);
  for (auto subset : fusion_subsets()) {
    std::size_t count = 0;
    for (auto bit : kCanonicalOrder) count += (subset & bit) ? 1 : 0;
    fusion.emplace_back(subset, FusionProjector(count, h, rng));
  }

  trajectory_encoder.register_parameters("traj", params_);
  topology_encoder.register_parameters("top", params_);
  road_encoder.register_parameters("road", params_);
  region_encoder.register_parameters("region", params_);
  traj_head.register_parameters("head.traj", params_);
  topology_head.register_parameters("head.top", params_);
  road_head.register_parameters("head.road", params_);
  region_head.register_parameters("head.region", params_);
  for (const auto& [subset, proj] : fusion) proj.register_parameters("fusion." + modality_name(subset), params_);
}

std::vector<Point> OmniModel::to_frame(std::span<const Point> points, std::span<const Point> reference) const {
  LocalFrame frame;
  if (cfg_.frame == FrameMode::local) {
    frame = local_frame(reference);
  } else {
    const auto& b = cfg_.frame_box;
    frame.center = {(b.min_x + b.max_x) / 2.0, (b.min_y + b.max_y) / 2.0};
    frame.scale = std::max(b.width(), b.height()) / 2.0;
  }
  std::vector<Point> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(frame.apply(p));
  return out;
}

PreparedSample OmniModel::prepare(const TrajectoryRecord& record, const GridSpec* grid) const {
  PreparedSample s;
  s.id = record.trajectory.id;
  const auto& pts = record.trajectory.points;
  Trajectory framed{record.trajectory.id, to_frame(pts, pts)};
  s.resampled = resample(framed, cfg_.length).points;
  const auto topo = record.topology ? *record.topology : topology_view(record.trajectory);
  s.topology = to_frame(topo.points, pts);
  if (record.road) s.road = record.road->segment_ids;
  if (record.region) {
    s.region = record.region->region_ids;
  } else if (grid) {
    s.region = extract_regions(record.trajectory, *grid).region_ids;
  }
  return s;
}

Var OmniModel::embed_trajectory(std::span<const Point> resampled) const {
  return traj_head.forward(trajectory_encoder.forward(resampled));
}

Var OmniModel::embed_topology(std::span<const Point> points) const {
  return topology_head.forward(topology_encoder.forward(points));
}

Var OmniModel::embed_road(std::span<const SegmentId> ids) const { return road_head.forward(road_encoder.forward(ids)); }

Var OmniModel::embed_region(std::span<const RegionId> ids) const {
  return region_head.forward(region_encoder.forward(ids));
}

Var OmniModel::embed(ModalityMask m, const PreparedSample& s) const {
  auto single = [&](ModalityMask bit) -> Var {
    switch (bit) {
      case kTraj: return embed_trajectory(s.resampled);
      case kTopology: return embed_topology(s.topology);
      case kRoad:
        if (s.road.empty()) throw DataError("trajectory " + std::to_string(s.id) + " has no road view");
        return embed_road(s.road);
      case kRegion:
        if (s.region.empty()) throw DataError("trajectory " + std::to_string(s.id) + " has no region view");
        return embed_region(s.region);
    }
    throw ParameterError("unknown modality");
  };
  if (is_single_modality(m)) return single(m);
  std::vector<std::pair<ModalityMask, Var>> parts;
  for (auto bit : kCanonicalOrder)
    if (m & bit) parts.emplace_back(bit, single(bit));
  return fuse(parts);
}

Var OmniModel::fuse(const std::vector<std::pair<ModalityMask, Var>>& parts) const {
  ModalityMask subset = 0;
  for (const auto& [m, v] : parts) {
    if (!is_single_modality(m)) throw ParameterError("fusion inputs must be single modalities");
    if (subset & m) throw ParameterError("duplicate modality in fusion: " + modality_name(m));
    if (v.cols() != static_cast<std::size_t>(cfg_.h)) throw ParameterError("fusion input has wrong width");
    subset |= m;
  }
  if (parts.size() < 2) throw ParameterError("fusion needs at least two embeddings");
  for (const auto& [s, proj] : fusion) {
    if (s != subset) continue;
    std::vector<Var> ordered;
    for (auto bit : kCanonicalOrder)
      for (const auto& [m, v] : parts)
        if (m == bit) ordered.push_back(v);
    return proj.forward(ordered);
  }
  throw ConfigError("unsupported modality subset " + modality_name(subset) + "; supported: " +
                    supported_subsets_text());
}

std::vector<float> OmniModel::embed_vector(ModalityMask m, const PreparedSample& s) const {
  nn::NoGradGuard guard;
  const Var v = embed(m, s);
  std::vector<float> out(v.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(v.value()(0, i));
  return out;
}

nn::Checkpoint OmniModel::checkpoint() const { return nn::Checkpoint::capture(cfg_.to_kv().serialize(), params_); }

void OmniModel::load(const nn::Checkpoint& ckpt) {
  const auto other = EncoderConfig::from_kv(KeyValueConfig::parse(ckpt.config_text));
  if (other.to_kv().serialize() != cfg_.to_kv().serialize())
    throw ConfigError("checkpoint config does not match the model config");
  ckpt.apply_to(params_);
}

OmniModel OmniModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  OmniModel model(EncoderConfig::from_kv(KeyValueConfig::parse(ckpt.config_text)));
  ckpt.apply_to(model.params_);
  return model;
}

}  // namespace omnitraj
