#pragma once

// Finite-difference checks over every layer and every encoder, shared by the
// unit tests and the acceptance binary.

#include <string>
#include <utility>
#include <vector>

#include "omnitraj/encoders.hpp"
#include "omnitraj/nn/layers.hpp"
#include "omnitraj/random.hpp"

namespace gradsuite {

using namespace omnitraj;
using namespace omnitraj::nn;

inline Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

// Scalar probe: a fixed random weighting of every output entry, so no
// gradient vanishes by symmetry.
inline Var probe(const Var& out, std::uint64_t seed) {
  Rng rng(seed);
  return sum_all(mul(out, constant(random_tensor(rng, out.rows(), out.cols()))));
}

inline std::vector<Var> leaves(const ParameterSet& set) { return set.vars(); }

struct Result {
  std::string name;
  double error;
};

inline std::vector<Result> run_layer_checks() {
  std::vector<Result> out;
  Rng rng(2024);
  auto check = [&](const std::string& name, std::vector<Var> params, const std::function<Var()>& f) {
    out.push_back({name, grad_check(f, params)});
  };

  {
    Var x = parameter(random_tensor(rng, 3, 4)), w = parameter(random_tensor(rng, 4, 2)), b = parameter(random_tensor(rng, 1, 2));
    check("linear", {x, w, b}, [=] { return probe(linear_forward(x, w, b), 1); });
  }
  {
    Var a = parameter(random_tensor(rng, 3, 5)), b = parameter(random_tensor(rng, 4, 5));
    check("matmul_nt", {a, b}, [=] { return probe(matmul_nt(a, b), 2); });
  }
  {
    Var a = parameter(random_tensor(rng, 4, 6, 2.0));
    check("gelu", {a}, [=] { return probe(gelu(a), 3); });
  }
  {
    Var x = parameter(random_tensor(rng, 3, 6)), g = parameter(random_tensor(rng, 1, 6)), b = parameter(random_tensor(rng, 1, 6));
    check("layer_norm", {x, g, b}, [=] { return probe(layer_norm(x, g, b), 4); });
  }
  {
    Var a = parameter(random_tensor(rng, 4, 5, 2.0));
    static const std::vector<char> mask{0, 1, 0, 0, 1};
    check("softmax_rows", {a}, [=] { return probe(softmax_rows(a, mask), 5); });
  }
  {
    Var a = parameter(random_tensor(rng, 5, 8));
    static const std::vector<double> pos{0, 1, 2, 3, 7.5};
    check("rope", {a}, [=] { return probe(rope(a, pos, 100.0), 6); });
  }
  {
    Var a = parameter(random_tensor(rng, 3, 7));
    check("l2_normalize_rows", {a}, [=] { return probe(l2_normalize_rows(a), 7); });
  }
  {
    Var t = parameter(random_tensor(rng, 6, 4));
    static const std::vector<std::int32_t> ids{5, 0, 5, 2};
    check("gather_rows", {t}, [=] { return probe(gather_rows(t, ids), 8); });
  }
  {
    Var a = parameter(random_tensor(rng, 2, 3)), b = parameter(random_tensor(rng, 2, 4)), c = parameter(random_tensor(rng, 1, 7));
    check("concat_slice", {a, b, c}, [=] {
      const auto cols = concat_cols({a, b});
      const auto rows = concat_rows({cols, c});
      return probe(add(slice_cols(rows, 1, 6), slice_cols(rows, 0, 5)), 9);
    });
  }
  {
    Var q = parameter(random_tensor(rng, 4, 6));
    check("cross_entropy_diagonal", {q}, [=] { return cross_entropy_diagonal(scale(matmul_nt(q, q), 2.0)); });
  }
  {
    Var a = parameter(random_tensor(rng, 3, 4)), row = parameter(random_tensor(rng, 1, 4));
    check("add_row_mul_scale", {a, row}, [=] { return probe(scale(mul(add_row(a, row), a), 0.5), 10); });
  }
  {
    Rng init(31);
    MultiHeadAttention mha(8, 2, init);
    ParameterSet set;
    mha.register_parameters("mha", set);
    Var x = parameter(random_tensor(rng, 5, 8));
    auto params = leaves(set);
    params.push_back(x);
    check("attention_rope", params, [=] {
      AttentionOptions o;
      o.rope = true;
      return probe(mha.forward(x, o), 11);
    });
    static const std::vector<char> mask{1, 0, 0, 0, 0};
    check("attention_masked", params, [=] {
      AttentionOptions o;
      o.key_mask = mask;
      return probe(mha.forward(x, o), 12);
    });
  }
  {
    Rng init(32);
    TransformerBlock block(16, 4, init);
    ParameterSet set;
    block.register_parameters("block", set);
    Var x = parameter(random_tensor(rng, 6, 16));
    auto params = leaves(set);
    params.push_back(x);
    check("transformer_block", params, [=] { return probe(block.forward(x), 13); });
  }
  {
    Rng init(33);
    ProjectionHead head(8, 12, HeadActivation::gelu, init);
    ParameterSet set;
    head.register_parameters("head", set);
    Var z = parameter(random_tensor(rng, 1, 8));
    auto params = leaves(set);
    params.push_back(z);
    check("projection_head", params, [=] { return probe(head.forward(z), 14); });
  }
  {
    Rng init(34);
    FusionProjector fusion(2, 6, init);
    ParameterSet set;
    fusion.register_parameters("fusion", set);
    Var a = parameter(random_tensor(rng, 1, 6)), b = parameter(random_tensor(rng, 1, 6));
    auto params = leaves(set);
    params.push_back(a);
    params.push_back(b);
    check("fusion", params, [=] { return probe(fusion.forward({a, b}), 15); });
  }
  return out;
}

inline EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.d = 8;
  cfg.h = 6;
  cfg.blocks = 2;
  cfg.heads = 2;
  cfg.length = 16;
  cfg.patch = 2;  // 8 patch tokens
  cfg.road_vocab = 12;
  cfg.region_vocab = 16;
  cfg.frame_box = {0, 0, 4, 4};
  return cfg;
}

inline std::vector<Result> run_encoder_checks() {
  std::vector<Result> out;
  const auto cfg = small_config();
  Rng data(77);
  std::vector<Point> pts;
  for (int i = 0; i < cfg.length; ++i) pts.push_back({data.uniform(-1, 1), data.uniform(-1, 1)});
  const std::vector<Point> topo(pts.begin(), pts.begin() + 8);
  const std::vector<SegmentId> road{3, 7, 1, 11, 0, 4, 9, 2};
  const std::vector<RegionId> region{15, 2, 8, 0, 5, 9, 13, 1};

  auto check = [&](const std::string& name, const auto& encoder, const std::function<Var()>& f) {
    ParameterSet set;
    encoder.register_parameters(name, set);
    auto params = set.vars();
    out.push_back({name, grad_check(f, params)});
  };
  Rng rng(cfg.seed);
  const TrajectoryEncoder traj(cfg, rng);
  const TopologyEncoder top(cfg, rng);
  const RoadEncoder rd(cfg, rng);
  const RegionEncoder reg(cfg, rng);
  check("trajectory_encoder", traj, [&] { return probe(traj.forward(pts), 21); });
  check("topology_encoder", top, [&] { return probe(top.forward(topo), 22); });
  check("road_encoder", rd, [&] { return probe(rd.forward(road), 23); });
  check("region_encoder", reg, [&] { return probe(reg.forward(region), 24); });
  return out;
}

}  // namespace gradsuite
