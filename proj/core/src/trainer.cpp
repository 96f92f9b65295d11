#include "omnitraj/trainer.hpp"

#include <chrono>
#include <numeric>

#include <json.hpp>

#include "omnitraj/error.hpp"
#include "omnitraj/loss.hpp"
#include "omnitraj/nn/optimizer.hpp"
#include "omnitraj/random.hpp"

namespace omnitraj {

using nn::Var;

void TrainOptions::write(KeyValueConfig& kv) const {
  kv.set("train.epochs", epochs);
  kv.set("train.batch_size", batch_size);
  kv.set("train.learning_rate", learning_rate);
  kv.set("train.tau", tau);
  kv.set("train.seed", static_cast<std::int64_t>(seed));
  std::string mods;
  for (auto m : modalities) {
    if (!mods.empty()) mods += ',';
    mods += modality_name(m);
  }
  kv.set("train.modalities", mods);
  policy.write(kv);
}

TrainOptions TrainOptions::from_kv(const KeyValueConfig& kv) {
  TrainOptions o;
  o.epochs = static_cast<int>(kv.get_int("train.epochs", o.epochs));
  o.batch_size = static_cast<int>(kv.get_int("train.batch_size", o.batch_size));
  o.learning_rate = kv.get_double("train.learning_rate", o.learning_rate);
  o.tau = kv.get_double("train.tau", o.tau);
  o.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", static_cast<std::int64_t>(o.seed)));
  if (auto mods = kv.get("train.modalities")) {
    o.modalities.clear();
    std::string_view rest = *mods;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      o.modalities.push_back(parse_modality(rest.substr(0, comma)));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  o.policy = AugmentationPolicy::from_kv(kv);
  if (o.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (o.batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
  if (!(o.tau > 0.0)) throw ConfigError("train.tau must be positive");
  return o;
}

std::string EpochRecord::to_json_line() const {
  nlohmann::json rec;
  rec["epoch"] = epoch;
  rec["total"] = total;
  rec["seconds"] = seconds;
  nlohmann::json mods = nlohmann::json::object();
  for (const auto& [m, v] : modality_loss) mods[modality_name(m)] = v;
  rec["losses"] = mods;
  return rec.dump();
}

TrainResult train(OmniModel& model, const std::vector<PreparedSample>& data, const TrainOptions& opts,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  require(opts.batch_size >= 2, "batch size must be >= 2");
  require(opts.tau > 0.0, "temperature must be positive");
  opts.policy.validate();
  if (opts.modalities.empty()) throw ParameterError("training needs at least one modality besides traj");

  ModalityMask needed = kTraj;
  for (auto m : opts.modalities) {
    if (m == kTraj) throw ParameterError("traj is the anchor modality and cannot be listed");
    needed |= m;
  }
  for (const auto& s : data) {
    if ((needed & kRoad) && s.road.empty()) throw DataError("sample " + std::to_string(s.id) + " lacks a road view");
    if ((needed & kRegion) && s.region.empty())
      throw DataError("sample " + std::to_string(s.id) + " lacks a region view");
  }

  TrainResult result;
  if (opts.epochs == 0 || data.size() < 2) return result;

  nn::AdamOptions adam_opts;
  adam_opts.learning_rate = opts.learning_rate;
  nn::Adam optimizer(model.parameters().vars(), adam_opts);
  Rng order_rng(mix_seed(opts.seed, 0x5eed));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int vocab = model.config().road_vocab;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto snapshot = nn::Checkpoint::capture("", model.parameters());
    order_rng.shuffle(order.begin(), order.end());

    EpochRecord record;
    record.epoch = epoch;
    for (auto m : opts.modalities) record.modality_loss.emplace_back(m, 0.0);
    int batches = 0;

    try {
      for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(opts.batch_size)) {
        const auto end = std::min(order.size(), begin + static_cast<std::size_t>(opts.batch_size));
        if (end - begin < 2) break;

        std::vector<Var> traj_rows, top_rows, road_rows, region_rows;
        for (std::size_t i = begin; i < end; ++i) {
          const auto& s = data[order[i]];
          const auto aug_seed = mix_seed(opts.seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(s.id));
          traj_rows.push_back(model.embed_trajectory(s.resampled));
          if (needed & kTopology) top_rows.push_back(model.embed_topology(s.topology));
          if (needed & kRoad) {
            const auto road = augment_road(RoadSeq{s.id, s.road}, opts.policy, aug_seed, vocab);
            road_rows.push_back(model.embed_road(road.segment_ids));
          }
          if (needed & kRegion) {
            const auto region = augment_region(RegionSeq{s.id, s.region}, opts.policy, mix_seed(aug_seed, 1));
            region_rows.push_back(model.embed_region(region.region_ids));
          }
        }

        std::vector<std::pair<ModalityMask, Var>> singles;
        singles.emplace_back(kTraj, nn::concat_rows(traj_rows));
        if (!top_rows.empty()) singles.emplace_back(kTopology, nn::concat_rows(top_rows));
        if (!road_rows.empty()) singles.emplace_back(kRoad, nn::concat_rows(road_rows));
        if (!region_rows.empty()) singles.emplace_back(kRegion, nn::concat_rows(region_rows));
        auto lookup = [&](ModalityMask bit) -> const Var& {
          for (const auto& [m, v] : singles)
            if (m == bit) return v;
          throw ParameterError("missing modality");
        };

        std::vector<std::pair<ModalityMask, Var>> batch{{kTraj, lookup(kTraj)}};
        for (auto m : opts.modalities) {
          if (is_single_modality(m)) {
            batch.emplace_back(m, lookup(m));
          } else {
            std::vector<std::pair<ModalityMask, Var>> parts;
            for (ModalityMask bit : {kTopology, kRoad, kRegion})
              if (m & bit) parts.emplace_back(bit, lookup(bit));
            batch.emplace_back(m, model.fuse(parts));
          }
        }

        const auto report = bidirectional_loss(batch, opts.tau);
        optimizer.zero_grad();
        report.total.backward();
        optimizer.step();
        ++result.steps;
        ++batches;
        record.total += report.total_value();
        for (std::size_t t = 0; t < report.terms.size(); ++t)
          record.modality_loss[t].second += report.terms[t].traj_to_modality + report.terms[t].modality_to_traj;
      }
    } catch (const NumericError&) {
      snapshot.apply_to(model.parameters());
      throw;
    }

    if (batches > 0) {
      record.total /= batches;
      for (auto& [m, v] : record.modality_loss) v /= batches;
    }
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.curve.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace omnitraj
