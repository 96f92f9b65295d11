// omnitraj command-line driver. Every subcommand reads an optional key=value
// config file, overlays the flags given on the command line, and runs one
// pipeline stage. Exit codes: 0 ok, 1 data/config error, 2 usage error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "omnitraj/embedding_store.hpp"
#include "omnitraj/error.hpp"
#include "omnitraj/evaluation.hpp"
#include "omnitraj/modality.hpp"
#include "omnitraj/pipeline.hpp"
#include "omnitraj/retrieval.hpp"
#include "omnitraj/service.hpp"
#include "omnitraj/similarity.hpp"
#include "omnitraj/trainer.hpp"

namespace fs = std::filesystem;
using namespace omnitraj;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_root() {
  if (const char* env = std::getenv("OMNITRAJ_DATA_DIR"); env && *env) return env;
  return "omnitraj-data";
}

// Flags that map onto config keys. Values given on the command line win over
// the --config file.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& help) : app_(parent.add_subcommand(name, help)) {
    app_->add_option("--config", config_file_, "key = value config file");
    app_->add_option("--out", out_, "output path");
    option("--seed", "seed", "random seed");
  }

  CLI::App* app() { return app_; }

  void option(const std::string& flag, const std::string& key, const std::string& help) {
    auto& slot = values_[key];
    app_->add_option(flag, slot, help);
  }

  KeyValueConfig config() const {
    KeyValueConfig kv;
    if (!config_file_.empty()) kv = KeyValueConfig::load(config_file_);
    for (const auto& [key, value] : values_)
      if (value) kv.set(key, *value);
    return kv;
  }

  fs::path out(const fs::path& fallback) const { return out_.empty() ? fallback : fs::path(out_); }

 private:
  CLI::App* app_;
  std::string config_file_;
  std::string out_;
  std::map<std::string, std::optional<std::string>> values_;
};

std::vector<std::int32_t> parse_id_list(const std::string& text) {
  std::vector<std::int32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("bad id '" + item + "'");
    }
  }
  return out;
}

// "x,y;x,y;..."
std::vector<Point> parse_point_list(const std::string& text) {
  std::vector<Point> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto comma = item.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      out.push_back({std::stod(item.substr(0, comma)), std::stod(item.substr(comma + 1))});
    } catch (const std::exception&) {
      throw UsageError("bad point '" + item + "', expected x,y");
    }
  }
  return out;
}

std::vector<ModalityMask> parse_modality_list(const std::string& text) {
  std::vector<ModalityMask> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_modality(item));
  }
  return out;
}

std::string store_file_name(ModalityMask m) { return modality_name(m) + ".otes"; }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

struct Loaded {
  OmniModel model;
  nn::Checkpoint checkpoint;
};

Loaded load_model(const fs::path& path) {
  auto ckpt = nn::Checkpoint::load(path);
  auto model = OmniModel::from_checkpoint(ckpt);
  return {std::move(model), std::move(ckpt)};
}

ReportContext context_for(const Loaded& m, const KeyValueConfig& run) {
  KeyValueConfig snapshot = KeyValueConfig::parse(m.checkpoint.config_text);
  snapshot.merge(run);
  return {snapshot.serialize(), static_cast<std::uint64_t>(run.get_int("seed", 0)), nn::to_hex(m.checkpoint.fingerprint())};
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

// --- subcommands -----------------------------------------------------------

int gen_data(const Command& cmd, const fs::path& root) {
  const auto kv = cmd.config();
  const auto opts = CorpusOptions::from_kv(kv);
  const auto dir = cmd.out(root);
  fs::create_directories(dir);
  const auto corpus = generate_corpus(opts);
  corpus.network.save(dir / "network.jsonl");
  save_dataset(dir / "train.jsonl", corpus.train);
  save_dataset(dir / "test.jsonl", corpus.test);
  KeyValueConfig used;
  opts.write(used);
  used.save(dir / "data.kv");
  std::printf("wrote %zu train and %zu test trajectories, %zu road segments to %s\n", corpus.train.size(),
              corpus.test.size(), corpus.network.segment_count(), dir.string().c_str());
  return 0;
}

int extract(const Command& cmd, const fs::path& root) {
  const auto kv = cmd.config();
  const fs::path in = kv.get_string("in", (root / "train.jsonl").string());
  const fs::path network = kv.get_string("network", (root / "network.jsonl").string());
  ExtractOptions opts;
  opts.topology_epsilon = kv.get_double("extract.epsilon", opts.topology_epsilon);
  opts.topology_angle_min = kv.get_double("extract.angle_min", opts.topology_angle_min);
  opts.overwrite = kv.get_bool("extract.overwrite", true);
  auto records = load_dataset(in);
  const auto net = RoadNetwork::load(network);
  extract_views(records, grid_for_network(net), opts);
  const auto out = cmd.out(in);
  ensure_parent(out);
  save_dataset(out, records);
  std::printf("extracted views for %zu trajectories into %s\n", records.size(), out.string().c_str());
  return 0;
}

int train_cmd(const Command& cmd, const fs::path& root) {
  auto kv = cmd.config();
  if (kv.contains("seed") && !kv.contains("train.seed")) kv.set("train.seed", *kv.get("seed"));
  const fs::path data = kv.get_string("train", (root / "train.jsonl").string());
  const auto net = RoadNetwork::load(kv.get_string("network", (root / "network.jsonl").string()));
  const auto grid = grid_for_network(net);

  KeyValueConfig enc_kv = encoder_config_for(net, grid).to_kv();
  enc_kv.merge(kv);
  const auto cfg = EncoderConfig::from_kv(enc_kv);
  const auto opts = TrainOptions::from_kv(kv);

  OmniModel model(cfg);
  const auto samples = prepare_samples(model, load_dataset(data), grid);
  const auto out = cmd.out(root / "model.otwt");
  ensure_parent(out);
  const auto curve_path = fs::path(out).replace_extension(".curve.jsonl");
  std::ofstream curve(curve_path);
  if (!curve) throw IoError("cannot write " + curve_path.string());

  const auto result = train(model, samples, opts, [&](const EpochRecord& e) {
    curve << e.to_json_line() << '\n';
    curve.flush();
    std::printf("epoch %3d  loss %.4f  (%.1fs)\n", e.epoch, e.total, e.seconds);
    std::fflush(stdout);
  });
  const auto ckpt = model.checkpoint();
  ckpt.save(out);
  KeyValueConfig used = cfg.to_kv();
  opts.write(used);
  used.save(fs::path(out).replace_extension(".kv"));
  std::printf("trained %llu steps; checkpoint %s fingerprint %s\n", static_cast<unsigned long long>(result.steps),
              out.string().c_str(), nn::to_hex(ckpt.fingerprint()).c_str());
  return 0;
}

int embed(const Command& cmd, const fs::path& root) {
  const auto kv = cmd.config();
  const auto loaded = load_model(kv.get_string("model", (root / "model.otwt").string()));
  const auto net = RoadNetwork::load(kv.get_string("network", (root / "network.jsonl").string()));
  const auto grid = grid_for_network(net);
  const auto records = load_dataset(kv.get_string("dataset", (root / "test.jsonl").string()));
  const auto samples = prepare_samples(loaded.model, records, grid);
  const auto dir = cmd.out(root / "stores");
  fs::create_directories(dir);
  for (auto m : parse_modality_list(kv.get_string("modalities", "traj,top,road,reg"))) {
    const auto store = build_store(loaded.model, samples, m);
    store.save(dir / store_file_name(m));
    std::printf("%-14s %zu rows x %u -> %s\n", modality_name(m).c_str(), store.size(), store.width(),
                (dir / store_file_name(m)).string().c_str());
  }
  return 0;
}

StoreSet load_stores(const fs::path& dir) {
  StoreSet stores;
  if (!fs::is_directory(dir)) throw IoError("store directory " + dir.string() + " does not exist");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".otes") continue;
    auto s = EmbeddingStore::load(entry.path());
    const auto m = s.modality();
    stores.emplace(m, std::move(s));
  }
  return stores;
}

int query(const Command& cmd, const fs::path& root) {
  const auto kv = cmd.config();
  const auto loaded = load_model(kv.get_string("model", (root / "model.otwt").string()));
  const auto stores = load_stores(kv.get_string("stores", (root / "stores").string()));
  QuerySpec spec;
  if (auto v = kv.get("query.road")) spec.road = parse_id_list(*v);
  if (auto v = kv.get("query.region")) spec.region = parse_id_list(*v);
  if (auto v = kv.get("query.topology")) spec.topology = parse_point_list(*v);
  if (auto v = kv.get("query.trajectory")) spec.trajectory = parse_point_list(*v);
  spec.k = static_cast<std::size_t>(kv.get_int("query.k", 10));
  if (auto c = kv.get("query.coarse")) {
    spec.coarse = QuerySpec::Coarse{parse_modality(*c), static_cast<std::size_t>(kv.get_int("query.subset", 200))};
  }
  const auto result = condition_query(stores, spec, loaded.model);
  nlohmann::json hits = nlohmann::json::array();
  for (const auto& h : result.hits) hits.push_back({{"id", h.id}, {"score", h.score}});
  nlohmann::json body = {{"results", hits},
                         {"provenance",
                          {{"modalities", modality_name(result.provenance.query)},
                           {"stage", result.provenance.two_stage ? "two-stage" : "single"},
                           {"subset", result.provenance.subset}}}};
  const auto text = body.dump();
  std::printf("%s\n", text.c_str());
  if (const auto out = cmd.out(""); !out.empty()) write_lines(out, {text});
  return 0;
}

int eval_sim(const Command& cmd, const fs::path& root) {
  const auto kv = cmd.config();
  const auto loaded = load_model(kv.get_string("model", (root / "model.otwt").string()));
  const auto net = RoadNetwork::load(kv.get_string("network", (root / "network.jsonl").string()));
  const auto grid = grid_for_network(net);
  const auto tests = prepare_samples(loaded.model, load_dataset(kv.get_string("dataset", (root / "test.jsonl").string())), grid);
  const auto targets = build_store(loaded.model, tests, kTraj);
  const auto ctx = context_for(loaded, kv);

  std::vector<RankingReport> reports;
  for (auto m : parse_modality_list(kv.get_string("variants", "top,reg,road,reg+top,road+top,reg+road+top")))
    reports.push_back(run_similarity_eval(loaded.model, targets, tests, m, std::nullopt, ctx));
  if (const auto subset = kv.get_int("coarse_subset", 0); subset > 0) {
    const auto coarse_store = build_store(loaded.model, tests, kRoad);
    auto r = run_similarity_eval(loaded.model, targets, tests, kTopology,
                                 CoarseStage{&coarse_store, kRoad, static_cast<std::size_t>(subset)}, ctx);
    r.label = "top|road@" + std::to_string(subset);
    reports.push_back(std::move(r));
  }
  std::vector<std::string> lines;
  for (const auto& r : reports) lines.push_back(r.to_json_line());
  write_lines(cmd.out(root / "reports" / "similarity.jsonl"), lines);
  std::printf("%s", format_ranking_table(reports).c_str());
  return 0;
}

int eval_cond(const Command& cmd, const fs::path& root) {
  const auto kv = cmd.config();
  const auto loaded = load_model(kv.get_string("model", (root / "model.otwt").string()));
  const auto net = RoadNetwork::load(kv.get_string("network", (root / "network.jsonl").string()));
  const auto grid = grid_for_network(net);
  const auto tests = prepare_samples(loaded.model, load_dataset(kv.get_string("dataset", (root / "test.jsonl").string())), grid);
  const auto targets = build_store(loaded.model, tests, kTraj);
  const auto ctx = context_for(loaded, kv);

  std::vector<std::size_t> lengths{0};
  for (auto v : parse_id_list(kv.get_string("lengths", ""))) lengths.push_back(static_cast<std::size_t>(v));
  std::vector<std::size_t> ks;
  for (auto v : parse_id_list(kv.get_string("ks", ""))) ks.push_back(static_cast<std::size_t>(v));

  std::vector<CoverageReport> reports;
  for (auto m : parse_modality_list(kv.get_string("modalities", "road,reg"))) {
    if (m != kRoad && m != kRegion) throw UsageError("condition modality must be road or reg");
    const auto elements = element_index(tests, m);
    for (auto len : lengths) reports.push_back(run_condition_eval(loaded.model, targets, elements, tests, m, len, ks, ctx));
  }
  std::vector<std::string> lines;
  for (const auto& r : reports) lines.push_back(r.to_json_line());
  write_lines(cmd.out(root / "reports" / "condition.jsonl"), lines);
  std::printf("%s", format_coverage_table(reports).c_str());
  return 0;
}

int bench_heuristics(const Command& cmd, const fs::path& root) {
  const auto kv = cmd.config();
  const auto records = load_dataset(kv.get_string("dataset", (root / "test.jsonl").string()));
  std::vector<Trajectory> candidates, queries;
  for (const auto& r : records) {
    candidates.push_back(r.trajectory);
    queries.push_back(r.topology ? Trajectory{r.trajectory.id, r.topology->points}
                                 : Trajectory{r.trajectory.id, topology_view(r.trajectory).points});
  }
  const auto count = static_cast<std::size_t>(kv.get_int("queries", 1000));
  const double edr_eps = kv.get_double("edr_eps", 0.25);
  const auto threads = static_cast<unsigned>(kv.get_int("threads", 1));
  ReportContext ctx{kv.serialize(), static_cast<std::uint64_t>(kv.get_int("seed", 0)), ""};

  std::vector<RankingReport> reports;
  for (auto m : {Measure::dtw, Measure::edr, Measure::hausdorff, Measure::frechet})
    reports.push_back(run_heuristic_eval(m, candidates, queries, count, edr_eps, threads, ctx));
  std::vector<std::string> lines;
  for (const auto& r : reports) lines.push_back(r.to_json_line());
  write_lines(cmd.out(root / "reports" / "heuristics.jsonl"), lines);
  std::printf("%s", format_ranking_table(reports).c_str());
  return 0;
}

int serve(const Command& cmd, const fs::path& root) {
  const auto kv = cmd.config();
  const auto snapshot = EngineSnapshot::load(kv.get_string("root", root.string()),
                                             kv.get_string("dataset", (root / "test.jsonl").string()));
  QueryService service(snapshot);
  HttpServer server(service);
  const auto host = kv.get_string("host", "127.0.0.1");
  const int port = server.bind(host, static_cast<int>(kv.get_int("port", 8080)));
  std::printf("serving %zu trajectories on http://%s:%d\n", snapshot->records.size(), host.c_str(), port);
  std::fflush(stdout);
  server.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"omnitraj: multimodal trajectory retrieval"};
  app.require_subcommand(1);
  std::string data_dir = default_root().string();
  app.add_option("--data-dir", data_dir, "artifact root (default $OMNITRAJ_DATA_DIR or ./omnitraj-data)");

  Command gen(app, "gen-data", "generate a synthetic road network and trajectories");
  gen.option("--count", "data.train", "training trajectories");
  gen.option("--test-count", "data.test", "held-out trajectories");
  gen.option("--rows", "data.rows", "lattice rows");
  gen.option("--cols", "data.cols", "lattice columns");
  gen.option("--jitter", "data.jitter", "node jitter as a fraction of the spacing");
  gen.option("--min-hops", "data.min_hops", "shortest walk in segments");
  gen.option("--max-hops", "data.max_hops", "longest walk in segments");

  Command ext(app, "extract", "fill topology and region views of a dataset");
  ext.option("--in", "in", "dataset file");
  ext.option("--network", "network", "network file");
  ext.option("--epsilon", "extract.epsilon", "Douglas-Peucker tolerance (normalized units)");
  ext.option("--angle-min", "extract.angle_min", "turning-angle threshold in radians");

  Command tr(app, "train", "train the encoders contrastively");
  tr.option("--train", "train", "training dataset file");
  tr.option("--network", "network", "network file");
  tr.option("--epochs", "train.epochs", "epochs");
  tr.option("--batch", "train.batch_size", "batch size");
  tr.option("--lr", "train.learning_rate", "Adam learning rate");
  tr.option("--tau", "train.tau", "InfoNCE temperature");

  Command emb(app, "embed", "build embedding stores");
  emb.option("--model", "model", "checkpoint file");
  emb.option("--network", "network", "network file");
  emb.option("--dataset", "dataset", "dataset to encode");
  emb.option("--modalities", "modalities", "comma-separated modalities, e.g. traj,top,road,reg");

  Command qry(app, "query", "run one retrieval query");
  qry.option("--model", "model", "checkpoint file");
  qry.option("--stores", "stores", "store directory");
  qry.option("--road", "query.road", "road ids, comma-separated");
  qry.option("--region", "query.region", "region ids, comma-separated");
  qry.option("--topology", "query.topology", "topology points as x,y;x,y;...");
  qry.option("--trajectory", "query.trajectory", "trajectory points as x,y;x,y;...");
  qry.option("-k,--k", "query.k", "result count");
  qry.option("--coarse", "query.coarse", "coarse-stage modality (road or reg)");
  qry.option("--subset", "query.subset", "coarse-stage subset size");

  Command sim(app, "eval-sim", "self-retrieval evaluation over modality variants");
  sim.option("--model", "model", "checkpoint file");
  sim.option("--network", "network", "network file");
  sim.option("--dataset", "dataset", "held-out dataset");
  sim.option("--variants", "variants", "query modalities, comma-separated");
  sim.option("--coarse-subset", "coarse_subset", "also run a road-filtered two-stage topology variant");

  Command cond(app, "eval-cond", "condition-based retrieval coverage");
  cond.option("--model", "model", "checkpoint file");
  cond.option("--network", "network", "network file");
  cond.option("--dataset", "dataset", "held-out dataset");
  cond.option("--modalities", "modalities", "road, reg or both");
  cond.option("--lengths", "lengths", "extra condition lengths to sweep");
  cond.option("--ks", "ks", "extra k values to sweep");

  Command heur(app, "bench-heuristics", "rank with DTW, EDR, Hausdorff and Frechet");
  heur.option("--dataset", "dataset", "dataset file");
  heur.option("--queries", "queries", "number of queries");
  heur.option("--edr-eps", "edr_eps", "EDR matching tolerance");
  heur.option("--threads", "threads", "worker threads");

  Command srv(app, "serve", "serve the query API over HTTP");
  srv.option("--root", "root", "artifact root holding model.otwt, network.jsonl, stores/");
  srv.option("--dataset", "dataset", "dataset the stores were built from");
  srv.option("--host", "host", "bind address");
  srv.option("--port", "port", "port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '\n') ch = ' ';
    std::fprintf(stderr, "error: usage: %s\n", msg.c_str());
    return 2;
  }

  const fs::path root = data_dir;
  try {
    if (gen.app()->parsed()) return gen_data(gen, root);
    if (ext.app()->parsed()) return extract(ext, root);
    if (tr.app()->parsed()) return train_cmd(tr, root);
    if (emb.app()->parsed()) return embed(emb, root);
    if (qry.app()->parsed()) return query(qry, root);
    if (sim.app()->parsed()) return eval_sim(sim, root);
    if (cond.app()->parsed()) return eval_cond(cond, root);
    if (heur.app()->parsed()) return bench_heuristics(heur, root);
    if (srv.app()->parsed()) return serve(srv, root);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.code().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 2;
}
