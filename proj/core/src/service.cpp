#include "omnitraj/service.hpp"

#include <cmath>
#include <set>

#include <httplib.h>
#include <json.hpp>

#include "omnitraj/error.hpp"
#include "omnitraj/modality.hpp"

namespace omnitraj {

using nlohmann::json;

namespace {

Response reply(int status, const json& body) { return {status, body.dump()}; }

Response error_reply(int status, const std::string& code, const std::string& message, json extra = json::object()) {
  json body = {{"error", {{"code", code}, {"message", message}}}};
  for (auto& [k, v] : extra.items()) body["error"][k] = v;
  return reply(status, body);
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

json points_json(const std::vector<Point>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back({p.x, p.y});
  return out;
}

std::vector<Point> parse_points(const json& j, const char* field) {
  if (!j.is_array()) throw ParameterError(std::string(field) + " must be an array of [x, y] pairs");
  std::vector<Point> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ParameterError(std::string(field) + " must be an array of [x, y] pairs");
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

std::vector<std::int32_t> parse_ids(const json& j, const char* field) {
  if (!j.is_array()) throw ParameterError(std::string(field) + " must be an array of integer ids");
  std::vector<std::int32_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParameterError(std::string(field) + " must be an array of integer ids");
    out.push_back(v.get<std::int32_t>());
  }
  return out;
}

QuerySpec parse_query(const std::string& body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParameterError("body is not a JSON object");
  const auto mods = j.find("modalities");
  if (mods == j.end() || !mods->is_object()) throw ParameterError("missing modalities object");

  QuerySpec spec;
  for (const auto& [key, value] : mods->items()) {
    if (key == "trajectory") spec.trajectory = parse_points(value, "trajectory");
    else if (key == "topology") spec.topology = parse_points(value, "topology");
    else if (key == "road") spec.road = parse_ids(value, "road");
    else if (key == "region") spec.region = parse_ids(value, "region");
    else throw ParameterError("unknown modality '" + key + "'");
  }
  if (const auto k = j.find("k"); k != j.end()) {
    if (!k->is_number_integer() || k->get<std::int64_t>() < 1) throw ParameterError("k must be a positive integer");
    spec.k = k->get<std::size_t>();
  }
  if (const auto ts = j.find("two_stage"); ts != j.end() && !ts->is_null()) {
    if (!ts->is_object()) throw ParameterError("two_stage must be an object");
    QuerySpec::Coarse coarse;
    const auto name = ts->value("coarse", std::string("road"));
    if (name == "road") coarse.modality = kRoad;
    else if (name == "region") coarse.modality = kRegion;
    else throw ParameterError("two_stage.coarse must be road or region");
    const auto subset = ts->find("subset");
    if (subset == ts->end() || !subset->is_number_integer() || subset->get<std::int64_t>() < 1)
      throw ParameterError("two_stage.subset must be a positive integer");
    coarse.subset = subset->get<std::size_t>();
    spec.coarse = coarse;
  }
  return spec;
}

json supported_list() {
  json out = json::array();
  for (auto m : fusion_subsets()) out.push_back(modality_name(m));
  return out;
}

}  // namespace

std::shared_ptr<const EngineSnapshot> EngineSnapshot::load(const std::filesystem::path& root,
                                                           const std::filesystem::path& dataset) {
  const auto ckpt = nn::Checkpoint::load(root / "model.otwt");
  auto snap = std::make_shared<EngineSnapshot>(EngineSnapshot{
      OmniModel::from_checkpoint(ckpt), nn::to_hex(ckpt.fingerprint()), {}, RoadNetwork::load(root / "network.jsonl"), {}, {}});
  snap->grid = grid_for_network(snap->network);
  for (auto& rec : load_dataset(dataset)) snap->records.emplace(rec.trajectory.id, std::move(rec));
  const auto store_dir = root / "stores";
  if (std::filesystem::is_directory(store_dir)) {
    std::set<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(store_dir))
      if (entry.path().extension() == ".otes") files.insert(entry.path());
    for (const auto& f : files) {
      auto store = EmbeddingStore::load(f);
      const auto m = store.modality();
      if (!snap->stores.emplace(m, std::move(store)).second)
        throw ConfigError("two stores for modality " + modality_name(m));
    }
  }
  snap->check_consistency();
  return snap;
}

void EngineSnapshot::check_consistency() const {
  if (!stores.count(kTraj)) throw ConfigError("snapshot has no trajectory store");
  for (const auto& [m, store] : stores) {
    if (nn::to_hex(store.fingerprint()) != fingerprint)
      throw ConfigError("store " + modality_name(m) + " was built by a different checkpoint");
    if (store.width() != static_cast<std::uint32_t>(model.config().h))
      throw ConfigError("store " + modality_name(m) + " width does not match the model");
    for (auto id : store.ids())
      if (!records.count(id)) throw ConfigError("store " + modality_name(m) + " references unknown trajectory " + std::to_string(id));
  }
}

QueryService::QueryService(std::shared_ptr<const EngineSnapshot> snapshot) : snapshot_(std::move(snapshot)) {
  if (!snapshot_) throw ParameterError("service needs a snapshot");
}

Response QueryService::health() const { return reply(200, {{"status", "ok"}}); }

Response QueryService::stats() const {
  const auto& s = *snapshot_;
  json stores = json::array();
  for (const auto& [m, store] : s.stores)
    stores.push_back({{"modality", modality_name(m)},
                      {"rows", store.size()},
                      {"width", store.width()},
                      {"fingerprint", nn::to_hex(store.fingerprint())}});
  const auto& c = s.model.config();
  return reply(200, {{"trajectories", s.records.size()},
                     {"road_segments", s.network.segment_count()},
                     {"regions", s.grid.cell_count()},
                     {"dims", {{"d", c.d}, {"h", c.h}, {"blocks", c.blocks}, {"heads", c.heads}}},
                     {"road_vocab", c.road_vocab},
                     {"region_vocab", c.region_vocab},
                     {"fingerprint", s.fingerprint},
                     {"fusion_subsets", supported_list()},
                     {"stores", stores}});
}

Response QueryService::trajectory(const std::string& id_text) const {
  TrajectoryId id = 0;
  try {
    std::size_t used = 0;
    id = std::stoll(id_text, &used);
    if (used != id_text.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    return error_reply(400, "bad_request", "trajectory id must be an integer");
  }
  const auto it = snapshot_->records.find(id);
  if (it == snapshot_->records.end()) return error_reply(404, "not_found", "unknown trajectory " + id_text);
  const auto& rec = it->second;
  json body = {{"id", id}, {"points", points_json(rec.trajectory.points)}};
  body["topology"] = rec.topology ? points_json(rec.topology->points) : json(nullptr);
  body["road"] = rec.road ? json(rec.road->segment_ids) : json(nullptr);
  if (rec.region) body["region"] = rec.region->region_ids;
  else body["region"] = extract_regions(rec.trajectory, snapshot_->grid).region_ids;
  return reply(200, body);
}

Response QueryService::query(const std::string& body) const {
  try {
    const auto spec = parse_query(body);
    const auto result = condition_query(snapshot_->stores, spec, snapshot_->model);
    json hits = json::array();
    for (const auto& h : result.hits) hits.push_back({{"id", h.id}, {"score", round6(h.score)}});
    json prov = {{"modalities", modality_name(result.provenance.query)},
                 {"stage", result.provenance.two_stage ? "two-stage" : "single"}};
    if (result.provenance.two_stage) {
      prov["coarse"] = modality_name(result.provenance.coarse);
      prov["subset"] = result.provenance.subset;
    }
    return reply(200, {{"results", hits}, {"provenance", prov}});
  } catch (const ConfigError& e) {
    return error_reply(422, "unsupported_modality", e.what(), {{"supported", supported_list()}});
  } catch (const Error& e) {
    return error_reply(400, "bad_request", e.what());
  } catch (const json::exception& e) {
    return error_reply(400, "bad_request", e.what());
  }
}

Response QueryService::grid() const {
  const auto& g = snapshot_->grid;
  const auto& b = g.box();
  return reply(200, {{"min_x", b.min_x}, {"min_y", b.min_y}, {"max_x", b.max_x}, {"max_y", b.max_y},
                     {"rows", g.rows()}, {"cols", g.cols()}});
}

Response QueryService::network() const {
  const auto& net = snapshot_->network;
  json segments = json::array();
  for (const auto& s : net.segments()) segments.push_back({s.node_a, s.node_b});
  return reply(200, {{"nodes", points_json(net.nodes())}, {"segments", segments}});
}

Response QueryService::handle(const std::string& method, const std::string& path, const std::string& body) const {
  static constexpr std::string_view kTrajPrefix = "/trajectories/";
  if (method == "GET") {
    if (path == "/health") return health();
    if (path == "/stats") return stats();
    if (path == "/grid") return grid();
    if (path == "/network") return network();
    if (path.starts_with(kTrajPrefix)) return trajectory(path.substr(kTrajPrefix.size()));
  } else if (method == "POST" && path == "/query") {
    return query(body);
  }
  return error_reply(404, "not_found", "no route for " + method + " " + path);
}

struct HttpServer::Impl {
  explicit Impl(const QueryService& s) : service(s) {}
  const QueryService& service;
  httplib::Server server;
};

HttpServer::HttpServer(const QueryService& service) : impl_(std::make_unique<Impl>(service)) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = impl_->service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
    res.set_header("Access-Control-Allow-Origin", "*");
  };
  impl_->server.Get(".*", route);
  impl_->server.Post(".*", route);
  impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  impl_->server.set_read_timeout(5, 0);
  impl_->server.set_write_timeout(5, 0);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace omnitraj
