#include "omnitraj/network.hpp"

#include <fstream>
#include <queue>
#include <string>

#include <json.hpp>

#include "omnitraj/error.hpp"
#include "omnitraj/random.hpp"

namespace omnitraj {

using json = nlohmann::json;

RoadNetwork::RoadNetwork(std::vector<Point> nodes, std::vector<RoadSegment> segments)
    : nodes_(std::move(nodes)), segments_(std::move(segments)) {
  require(!nodes_.empty(), "road network has no nodes");
  adjacency_.resize(nodes_.size());
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (s.node_a < 0 || s.node_a >= n || s.node_b < 0 || s.node_b >= n)
      throw ParameterError("segment " + std::to_string(i) + " references a missing node");
    if (s.node_a == s.node_b) throw ParameterError("segment " + std::to_string(i) + " is a self-loop");
    adjacency_[s.node_a].push_back({s.node_b, static_cast<SegmentId>(i)});
    adjacency_[s.node_b].push_back({s.node_a, static_cast<SegmentId>(i)});
  }
  box_ = bounding_box(nodes_);
}

bool RoadNetwork::is_connected() const {
  if (nodes_.empty()) return false;
  std::vector<char> seen(nodes_.size(), 0);
  std::queue<std::int32_t> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    auto u = frontier.front();
    frontier.pop();
    for (const auto& inc : adjacency_[u]) {
      if (!seen[inc.neighbor]) {
        seen[inc.neighbor] = 1;
        ++reached;
        frontier.push(inc.neighbor);
      }
    }
  }
  return reached == nodes_.size();
}

void RoadNetwork::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write network file " + path.string());
  out << json{{"kind", "network"}, {"nodes", nodes_.size()}, {"segments", segments_.size()}}.dump()
      << '\n';
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    out << json{{"kind", "node"}, {"id", i}, {"x", nodes_[i].x}, {"y", nodes_[i].y}}.dump() << '\n';
  for (std::size_t i = 0; i < segments_.size(); ++i)
    out << json{{"kind", "segment"}, {"id", i}, {"a", segments_[i].node_a}, {"b", segments_[i].node_b}}
               .dump()
        << '\n';
}

RoadNetwork RoadNetwork::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file " + path.string());
  std::vector<Point> nodes;
  std::vector<RoadSegment> segments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto rec = json::parse(line);
      const auto kind = rec.at("kind").get<std::string>();
      if (kind == "node") {
        auto id = rec.at("id").get<std::size_t>();
        if (id != nodes.size()) throw DataError("node ids must be dense and ordered");
        nodes.push_back({rec.at("x").get<double>(), rec.at("y").get<double>()});
      } else if (kind == "segment") {
        auto id = rec.at("id").get<std::size_t>();
        if (id != segments.size()) throw DataError("segment ids must be dense and ordered");
        segments.push_back({rec.at("a").get<std::int32_t>(), rec.at("b").get<std::int32_t>()});
      }
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return RoadNetwork(std::move(nodes), std::move(segments));
}

RoadNetwork generate_network(std::uint64_t seed, int rows, int cols, double jitter) {
  require(rows >= 2 && cols >= 2, "network needs rows >= 2 and cols >= 2");
  require(jitter >= 0.0 && jitter < 0.5, "jitter must lie in [0, 0.5)");
  Rng rng(seed);
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double jx = jitter > 0.0 ? rng.uniform(-jitter, jitter) : 0.0;
      const double jy = jitter > 0.0 ? rng.uniform(-jitter, jitter) : 0.0;
      nodes.push_back({c + jx, r + jy});
    }
  }
  std::vector<RoadSegment> segments;
  auto node = [cols](int r, int c) { return static_cast<std::int32_t>(r * cols + c); };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) segments.push_back({node(r, c), node(r, c + 1)});
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c) segments.push_back({node(r, c), node(r + 1, c)});
  return RoadNetwork(std::move(nodes), std::move(segments));
}

}  // namespace omnitraj
