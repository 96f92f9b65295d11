#include "omnitraj/dataset_io.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "omnitraj/error.hpp"
#include "omnitraj/modality.hpp"

namespace omnitraj {

using json = nlohmann::json;

namespace {

json flatten(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const auto& p : pts) {
    arr.push_back(p.x);
    arr.push_back(p.y);
  }
  return arr;
}

std::vector<Point> unflatten(const json& arr, const char* field) {
  if (!arr.is_array() || arr.size() % 2 != 0)
    throw DataError(std::string("field '") + field + "' must be a flat array of x,y pairs");
  std::vector<Point> pts;
  pts.reserve(arr.size() / 2);
  for (std::size_t i = 0; i < arr.size(); i += 2) {
    Point p{arr[i].get<double>(), arr[i + 1].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DataError("non-finite coordinate");
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

std::string encode_record(const TrajectoryRecord& r) {
  json rec;
  rec["id"] = r.trajectory.id;
  rec["points"] = flatten(r.trajectory.points);
  if (r.road) rec["road"] = r.road->segment_ids;
  if (r.region) rec["region"] = r.region->region_ids;
  if (r.topology) rec["topology"] = flatten(r.topology->points);
  return rec.dump();
}

TrajectoryRecord decode_record(const std::string& line) {
  try {
    auto rec = json::parse(line);
    TrajectoryRecord r;
    r.trajectory.id = rec.at("id").get<TrajectoryId>();
    r.trajectory.points = unflatten(rec.at("points"), "points");
    if (r.trajectory.points.size() < 2) throw DataError("trajectory needs at least 2 points");
    if (rec.contains("road"))
      r.road = RoadSeq{r.trajectory.id, rec["road"].get<std::vector<SegmentId>>()};
    if (rec.contains("region"))
      r.region = RegionSeq{r.trajectory.id, rec["region"].get<std::vector<RegionId>>()};
    if (rec.contains("topology"))
      r.topology = TopologySeq{r.trajectory.id, unflatten(rec["topology"], "topology")};
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed dataset record: ") + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file " + path.string());
  for (const auto& r : records) out << encode_record(r) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(decode_record(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

GridSpec grid_for_network(const RoadNetwork& net, int rows, int cols) {
  auto box = net.box();
  box.min_x -= 0.5;
  box.min_y -= 0.5;
  box.max_x += 0.5;
  box.max_y += 0.5;
  return GridSpec(box, rows, cols);
}

void extract_views(Dataset& records, const GridSpec& grid, const ExtractOptions& opts) {
  TopologyOptions topo{opts.topology_epsilon, opts.topology_angle_min};
  for (auto& r : records) {
    if (opts.overwrite || !r.topology) r.topology = topology_view(r.trajectory, topo);
    if (opts.overwrite || !r.region) r.region = extract_regions(r.trajectory, grid);
  }
}

}  // namespace omnitraj
