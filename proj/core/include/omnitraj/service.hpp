#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>

#include "omnitraj/dataset_io.hpp"
#include "omnitraj/network.hpp"
#include "omnitraj/retrieval.hpp"

namespace omnitraj {

/// Everything a query server needs, loaded once and never mutated.
struct EngineSnapshot {
  OmniModel model;
  std::string fingerprint;  // hex of the checkpoint fingerprint
  StoreSet stores;
  RoadNetwork network;
  GridSpec grid;
  std::unordered_map<TrajectoryId, TrajectoryRecord> records;

  /// Reads `model.otwt`, `network.jsonl`, the dataset file and every
  /// `stores/*.otes` under `root`. Store fingerprints must match the model.
  static std::shared_ptr<const EngineSnapshot> load(const std::filesystem::path& root,
                                                    const std::filesystem::path& dataset);
  // Checks that every store was built by this checkpoint over known ids.
  void check_consistency() const;
};

struct Response {
  int status = 200;
  std::string body;  // JSON
};

/// Request handlers as plain functions of the snapshot, so they can be
/// exercised without a socket. Scores are rounded to 6 decimals.
class QueryService {
 public:
  explicit QueryService(std::shared_ptr<const EngineSnapshot> snapshot);

  Response health() const;
  Response stats() const;
  Response trajectory(const std::string& id) const;
  Response query(const std::string& body) const;
  Response grid() const;
  Response network() const;

  // Routes GET/POST requests by path.
  Response handle(const std::string& method, const std::string& path, const std::string& body) const;

  const EngineSnapshot& snapshot() const { return *snapshot_; }

 private:
  std::shared_ptr<const EngineSnapshot> snapshot_;
};

/// Blocking HTTP front end over a QueryService.
class HttpServer {
 public:
  explicit HttpServer(const QueryService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace omnitraj
