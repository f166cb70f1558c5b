// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "obd/session.hpp"

namespace httplib {
class Server;
}

namespace obd {

struct ServiceOptions {
  std::filesystem::path data_dir = "./data";
  std::string host = "127.0.0.1";
  int port = 8080;
  int max_parallelism = 1;
};

/// Options from OBD_DATA_DIR, OBD_PORT, OBD_HOST and OBD_MAX_PARALLELISM,
/// layered over `base`.
ServiceOptions options_from_environment(ServiceOptions base = {});

/// Asynchronous simulation jobs, persisted under `<data_dir>/simulations`.
class SimulationJobs {
 public:
  SimulationJobs(std::filesystem::path dir, int max_parallelism);
  ~SimulationJobs();

  /// Body: {scenario, config, utility, strategy_map, reps, seed, jobs}.
  /// Validates synchronously, then runs in the background.
  std::string submit(const json& body);
  /// {job_id, status, request, result | error}. Throws kNotFound.
  json status(const std::string& id) const;
  void wait_all();

 private:
  struct Job {
    std::string status = "queued";
    json request;
    json result;
    std::string error;
  };
  void persist(const std::string& id, const Job& job) const;

  std::filesystem::path dir_;
  int max_parallelism_;
  mutable std::mutex mutex_;
  std::map<std::string, Job> jobs_;
  std::vector<std::jthread> workers_;
  std::uint64_t next_id_ = 1;
};

/// HTTP facade over a TrialRegistry and SimulationJobs.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  /// Binds and serves until stop(). Returns false if binding failed.
  bool listen();
  /// Binds to an OS-chosen port on `host` and serves on a background thread.
  int start_background();
  void stop();

  TrialRegistry& registry() { return registry_; }
  SimulationJobs& simulations() { return jobs_; }

 private:
  void routes();

  ServiceOptions options_;
  TrialRegistry registry_;
  SimulationJobs jobs_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace obd
