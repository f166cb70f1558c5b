// SPDX-License-Identifier: Apache-2.0
#include "obd/service.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>

#include "httplib.h"
#include "obd/csv_io.hpp"
#include "obd/sensitivity.hpp"
#include "obd/simulator.hpp"

namespace obd {

namespace fs = std::filesystem;

ServiceOptions options_from_environment(ServiceOptions base) {
  if (const char* v = std::getenv("OBD_DATA_DIR")) base.data_dir = v;
  if (const char* v = std::getenv("OBD_HOST")) base.host = v;
  if (const char* v = std::getenv("OBD_PORT")) base.port = std::atoi(v);
  if (const char* v = std::getenv("OBD_MAX_PARALLELISM")) base.max_parallelism = std::max(1, std::atoi(v));
  return base;
}

// ---- simulation jobs ----

namespace {

struct SimulationRequest {
  Scenario scenario;
  DesignConfig config;
  UtilitySpec spec = UtilitySpec::canonical();
  StrategyMap map = StrategyMap::case_study();
  int reps = 1000;
  std::uint64_t seed = 0;
  int jobs = 1;
};

SimulationRequest parse_simulation(const json& body) {
  SimulationRequest r;
  r.scenario = parse_document<Scenario>(body.at("scenario"));
  r.config = body.contains("config") ? parse_document<DesignConfig>(body.at("config")) : DesignConfig::case_study();
  if (body.contains("utility")) r.spec = parse_document<UtilitySpec>(body.at("utility"));
  if (body.contains("strategy_map")) r.map = parse_document<StrategyMap>(body.at("strategy_map"));
  r.reps = body.value("reps", 1000);
  r.seed = body.value("seed", std::uint64_t{0});
  r.jobs = body.value("jobs", 1);
  if (r.reps < 1) throw Error(ErrorKind::kValidation, "reps must be at least 1");
  if (auto report = validate_scenario(r.scenario); !report.empty()) throw Error(ErrorKind::kValidation, report.front());
  if (auto report = validate_utility_spec(r.spec); !report.empty()) throw Error(ErrorKind::kValidation, report.front());
  if (auto report = validate_design_config(r.config, r.spec.size()); !report.empty()) {
    throw Error(ErrorKind::kValidation, report.front());
  }
  return r;
}

}  // namespace

SimulationJobs::SimulationJobs(fs::path dir, int max_parallelism)
    : dir_(std::move(dir)), max_parallelism_(std::max(1, max_parallelism)) {
  fs::create_directories(dir_);
  for (const auto& f : fs::directory_iterator(dir_)) {
    if (f.path().extension() != ".json") continue;
    const json j = read_json_file(f.path().string());
    Job job;
    job.status = j.value("status", "failed");
    job.request = j.value("request", json::object());
    job.result = j.value("result", json());
    job.error = j.value("error", "");
    if (job.status == "queued" || job.status == "running") {
      job.status = "failed";
      job.error = "interrupted by service restart";
    }
    const auto id = f.path().stem().string();
    unsigned long long n = 0;
    if (std::sscanf(id.c_str(), "sim-%llu", &n) == 1) next_id_ = std::max<std::uint64_t>(next_id_, n + 1);
    jobs_[id] = std::move(job);
  }
}

SimulationJobs::~SimulationJobs() { wait_all(); }

void SimulationJobs::persist(const std::string& id, const Job& job) const {
  json j = {{"version", kSchemaVersion}, {"job_id", id}, {"status", job.status}, {"request", job.request}};
  if (!job.result.is_null()) j["result"] = job.result;
  if (!job.error.empty()) j["error"] = job.error;
  const auto tmp = dir_ / (id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump() << '\n';
  }
  fs::rename(tmp, dir_ / (id + ".json"));
}

std::string SimulationJobs::submit(const json& body) {
  const SimulationRequest req = parse_simulation(body);
  std::string id;
  {
    std::lock_guard lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "sim-%06llu", static_cast<unsigned long long>(next_id_++));
    id = buf;
    Job job;
    job.request = body;
    persist(id, job);
    jobs_[id] = std::move(job);
  }
  const int threads = std::clamp(req.jobs, 1, max_parallelism_);
  workers_.emplace_back([this, id, req, threads] {
    {
      std::lock_guard lock(mutex_);
      jobs_[id].status = "running";
      persist(id, jobs_[id]);
    }
    json result;
    std::string error;
    try {
      result = document(operating_characteristics(req.scenario, req.config, req.map, req.spec, req.reps, req.seed,
                                                  threads));
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(mutex_);
    auto& job = jobs_[id];
    job.status = error.empty() ? "done" : "failed";
    job.result = std::move(result);
    job.error = std::move(error);
    persist(id, job);
  });
  return id;
}

json SimulationJobs::status(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorKind::kNotFound, "no simulation '" + id + "'");
  json j = {{"version", kSchemaVersion}, {"job_id", id}, {"status", it->second.status}, {"request", it->second.request}};
  if (!it->second.result.is_null()) j["result"] = it->second.result;
  if (!it->second.error.empty()) j["error"] = it->second.error;
  return j;
}

void SimulationJobs::wait_all() {
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
}

// ---- HTTP ----

namespace {

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    default: return 400;
  }
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
  send_json(res, {{"error", {{"kind", kind}, {"message", message}}}}, status);
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.kind()), to_string(e.kind()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "Validation", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return parse_json(req.body);
}

double query_double(const httplib::Request& req, const char* key, double fallback) {
  return req.has_param(key) ? std::stod(req.get_param_value(key)) : fallback;
}

}  // namespace

Service::Service(ServiceOptions options)
    : options_(std::move(options)),
      registry_(options_.data_dir),
      jobs_(options_.data_dir / "simulations", options_.max_parallelism),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() {
  stop();
  jobs_.wait_all();
}

void Service::routes() {
  auto& s = *server_;

  s.Get("/v1/health", guarded([](const httplib::Request&, httplib::Response& res) {
          send_json(res, {{"status", "ok"}, {"version", kSchemaVersion}});
        }));

  s.Get("/v1/boundaries", guarded([](const httplib::Request& req, httplib::Response& res) {
          std::optional<double> phi1;
          std::optional<double> phi2;
          if (req.has_param("phi1")) phi1 = std::stod(req.get_param_value("phi1"));
          if (req.has_param("phi2")) phi2 = std::stod(req.get_param_value("phi2"));
          send_json(res, document(boin_boundaries(query_double(req, "phi", 0.3), phi1, phi2)));
        }));

  s.Get("/v1/tables/decision", guarded([](const httplib::Request& req, httplib::Response& res) {
          DesignConfig config = DesignConfig::case_study();
          config.phi_t = query_double(req, "phi_t", config.phi_t);
          config.phi_e = query_double(req, "phi_e", config.phi_e);
          config.delta_t = query_double(req, "delta_t", config.delta_t);
          config.delta_e = query_double(req, "delta_e", config.delta_e);
          if (req.has_param("target_phi")) {
            config.target_phi = query_double(req, "target_phi", config.target_phi);
            const auto b = boin_boundaries(config.target_phi);
            config.lambda_e = b.lambda_e;
            config.lambda_d = b.lambda_d;
          }
          UtilitySpec spec = UtilitySpec::canonical();
          if (req.has_param("psi")) spec = parse_document<UtilitySpec>(parse_json("[" + req.get_param_value("psi") + "]"));
          const int n = req.has_param("n") ? std::stoi(req.get_param_value("n")) : 12;
          if (n < 0 || n > 30) throw Error(ErrorKind::kValidation, "n must lie in 0..30");
          const auto table = decision_table(config, spec, n);
          if (req.get_param_value("format") == "csv") {
            res.set_content(decision_table_csv(table), "text/csv");
          } else {
            send_json(res, document(table));
          }
        }));

  s.Post("/v1/trials", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto id = registry_.create(body_of(req));
           send_json(res, {{"trial_id", id}}, 201);
         }));

  s.Get("/v1/trials", guarded([this](const httplib::Request&, httplib::Response& res) {
          send_json(res, {{"trials", registry_.list()}});
        }));

  s.Get(R"(/v1/trials/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, session_json(*registry_.snapshot(req.matches[1])));
        }));

  s.Post(R"(/v1/trials/([^/]+)/cohorts)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = body_of(req);
           const json& list = body.is_array() ? body : body.at("records");
           const auto result = registry_.enter_cohort(req.matches[1], parse_document<std::vector<PatientRecord>>(list));
           send_json(res, {{"version", kSchemaVersion},
                           {"outcomes", result.outcomes},
                           {"decision", result.decision},
                           {"summaries", result.recommendation.summaries},
                           {"admissible", result.recommendation.admissible}});
         }));

  s.Get(R"(/v1/trials/([^/]+)/recommendation)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, document(registry_.recommendation(req.matches[1])));
        }));

  s.Post(R"(/v1/trials/([^/]+)/whatif)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto snap = registry_.snapshot(req.matches[1]);
           const json body = body_of(req);
           const auto& trial = snap->trial;
           std::vector<StrategyMap> maps{trial.map};
           if (body.contains("strategy_maps")) {
             for (const auto& m : body.at("strategy_maps")) maps.push_back(parse_document<StrategyMap>(m));
           }
           if (body.contains("strategy_map")) maps.push_back(parse_document<StrategyMap>(body.at("strategy_map")));
           UtilitySpec spec = trial.spec;
           if (body.contains("utility")) spec = parse_document<UtilitySpec>(body.at("utility"));
           if (auto report = validate_utility_spec(spec); !report.empty()) {
             throw Error(ErrorKind::kValidation, report.front());
           }
           const auto cmp = compare_strategies(trial.records, maps, spec, trial.config, trial.grid.size());
           send_json(res, {{"version", kSchemaVersion}, {"utility", spec}, {"comparison", cmp}});
         }));

  s.Get(R"(/v1/trials/([^/]+)/obd)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, document(registry_.recommendation(req.matches[1]).selection));
        }));

  s.Get(R"(/v1/trials/([^/]+)/audit)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, {{"version", kSchemaVersion}, {"trial_id", req.matches[1]}, {"events", registry_.events(req.matches[1])}});
        }));

  s.Post(R"(/v1/trials/([^/]+)/sensitivity/tipping)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto snap = registry_.snapshot(req.matches[1]);
           const json body = body_of(req);
           TippingOptions opt;
           opt.flip_to = body.value("flip_to", 1);
           if (body.contains("scope")) opt.scope = parse_tipping_scope(body.at("scope").get<std::string>());
           const auto& t = snap->trial;
           const auto report = body.value("exhaustive", false)
                                   ? tipping_scan_exhaustive(t.records, t.map, t.spec, t.config, t.grid.size(), opt)
                                   : tipping_scan(t.records, t.map, t.spec, t.config, t.grid.size(), opt);
           send_json(res, document(report));
         }));

  s.Post(R"(/v1/trials/([^/]+)/sensitivity/prior)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto snap = registry_.snapshot(req.matches[1]);
           const json body = body_of(req);
           const auto& t = snap->trial;
           const auto states = snap->dose_states;
           if (body.contains("prior_alpha")) {
             const auto prior = body.at("prior_alpha").get<std::vector<double>>();
             send_json(res, document(compare_priors(states, t.spec, t.config, prior)));
           } else {
             send_json(res, document(prior_sensitivity(states, t.spec, t.config, body.value("epsilon", 1e-6))));
           }
         }));

  s.Put(R"(/v1/trials/([^/]+)/strategy_map)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          registry_.amend_map(req.matches[1], parse_document<StrategyMap>(body_of(req)));
          send_json(res, session_json(*registry_.snapshot(req.matches[1])));
        }));

  s.Post(R"(/v1/trials/([^/]+)/notes)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           registry_.add_note(req.matches[1], body_of(req).at("text").get<std::string>());
           send_json(res, {{"ok", true}}, 201);
         }));

  s.Post("/v1/simulations", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, {{"job_id", jobs_.submit(body_of(req))}, {"status", "queued"}}, 202);
         }));

  s.Get(R"(/v1/simulations/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, jobs_.status(req.matches[1]));
        }));
}

bool Service::listen() { return server_->listen(options_.host, options_.port); }

int Service::start_background() {
  const int port = server_->bind_to_any_port(options_.host);
  if (port < 0) return -1;
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace obd
