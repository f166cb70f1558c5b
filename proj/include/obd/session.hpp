// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "obd/json_io.hpp"
#include "obd/trial_state.hpp"

namespace obd {

enum class SessionEventType { kTrialCreated, kCohortEntered, kDecisionIssued, kMapAmended, kNote };

std::string to_string(SessionEventType t);
SessionEventType parse_session_event_type(std::string_view s);

struct SessionEvent {
  std::uint64_t seq = 0;
  SessionEventType type = SessionEventType::kNote;
  std::string recorded_at;
  json payload;
};

void to_json(json& j, const SessionEvent& v);
void from_json(const json& j, SessionEvent& v);

/// Materialized trial: a pure fold of the event log.
struct SessionState {
  std::string trial_id;
  std::string name;
  TrialState trial;
  std::optional<Decision> last_decision;
  bool terminated = false;
  std::uint64_t event_count = 0;
  std::vector<DoseState> dose_states;
};

json session_json(const SessionState& s);

/// Applies one event. Throws kValidation on an out-of-order or malformed event.
void apply_event(SessionState& state, const SessionEvent& event);
SessionState fold(const std::string& trial_id, const std::vector<SessionEvent>& events);

struct CohortResult {
  std::vector<DerivedOutcome> outcomes;
  Decision decision;
  Recommendation recommendation;
};

/// Trials persisted as one JSON-lines event log each under
/// `<data_dir>/trials/<id>.jsonl`, with `<data_dir>/index.json` listing them.
/// Writes to one trial are serialized; readers get immutable snapshots.
class TrialRegistry {
 public:
  explicit TrialRegistry(std::filesystem::path data_dir);

  /// Body: {config, utility, grid, strategy_map, name, rng_seed}.
  std::string create(const json& body);
  std::vector<std::string> list() const;
  /// Throws kNotFound.
  std::shared_ptr<const SessionState> snapshot(const std::string& id) const;
  std::vector<SessionEvent> events(const std::string& id) const;

  /// Appends the cohort and the resulting decision. Throws kConflict once the
  /// trial has terminated.
  CohortResult enter_cohort(const std::string& id, const std::vector<PatientRecord>& records);
  void amend_map(const std::string& id, const StrategyMap& map);
  void add_note(const std::string& id, const std::string& text);

  /// Current decision (the last issued one, or the opening assignment) with
  /// the supporting posterior summaries.
  Recommendation recommendation(const std::string& id) const;

  const std::filesystem::path& data_dir() const { return data_dir_; }

 private:
  struct Entry {
    std::mutex write;
    mutable std::mutex read;
    std::shared_ptr<const SessionState> state;
    std::vector<SessionEvent> log;
  };

  std::shared_ptr<Entry> entry(const std::string& id) const;
  void append(const std::string& id, Entry& e, SessionEventType type, json payload);
  void write_index() const;
  void load();

  std::filesystem::path data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> trials_;
  std::uint64_t next_id_ = 1;
};

}  // namespace obd
