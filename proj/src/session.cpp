// SPDX-License-Identifier: Apache-2.0
#include "obd/session.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>

namespace obd {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<SessionEventType, std::string_view>, 5> kEventNames{{
    {SessionEventType::kTrialCreated, "trial_created"},
    {SessionEventType::kCohortEntered, "cohort_entered"},
    {SessionEventType::kDecisionIssued, "decision_issued"},
    {SessionEventType::kMapAmended, "map_amended"},
    {SessionEventType::kNote, "note"},
}};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void merge_records(std::vector<PatientRecord>& into, const std::vector<PatientRecord>& incoming) {
  for (const auto& r : incoming) {
    auto it = std::find_if(into.begin(), into.end(), [&](const PatientRecord& x) { return x.patient_id == r.patient_id; });
    if (it != into.end()) {
      *it = r;
    } else {
      into.push_back(r);
    }
  }
}

void refresh_states(SessionState& s) {
  const auto set = build_analysis_set(s.trial.records, s.trial.map, s.trial.spec);
  s.dose_states = tally(set, s.trial.grid.size(), s.trial.spec.size());
}

}  // namespace

std::string to_string(SessionEventType t) {
  for (const auto& [v, name] : kEventNames) {
    if (v == t) return std::string(name);
  }
  return "note";
}

SessionEventType parse_session_event_type(std::string_view s) {
  for (const auto& [v, name] : kEventNames) {
    if (name == s) return v;
  }
  throw Error(ErrorKind::kValidation, "unknown session event '" + std::string(s) + "'");
}

void to_json(json& j, const SessionEvent& v) {
  j = {{"seq", v.seq}, {"type", to_string(v.type)}, {"recorded_at", v.recorded_at}, {"payload", v.payload}};
}

void from_json(const json& j, SessionEvent& v) {
  v.seq = j.at("seq").get<std::uint64_t>();
  v.type = parse_session_event_type(j.at("type").get<std::string>());
  v.recorded_at = j.value("recorded_at", "");
  v.payload = j.value("payload", json::object());
}

json session_json(const SessionState& s) {
  json j = {{"version", kSchemaVersion},
            {"trial_id", s.trial_id},
            {"name", s.name},
            {"state", s.trial},
            {"terminated", s.terminated},
            {"event_count", s.event_count},
            {"dose_states", s.dose_states}};
  j["last_decision"] = s.last_decision ? json(*s.last_decision) : json(nullptr);
  return j;
}

void apply_event(SessionState& s, const SessionEvent& e) {
  if (e.seq != s.event_count + 1) {
    throw Error(ErrorKind::kValidation, "event " + std::to_string(e.seq) + " out of sequence");
  }
  if ((e.type == SessionEventType::kTrialCreated) != (s.event_count == 0)) {
    throw Error(ErrorKind::kValidation, "trial_created must be the first event and only the first");
  }
  switch (e.type) {
    case SessionEventType::kTrialCreated:
      s.trial = parse_document<TrialState>(e.payload);
      s.trial.current_dose = s.trial.config.start_dose;
      s.name = e.payload.value("name", "");
      refresh_states(s);
      break;
    case SessionEventType::kCohortEntered:
      merge_records(s.trial.records, parse_document<std::vector<PatientRecord>>(e.payload.at("records")));
      refresh_states(s);
      break;
    case SessionEventType::kDecisionIssued: {
      auto d = parse_document<Decision>(e.payload.at("decision"));
      ++s.trial.decisions_issued;
      if (d.next_dose) s.trial.current_dose = *d.next_dose;
      s.terminated = d.terminated();
      s.last_decision = std::move(d);
      break;
    }
    case SessionEventType::kMapAmended:
      s.trial.map = parse_document<StrategyMap>(e.payload.at("strategy_map"));
      refresh_states(s);
      break;
    case SessionEventType::kNote:
      break;
  }
  ++s.event_count;
}

SessionState fold(const std::string& trial_id, const std::vector<SessionEvent>& events) {
  SessionState s;
  s.trial_id = trial_id;
  for (const auto& e : events) apply_event(s, e);
  return s;
}

TrialRegistry::TrialRegistry(fs::path data_dir) : data_dir_(std::move(data_dir)) {
  fs::create_directories(data_dir_ / "trials");
  load();
}

void TrialRegistry::load() {
  const auto index = data_dir_ / "index.json";
  if (!fs::exists(index)) return;
  const json j = read_json_file(index.string());
  next_id_ = j.value("next_id", std::uint64_t{1});
  for (const auto& id : j.value("trials", std::vector<std::string>{})) {
    auto e = std::make_shared<Entry>();
    std::ifstream in(data_dir_ / "trials" / (id + ".jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      e->log.push_back(parse_document<SessionEvent>(parse_json(line)));
    }
    e->state = std::make_shared<const SessionState>(fold(id, e->log));
    trials_[id] = std::move(e);
  }
}

void TrialRegistry::write_index() const {
  json j = {{"version", kSchemaVersion}, {"next_id", next_id_}, {"trials", json::array()}};
  for (const auto& [id, e] : trials_) j["trials"].push_back(id);
  const auto tmp = data_dir_ / "index.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, data_dir_ / "index.json");
}

std::shared_ptr<TrialRegistry::Entry> TrialRegistry::entry(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = trials_.find(id);
  if (it == trials_.end()) throw Error(ErrorKind::kNotFound, "no trial '" + id + "'");
  return it->second;
}

void TrialRegistry::append(const std::string& id, Entry& e, SessionEventType type, json payload) {
  SessionEvent ev;
  ev.seq = e.log.size() + 1;
  ev.type = type;
  ev.recorded_at = utc_now();
  ev.payload = std::move(payload);

  SessionState next = e.state ? *e.state : SessionState{};
  next.trial_id = id;
  apply_event(next, ev);
  {
    std::ofstream out(data_dir_ / "trials" / (id + ".jsonl"), std::ios::app);
    out << json(ev).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorKind::kValidation, "failed to persist event for " + id);
  }
  e.log.push_back(std::move(ev));
  std::lock_guard lock(e.read);
  e.state = std::make_shared<const SessionState>(std::move(next));
}

std::string TrialRegistry::create(const json& body) {
  auto parsed = parse_document<TrialState>(body);
  if (!parsed.records.empty()) throw Error(ErrorKind::kValidation, "a new trial cannot carry patient records");
  parsed.current_dose = parsed.config.start_dose;
  if (const auto report = validate_trial_state(parsed); !report.empty()) {
    throw Error(ErrorKind::kValidation, report.front());
  }
  json payload = parsed;
  payload["name"] = body.value("name", "");
  payload.erase("records");

  auto e = std::make_shared<Entry>();
  std::string id;
  {
    std::unique_lock lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "trial-%06llu", static_cast<unsigned long long>(next_id_++));
    id = buf;
    trials_[id] = e;
    std::lock_guard write(e->write);
    append(id, *e, SessionEventType::kTrialCreated, std::move(payload));
    write_index();
  }
  return id;
}

std::vector<std::string> TrialRegistry::list() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, e] : trials_) ids.push_back(id);
  return ids;
}

std::shared_ptr<const SessionState> TrialRegistry::snapshot(const std::string& id) const {
  const auto e = entry(id);
  std::lock_guard lock(e->read);
  return e->state;
}

std::vector<SessionEvent> TrialRegistry::events(const std::string& id) const {
  const auto e = entry(id);
  std::lock_guard write(e->write);
  return e->log;
}

CohortResult TrialRegistry::enter_cohort(const std::string& id, const std::vector<PatientRecord>& records) {
  const auto e = entry(id);
  std::lock_guard write(e->write);
  const auto current = e->state;
  if (current->terminated) throw Error(ErrorKind::kConflict, "trial " + id + " has terminated");
  if (records.empty()) throw Error(ErrorKind::kValidation, "a cohort needs at least one patient record");

  // Dry run on a copy so a rejected cohort leaves no trace in the log.
  TrialState tentative = current->trial;
  merge_records(tentative.records, records);
  const Recommendation rec = recommend(tentative);

  append(id, *e, SessionEventType::kCohortEntered, {{"records", records}});
  append(id, *e, SessionEventType::kDecisionIssued, {{"decision", rec.decision}});

  CohortResult out;
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.patient_id);
  for (const auto& o : rec.outcomes) {
    if (ids.count(o.patient_id)) out.outcomes.push_back(o);
  }
  out.decision = rec.decision;
  out.recommendation = rec;
  return out;
}

void TrialRegistry::amend_map(const std::string& id, const StrategyMap& map) {
  const auto e = entry(id);
  std::lock_guard write(e->write);
  TrialState tentative = e->state->trial;
  tentative.map = map;
  build_analysis_set(tentative.records, tentative.map, tentative.spec);
  append(id, *e, SessionEventType::kMapAmended, {{"strategy_map", map}});
}

void TrialRegistry::add_note(const std::string& id, const std::string& text) {
  const auto e = entry(id);
  std::lock_guard write(e->write);
  append(id, *e, SessionEventType::kNote, {{"text", text}});
}

Recommendation TrialRegistry::recommendation(const std::string& id) const {
  const auto s = snapshot(id);
  Recommendation rec = recommend(s->trial);
  rec.decision = s->last_decision ? *s->last_decision : initial_decision(s->trial.config, s->trial.grid.size());
  return rec;
}

}  // namespace obd
