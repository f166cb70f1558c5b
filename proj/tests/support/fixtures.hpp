// Patient-record builders shared by the test suites.
#pragma once

#include <string>
#include <vector>

#include "obd/estimand.hpp"

namespace fixture {

using namespace obd;

inline Event assess(int day, ResponseGrade g) { return {day, Assessment{g}}; }
inline Event dlt(int day, int grade = 3) { return {day, Toxicity{grade, true}}; }
inline Event ae(int day, int grade) { return {day, Toxicity{grade, false}}; }
inline Event ice(int day, IceType t) { return {day, Ice{t, std::nullopt, std::nullopt}}; }
inline Event surgery(int day, SurgeryReason r) { return {day, Ice{IceType::kSurgery, r, std::nullopt}}; }
inline Event dose_switch(int day, int to) { return {day, Ice{IceType::kDoseSwitch, std::nullopt, to}}; }

inline PatientRecord patient(std::string id, int dose, std::vector<Event> events) {
  PatientRecord r;
  r.patient_id = std::move(id);
  r.dose_index = dose;
  r.events = std::move(events);
  return r;
}

// A patient with a plain observed outcome: DLT on day 10 when toxic, response
// read on day 56.
inline PatientRecord observed(std::string id, int dose, bool efficacy, bool toxicity) {
  std::vector<Event> ev;
  if (toxicity) ev.push_back(dlt(10));
  ev.push_back(assess(56, efficacy ? ResponseGrade::kPR : ResponseGrade::kSD));
  return patient(std::move(id), dose, std::move(ev));
}

// A patient whose outcome the hypothetical strategy sets missing.
inline PatientRecord missing(std::string id, int dose) {
  return patient(std::move(id), dose,
                 {assess(28, ResponseGrade::kSD), surgery(30, SurgeryReason::kExternalFactors)});
}

}  // namespace fixture
