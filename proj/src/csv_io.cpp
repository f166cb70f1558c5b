// SPDX-License-Identifier: Apache-2.0
#include "obd/csv_io.hpp"

#include <cstdio>
#include <sstream>

namespace obd {

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string decision_table_csv(const DecisionTable& table) {
  std::ostringstream out;
  for (int k = 1; k <= table.categories; ++k) out << "n_y" << k << ',';
  out << "n,n_tox,n_eff,toxicity_decision,prob_toxic,prob_futile,toxic,futile,mean_utility,qbb_alpha,qbb_beta,"
         "qbb_mean\n";
  for (const auto& r : table.rows) {
    for (int c : r.counts) out << c << ',';
    out << r.n << ',' << r.n_tox << ',' << r.n_eff << ','
        << (r.toxicity_decision ? to_string(*r.toxicity_decision) : std::string("none")) << ','
        << fixed4(r.prob_toxic) << ',' << fixed4(r.prob_futile) << ',' << (r.toxic ? 1 : 0) << ','
        << (r.futile ? 1 : 0) << ',' << fixed4(r.mean_utility) << ',' << fixed4(r.qbb_alpha) << ','
        << fixed4(r.qbb_beta) << ',' << fixed4(r.qbb_mean) << '\n';
  }
  return out.str();
}

std::string operating_characteristics_csv(const OperatingCharacteristics& oc) {
  std::ostringstream out;
  out << "dose,selection_pct,selection_count,mean_patients\n";
  out << "none," << fixed4(oc.selection_pct.at(0)) << ',' << oc.selection_counts.at(0) << ",\n";
  for (size_t j = 0; j < oc.mean_patients.size(); ++j) {
    out << j + 1 << ',' << fixed4(oc.selection_pct.at(j + 1)) << ',' << oc.selection_counts.at(j + 1) << ','
        << fixed4(oc.mean_patients[j]) << '\n';
  }
  return out.str();
}

}  // namespace obd
