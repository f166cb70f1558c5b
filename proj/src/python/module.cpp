// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "obd/json_io.hpp"
#include "obd/sensitivity.hpp"
#include "obd/simulator.hpp"
#include "obd/special_functions.hpp"
#include "obd/trial_state.hpp"

namespace py = pybind11;
using namespace obd;

namespace {

template <typename T>
T doc(const std::string& text, T fallback) {
  return text.empty() ? fallback : parse_document<T>(parse_json(text));
}

std::string dumps(const json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Utility-based Phase I/II dose optimization engine";
  py::register_exception<Error>(m, "ObdError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.attr("SCHEMA_VERSION") = std::string(kSchemaVersion);

  m.def(
      "boin_boundaries",
      [](double phi, std::optional<double> phi1, std::optional<double> phi2) {
        const auto b = boin_boundaries(phi, phi1, phi2);
        return py::make_tuple(b.lambda_e, b.lambda_d);
      },
      py::arg("phi"), py::arg("phi1") = py::none(), py::arg("phi2") = py::none());

  m.def(
      "mean_utility",
      [](std::vector<int> counts, std::vector<double> psi, std::vector<double> prior) {
        if (psi.size() != 4) throw Error(ErrorKind::kDimensionMismatch, "psi needs four scores");
        const auto spec = UtilitySpec::canonical(psi[0], psi[1], psi[2], psi[3]);
        DoseState state{1, std::move(counts), 0};
        state.n_enrolled = state.n();
        return mean_utility(dirichlet_posterior(state, prior), spec);
      },
      py::arg("counts"), py::arg("psi"), py::arg("prior"));

  m.def("regularized_incomplete_beta", &regularized_incomplete_beta, py::arg("x"), py::arg("a"), py::arg("b"));

  m.def(
      "isotonic_tox_estimates",
      [](const std::vector<int>& n_tox, const std::vector<int>& n) {
        if (n_tox.size() != n.size()) throw Error(ErrorKind::kDimensionMismatch, "n_tox and n differ in length");
        std::vector<ToxicityData> data;
        for (size_t i = 0; i < n.size(); ++i) data.push_back({static_cast<int>(i + 1), n_tox[i], n[i]});
        return isotonic_tox_estimates(data);
      },
      py::arg("n_tox"), py::arg("n"));

  m.def(
      "recommend", [](const std::string& state) { return dumps(document(recommend(doc<TrialState>(state, {})))); },
      py::arg("state"));

  m.def(
      "derive",
      [](const std::string& records, const std::string& map, const std::string& utility) {
        const auto set = build_analysis_set(doc<std::vector<PatientRecord>>(records, {}),
                                            doc<StrategyMap>(map, StrategyMap::case_study()),
                                            doc<UtilitySpec>(utility, UtilitySpec::canonical()));
        return dumps({{"version", kSchemaVersion}, {"outcomes", set.outcomes}, {"excluded", set.excluded}});
      },
      py::arg("records"), py::arg("map") = "", py::arg("utility") = "");

  m.def(
      "compare_strategies",
      [](const std::string& records, const std::vector<std::string>& maps, int doses, const std::string& utility,
         const std::string& config) {
        std::vector<StrategyMap> parsed;
        for (const auto& mp : maps) parsed.push_back(doc<StrategyMap>(mp, {}));
        const auto cmp = compare_strategies(doc<std::vector<PatientRecord>>(records, {}), parsed,
                                            doc<UtilitySpec>(utility, UtilitySpec::canonical()),
                                            doc<DesignConfig>(config, DesignConfig::case_study()), doses);
        return dumps(document(cmp));
      },
      py::arg("records"), py::arg("maps"), py::arg("doses"), py::arg("utility") = "", py::arg("config") = "");

  m.def(
      "tipping_scan",
      [](const std::string& state, int flip_to, const std::string& scope, bool exhaustive) {
        const auto s = doc<TrialState>(state, {});
        TippingOptions opt;
        opt.flip_to = flip_to;
        opt.scope = parse_tipping_scope(scope);
        const auto r = exhaustive ? tipping_scan_exhaustive(s.records, s.map, s.spec, s.config, s.grid.size(), opt)
                                  : tipping_scan(s.records, s.map, s.spec, s.config, s.grid.size(), opt);
        return dumps(document(r));
      },
      py::arg("state"), py::arg("flip_to") = 1, py::arg("scope") = "favorable_at_obd", py::arg("exhaustive") = false);

  m.def(
      "decision_table",
      [](int max_n, const std::string& config, const std::string& utility) {
        return dumps(document(decision_table(doc<DesignConfig>(config, DesignConfig::case_study()),
                                             doc<UtilitySpec>(utility, UtilitySpec::canonical()), max_n)));
      },
      py::arg("max_n"), py::arg("config") = "", py::arg("utility") = "");

  m.def(
      "simulate",
      [](const std::string& scenario, int reps, std::uint64_t seed, int jobs, const std::string& config,
         const std::string& utility, const std::string& map) {
        const auto sc = doc<Scenario>(scenario, {});
        const auto cfg = doc<DesignConfig>(config, DesignConfig::case_study());
        const auto spec = doc<UtilitySpec>(utility, UtilitySpec::canonical());
        const auto mp = doc<StrategyMap>(map, StrategyMap::case_study());
        py::gil_scoped_release release;
        return dumps(document(operating_characteristics(sc, cfg, mp, spec, reps, seed, jobs)));
      },
      py::arg("scenario"), py::arg("reps") = 1000, py::arg("seed") = 42, py::arg("jobs") = 1,
      py::arg("config") = "", py::arg("utility") = "", py::arg("map") = "");
}
