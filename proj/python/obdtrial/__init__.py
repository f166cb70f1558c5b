"""Python bindings for the obdtrial dose-optimization engine.

Structured inputs are plain dicts and lists following the v1 JSON schemas;
results come back the same way.
"""

import json

from . import _core
from ._core import ObdError, SCHEMA_VERSION, boin_boundaries, isotonic_tox_estimates, mean_utility
from ._core import regularized_incomplete_beta

__all__ = [
    "ObdError",
    "SCHEMA_VERSION",
    "boin_boundaries",
    "compare_strategies",
    "decision_table",
    "derive",
    "isotonic_tox_estimates",
    "mean_utility",
    "recommend",
    "regularized_incomplete_beta",
    "simulate",
    "tipping_scan",
]


def _dump(value):
    return "" if value is None else json.dumps(value)


def recommend(state):
    return json.loads(_core.recommend(_dump(state)))


def derive(records, strategy_map=None, utility=None):
    return json.loads(_core.derive(_dump(records), _dump(strategy_map), _dump(utility)))


def compare_strategies(records, maps, doses, utility=None, config=None):
    return json.loads(
        _core.compare_strategies(_dump(records), [_dump(m) for m in maps], doses, _dump(utility), _dump(config))
    )


def tipping_scan(state, flip_to=1, scope="favorable_at_obd", exhaustive=False):
    return json.loads(_core.tipping_scan(_dump(state), flip_to, scope, exhaustive))


def decision_table(max_n, config=None, utility=None):
    return json.loads(_core.decision_table(max_n, _dump(config), _dump(utility)))


def simulate(scenario, reps=1000, seed=42, jobs=1, config=None, utility=None, strategy_map=None):
    return json.loads(
        _core.simulate(_dump(scenario), reps, seed, jobs, _dump(config), _dump(utility), _dump(strategy_map))
    )
