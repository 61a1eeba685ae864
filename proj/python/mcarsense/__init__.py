"""Python front end to the mcarsense C++ core.

Configurations are plain dicts with the same layout as the JSON run
configuration files (sections scenario, priors, engine, run).
"""

import json

from . import _core
from ._core import (
    BoundaryError,
    ConfigError,
    DataError,
    DomainError,
    MixingError,
    NumericError,
    ParameterError,
    credible_interval,
    propensity_curve,
)

__all__ = [
    "BoundaryError",
    "ConfigError",
    "DataError",
    "DomainError",
    "MixingError",
    "NumericError",
    "ParameterError",
    "credible_interval",
    "dataset_csv",
    "fit",
    "generate_dataset",
    "normalize_config",
    "propensity_curve",
    "run_coverage",
    "scenario_constants",
]


def _dump(config):
    return json.dumps(config or {})


def normalize_config(config=None):
    return json.loads(_core.normalize_config(_dump(config)))


def scenario_constants(config=None):
    return dict(_core.scenario_constants(_dump(config)))


def generate_dataset(n, seed=1, config=None):
    """Returns (x, r) arrays; x is 0 where r is 0."""
    return _core.generate_dataset(n, seed, _dump(config))


def fit(x, r, seed=1, config=None):
    out = dict(_core.fit(list(map(float, x)), list(map(int, r)), seed, _dump(config)))
    out["summary"] = json.loads(out["summary"])
    return out


def run_coverage(config):
    return json.loads(_core.run_coverage(_dump(config)))


def dataset_csv(x, r):
    return _core.dataset_csv(list(map(float, x)), list(map(int, r)))
