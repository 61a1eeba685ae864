import json
import math
import os
from pathlib import Path

import jsonschema
import numpy as np
import pytest

import mcarsense

DOCS = Path(__file__).resolve().parents[2] / "docs"


def schema(name):
    return json.loads((DOCS / name).read_text())


def test_scenario_constants():
    k = mcarsense.scenario_constants()
    assert k["truth"] == pytest.approx(2.8)
    assert k["c"] == pytest.approx(1.0 - 0.5772156649015329, abs=1e-12)
    # eta0 = log(0.4/0.6) + 2c - log(Gamma(4)/Gamma(2))
    assert k["eta"] == pytest.approx(math.log(0.4 / 0.6) + 2 * k["c"] - math.log(6.0), abs=1e-12)


def test_generate_dataset_shape_and_determinism():
    x1, r1 = mcarsense.generate_dataset(200, seed=9)
    x2, r2 = mcarsense.generate_dataset(200, seed=9)
    assert len(x1) == 200
    assert set(np.unique(r1)) <= {0, 1}
    assert np.all(x1[r1 == 0] == 0.0)
    assert np.all(x1[r1 == 1] > 0.0)
    np.testing.assert_array_equal(x1, x2)
    np.testing.assert_array_equal(r1, r2)


def test_fit_summary_matches_schema_and_draws():
    x, r = mcarsense.generate_dataset(50, seed=3)
    cfg = {"engine": {"name": "h", "n_draws": 2000, "burn_in": 0}}
    out = mcarsense.fit(x, r, seed=5, config=cfg)
    jsonschema.validate(out["summary"], schema("summary.schema.json"))
    lo, hi = mcarsense.credible_interval(out["functional"], 0.9)
    assert out["summary"]["interval"]["lower"] == lo
    assert out["summary"]["interval"]["upper"] == hi
    assert lo < out["summary"]["functional"]["mean"] < hi
    again = mcarsense.fit(x, r, seed=5, config=cfg)
    np.testing.assert_array_equal(out["functional"], again["functional"])


def test_propensity_flat_at_zero():
    vals = mcarsense.propensity_curve(0.0, 0.0, 0.0, [0.1, 1.0, 10.0])
    np.testing.assert_array_equal(vals, [0.5, 0.5, 0.5])


def test_propensity_increasing_for_positive_alpha():
    grid = np.linspace(0.05, 20.0, 200)
    vals = mcarsense.propensity_curve(-1.35, 2.0, 0.42, grid)
    assert np.all(np.diff(vals) > 0)


def test_normalized_config_validates_against_schema():
    cfg = mcarsense.normalize_config({"engine": {"name": "peta"}, "run": {"ns": [100, 1000]}})
    jsonschema.validate(cfg, schema("config.schema.json"))
    assert cfg["engine"]["name"] == "peta"
    assert cfg["run"]["ns"] == [100, 1000]


def test_config_errors_raise():
    with pytest.raises(mcarsense.ConfigError):
        mcarsense.normalize_config({"engine": {"nmae": "h"}})
    with pytest.raises(mcarsense.ConfigError):
        mcarsense.normalize_config({"engine": {"name": "nuts"}})


def test_small_coverage_report_schema():
    rep = mcarsense.run_coverage(
        {"engine": {"name": "h", "n_draws": 500, "burn_in": 0}, "run": {"ns": [30], "reps": 4, "threads": 1}}
    )
    jsonschema.validate(rep, schema("report.schema.json"))
    assert rep["cells"][0]["reps"] == 4


def test_dataset_csv_format():
    text = mcarsense.dataset_csv([1.5, 0.0], [1, 0])
    assert text.splitlines() == ["x,r", "1.5,1", "0,0"]


def test_imports_the_module_under_test():
    # under ctest the build-tree module must win over any installed copy
    expected = os.environ.get("MCARSENSE_EXPECT_BUILD_TREE")
    if expected:
        assert Path(mcarsense.__file__).resolve().is_relative_to(Path(expected).resolve())
