import json

import numpy as np
import pytest

import tsmcmc


def zscore(x):
    return (x - x.mean(axis=0)) / x.std(axis=0)


@pytest.fixture(scope="module")
def lorenz():
    return zscore(tsmcmc.simulate_lorenz(steps=1000, transient=500))


def test_simulate_shape_and_bounds():
    x = tsmcmc.simulate_lorenz(steps=500)
    assert x.shape == (500, 3)
    assert np.isfinite(x).all()
    assert np.abs(x).max() < 100


def test_density_roundtrip(lorenz):
    d = tsmcmc.fit_diff_density(lorenz)
    assert d.dims == 3
    theta = np.diff(lorenz, axis=0)[10]
    back = tsmcmc.DiffDensity.from_json(d.to_json())
    assert back(theta) == d(theta)
    assert d.to_json()["joint_model"] == "product_of_marginals"


def test_identity_metrics(lorenz):
    rep = tsmcmc.evaluate(lorenz, lorenz)
    assert rep["acf_error"] == 0.0
    assert rep["r2"] == 1.0
    assert rep["predictive"] == rep["predictive_baseline"]


def test_correction_improves_biased_source(lorenz):
    d = tsmcmc.fit_diff_density(lorenz)
    drift = 0.1 * np.diff(lorenz, axis=0).std(axis=0)
    out = tsmcmc.correct(lorenz, d, drift=drift, noise_scale=1.5, seed=3)
    assert out["corrected"].shape == lorenz.shape
    np.testing.assert_array_equal(out["corrected"][:16], lorenz[:16])
    raw = tsmcmc.evaluate(lorenz, out["raw"], seed=3)
    cor = tsmcmc.evaluate(lorenz, out["corrected"], seed=3)
    assert cor["acf_error"] < raw["acf_error"]
    assert out["accepted"] + out["forced_accepts"] == lorenz.shape[0] - 16


def test_seeded_runs_repeat(lorenz):
    d = tsmcmc.fit_diff_density(lorenz)
    a = tsmcmc.correct(lorenz, d, seed=7)["corrected"]
    b = tsmcmc.correct(lorenz, d, seed=7)["corrected"]
    np.testing.assert_array_equal(a, b)


def test_moments():
    rng = np.random.default_rng(0)
    assert abs(tsmcmc.kurtosis(rng.normal(size=200000)) - 3) < 0.05
    x = rng.normal(size=5000)
    assert tsmcmc.acf(x, 3).shape == (3,)


def test_errors_carry_codes(lorenz):
    d = tsmcmc.fit_diff_density(lorenz)
    with pytest.raises(tsmcmc.TsmcmcError) as info:
        tsmcmc.correct(lorenz, d, beta=2.0)
    assert "beta" in str(info.value)
    with pytest.raises(tsmcmc.TsmcmcError) as info:
        tsmcmc.fit_diff_density(np.ones((10, 2)))
    assert info.value.code == "ZeroRange"


def test_theory_report():
    rep = tsmcmc.verify_theory(seed=1)
    assert rep["passed"] is True


def test_run_compare(tmp_path):
    cfg = {
        "dataset": {"kind": "lorenz", "steps": 600, "transient": 200},
        "windowing": {"p": 8, "q": 16},
        "source": {"kind": "var", "order": 1},
        "seeds": [0, 1],
        "output_dir": str(tmp_path),
    }
    assert tsmcmc.run("compare", cfg) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["seeds"] == [0, 1]
    with pytest.raises(tsmcmc.TsmcmcError):
        tsmcmc.run("compare", {**cfg, "seeds": []})
