import math

import numpy as np
import pytest

import dslt


def test_thresholds():
    assert dslt.threshold(1, "raw") == (2, 3)
    assert dslt.threshold(2, "raw") == (1, 3)
    assert dslt.threshold(2, "renormalized") == (2, 5)
    assert dslt.threshold(2, "d12") == (2, 7)


def test_density_and_covariance():
    assert dslt.gaussian_density_deriv(0, 1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert dslt.covariance_rh(0.3, 1.0, 1.0) == pytest.approx(1.0)
    assert dslt.gauss_2f1(1.0, 1.0, 2.0, 0.5) == pytest.approx(-math.log(0.5) / 0.5)


def test_geometry():
    tag = dslt.classify_region(0.0, 0.3, 0.5, 0.9)
    assert tag["region"] == "R3"
    assert tag["a"] == pytest.approx(0.3)
    tr = dslt.cov_triple(0.5, 0.0, 0.5, 0.2, 0.7)
    assert tr["mu"] == pytest.approx(0.3)
    value, err = dslt.kernel_inner_product(0.3, 0.0, 1.0, 0.0, 0.5)
    assert value == pytest.approx(dslt.covariance_rh(0.3, 1.0, 0.5), abs=1e-6)


def test_paths_shape_and_seed():
    a = dslt.simulate_paths(0.3, 1.0, 32, 4, seed=5)
    b = dslt.simulate_paths(0.3, 1.0, 32, 4, seed=5, workers=2)
    assert a.shape == (4, 32)
    assert np.array_equal(a, b)


def test_series_and_mean():
    s = dslt.variance_series(1, 0.3, 0.5, n_max=41)
    assert s["n"][0] == 1
    assert all(t >= 0 for t in s["terms"])
    assert dslt.mean_alpha(3, 0.3, 0.1) == 0.0
    assert dslt.mean_alpha(2, 0.3, 0.1) < 0.0
    with pytest.raises(dslt._core.Divergence):
        dslt.mean_alpha(2, 0.4, 0.0)


def test_mc_runs():
    out = dslt.run_mc(1, 0.3, [0.4, 0.2], n_paths=50, grid_points=32, seed=3)
    assert len(out["estimates"]) == 2
    assert len(out["samples"][0]) == 50
    with pytest.raises(ValueError):
        dslt.run_mc(1, 0.3, [0.1, 0.2])
