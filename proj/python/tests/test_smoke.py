import json
import math

import numpy as np
import pytest

import resbo


def test_truncated_1d_half_normal():
    t = resbo.truncated_moments_1d(0.0, 1.0, 0.0, math.inf)
    assert t.mass == pytest.approx(0.5)
    assert t.mean == pytest.approx(math.sqrt(2 / math.pi), rel=1e-10)
    assert t.var == pytest.approx(1 - 2 / math.pi, rel=1e-10)


def test_truncated_2d_matches_sampling():
    rng = np.random.default_rng(0)
    cov = np.array([[1.0, 0.7], [0.7, 1.0]])
    lo, hi = np.array([-0.5, 0.0]), np.array([1.5, 2.0])
    z = rng.multivariate_normal(np.zeros(2), cov, size=400_000)
    z = z[np.all((z >= lo) & (z <= hi), axis=1)]
    m = resbo.truncated_moments_2d(np.zeros(2), cov, lo, hi)
    np.testing.assert_allclose(m.mean, z.mean(axis=0), atol=5e-3)
    np.testing.assert_allclose(m.covariance, np.cov(z.T), atol=5e-3)


def test_infeasible_box_raises():
    with pytest.raises(resbo.NumericalError):
        resbo.truncated_moments_2d(np.zeros(2), np.eye(2), np.array([40.0, 40.0]), np.array([41.0, 41.0]))


def test_ep_diagonal_is_exact():
    r = resbo.ep_box_condition(np.zeros(2), np.eye(2), np.array([0.0, -np.inf]), np.array([np.inf, 1.0]))
    t0 = resbo.truncated_moments_1d(0.0, 1.0, 0.0, math.inf)
    t1 = resbo.truncated_moments_1d(0.0, 1.0, -math.inf, 1.0)
    np.testing.assert_allclose(r.mean, [t0.mean, t1.mean], atol=1e-8)
    assert abs(r.covariance[0, 1]) < 1e-12


def test_gp_interpolates():
    x = np.linspace(0, 1, 8).reshape(-1, 1)
    y = np.sin(6 * x[:, 0])
    post = resbo.fit_posterior(x, y, resbo.KernelParams(1.0, np.array([0.2]), 1e-8))
    mean, cov = post.predict(x)
    np.testing.assert_allclose(mean, y, atol=1e-4)
    assert np.all(np.diag(cov) >= 0)


def test_branin_minimum():
    p = resbo.make_problem("branin")
    x = np.array([(math.pi + 5) / 15])
    t = np.array([2.275 / 15])
    assert p.raw(x, t) == pytest.approx(0.397887, abs=1e-4)
    assert "within_model" in resbo.problem_names()


def test_bad_config_raises():
    with pytest.raises(resbo.ConfigError):
        resbo.run_experiment(json.dumps({"iterations": 0}))


def test_small_experiment(tmp_path):
    cfg = {
        "problem": "sinus_linear",
        "acquisition": "ucb",
        "iterations": 3,
        "repetitions": 2,
        "seed": 4,
        "out": str(tmp_path / "out"),
    }
    runs = resbo.run_experiment(json.dumps(cfg), workers=2)
    assert len(runs) == 2
    assert all(r["complete"] for r in runs)
    assert len(runs[0]["iterations"]) == 3
    assert (tmp_path / "out" / "aggregate.csv").exists()
