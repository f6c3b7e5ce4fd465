import numpy as np
import pytest

import spatwhite as sw


def test_import_surface():
    for name in ("generate_rgg", "optimize", "solve_budget", "run_experiment", "crb"):
        assert hasattr(sw, name)


def test_whitening_smoke():
    net = sw.generate_rgg(12, 7)
    cov = sw.build_covariance(net, np.full(12, 1.0), 0.05)
    pattern = sw.adjacency_pattern(net, 0.4)
    sol = sw.optimize(cov, pattern, restarts=2, seed=3)
    assert sol.divergence >= -1e-9
    assert np.allclose(sol.w.sum(axis=1), 1.0, atol=1e-12)
    # structural zeros off the pattern
    assert np.all(sol.z[~np.asarray(pattern.mask)] == 0.0)


def test_full_pattern_whitens_completely():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(6, 6))
    sigma = a @ a.T + 6 * np.eye(6)
    cov = sw.covariance_from_matrix(sigma)
    sol = sw.optimize(cov, sw.full_pattern(6), restarts=2, seed=1)
    assert sol.divergence < 1e-6
    assert np.max(np.abs(sol.z @ sigma @ sol.z.T - np.eye(6))) < 1e-4


def test_experiment_smoke():
    cfg = sw.ExperimentConfig()
    cfg.n = 8
    cfg.budgets = [16, 64]
    cfg.radii = [0.5]
    res = sw.run_experiment(cfg)
    assert len(res.rows) == 4 * 2
    for row in res.rows:
        assert row.analytic_mse >= row.crb * (1 - 1e-9)
        assert row.mc_mse is None


def test_invalid_config_raises():
    cfg = sw.ExperimentConfig()
    cfg.alpha = 1.5
    with pytest.raises(ValueError):
        sw.run_experiment(cfg)
