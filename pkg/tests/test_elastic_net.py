import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitmspe.core import Dataset
from splitmspe.errors import ConvergenceError, ParameterError
from splitmspe.elastic_net import (
    EnetConfig,
    enet_objective,
    enet_path,
    fit_elastic_net,
    fit_lasso,
    null_lambda,
    soft_threshold,
)
from splitmspe.estimators import fit_ls, fit_ridge

from _util import random_dataset


def kkt_violation(ds, beta, lam, alpha):
    """Largest violation of the elastic net optimality conditions."""
    g = -ds.X.T @ (ds.y - ds.X @ beta) / ds.n + lam * (1 - alpha) * beta
    t = lam * alpha
    active = beta != 0
    v = np.abs(g[active] + t * np.sign(beta[active]))
    inactive = np.maximum(np.abs(g[~active]) - t, 0.0)
    return max(v.max(initial=0.0), inactive.max(initial=0.0))


def lattice_minimum(ds, lam, alpha, half_width=3.0, points=2001):
    grid = np.linspace(-half_width, half_width, points)
    b1, b2 = np.meshgrid(grid, grid, indexing="ij")
    A = ds.X.T @ ds.X / ds.n
    c = ds.X.T @ ds.y / ds.n
    yy = ds.y @ ds.y / ds.n
    quad = 0.5 * (yy - 2 * (c[0] * b1 + c[1] * b2)
                  + A[0, 0] * b1**2 + 2 * A[0, 1] * b1 * b2 + A[1, 1] * b2**2)
    pen = lam * (0.5 * (1 - alpha) * (b1**2 + b2**2) + alpha * (np.abs(b1) + np.abs(b2)))
    return float(np.min(quad + pen))


class TestSoftThreshold:
    @pytest.mark.parametrize("z,t,expected", [(3.0, 1.0, 2.0), (-3.0, 1.0, -2.0), (0.5, 1.0, 0.0),
                                              (1.0, 1.0, 0.0), (2.0, 0.0, 2.0)])
    def test_values(self, z, t, expected):
        assert soft_threshold(z, t) == expected

    def test_negative_threshold(self):
        with pytest.raises(ParameterError):
            soft_threshold(1.0, -1.0)


class TestFit:
    def test_zero_penalty_is_ls(self):
        ds = random_dataset(np.random.default_rng(0), 30, 4, corr=0.5)
        fit = fit_elastic_net(ds, EnetConfig(0.0, 1.0, tolerance=1e-13))
        np.testing.assert_allclose(fit.coefficients, fit_ls(ds).coefficients, atol=1e-9)

    def test_pure_ridge_matches_closed_form(self):
        # alpha = 0: (1/2n)||y - Xb||^2 + lam/2 ||b||^2 is ridge with penalty n*lam
        ds = random_dataset(np.random.default_rng(1), 25, 3, corr=0.7)
        fit = fit_elastic_net(ds, EnetConfig(0.3, 0.0, tolerance=1e-13))
        np.testing.assert_allclose(fit.coefficients, fit_ridge(ds, 0.3 * ds.n).coefficients, atol=1e-10)

    def test_orthogonal_design_is_soft_thresholded_ls(self):
        H = np.array([[1, 1], [-1, 1], [1, -1], [-1, -1]], dtype=float)
        ds = Dataset(H, np.array([3.0, 1.0, -1.0, 0.5]), standardized=True)
        z = H.T @ ds.y / 4
        fit = fit_lasso(ds, 0.4)
        np.testing.assert_allclose(fit.coefficients, [soft_threshold(v, 0.4) for v in z], atol=1e-14)

    def test_null_lambda_gives_zero(self):
        ds = random_dataset(np.random.default_rng(2), 20, 5)
        lam = null_lambda(ds, 0.5)
        # exactly at the threshold rounding may leave ~1e-16
        assert np.max(np.abs(fit_elastic_net(ds, EnetConfig(lam, 0.5)).coefficients)) < 1e-12
        assert np.all(fit_elastic_net(ds, EnetConfig(1.001 * lam, 0.5)).coefficients == 0)
        assert np.any(fit_elastic_net(ds, EnetConfig(0.99 * lam, 0.5)).coefficients != 0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(1e-3, 2.0))
    def test_kkt(self, seed, alpha, lam):
        ds = random_dataset(np.random.default_rng(seed), 15, 5, corr=0.6)
        fit = fit_elastic_net(ds, EnetConfig(lam, alpha, tolerance=1e-12))
        assert kkt_violation(ds, fit.coefficients, lam, alpha) < 1e-7

    def test_objective_trace_monotone(self):
        ds = random_dataset(np.random.default_rng(3), 20, 6, corr=0.9)
        fit = fit_elastic_net(ds, EnetConfig(0.05, 0.7, tolerance=1e-12), record_objective=True)
        trace = fit.diagnostics["objective_trace"]
        assert np.all(np.diff(trace) <= 1e-15 * np.abs(trace[:-1]))
        assert trace[-1] == pytest.approx(enet_objective(ds, fit.coefficients, 0.05, 0.7), rel=1e-14)

    def test_sweep_limit(self):
        ds = random_dataset(np.random.default_rng(4), 20, 6, corr=0.95)
        with pytest.raises(ConvergenceError) as exc:
            fit_elastic_net(ds, EnetConfig(1e-4, 0.5, max_sweeps=2, tolerance=1e-14))
        assert exc.value.last_iterate.shape == (6,)

    @pytest.mark.parametrize("kw", [dict(lam=-1.0), dict(lam=1.0, alpha=1.5), dict(lam=1.0, tolerance=0.0),
                                    dict(lam=1.0, max_sweeps=0)])
    def test_config_validation(self, kw):
        with pytest.raises(ParameterError):
            EnetConfig(**kw)

    def test_tuning_record(self):
        fit = fit_lasso(random_dataset(np.random.default_rng(5), 10, 2), 0.1)
        assert fit.method == "elastic_net" and fit.tuning == {"lambda": 0.1, "alpha": 1.0}


class TestLatticeOracle:
    @pytest.mark.parametrize("seed", range(20))
    def test_beats_lattice(self, seed):
        rng = np.random.default_rng(100 + seed)
        ds = random_dataset(rng, 12, 2, corr=rng.uniform(-0.8, 0.8), noise=0.5)
        lam, alpha = rng.uniform(0.01, 1.0), rng.uniform(0, 1)
        fit = fit_elastic_net(ds, EnetConfig(lam, alpha, tolerance=1e-12))
        assert np.all(np.abs(fit.coefficients) < 3.0)
        assert kkt_violation(ds, fit.coefficients, lam, alpha) < 1e-7
        assert enet_objective(ds, fit.coefficients, lam, alpha) <= lattice_minimum(ds, lam, alpha) + 1e-12


class TestPath:
    def test_path_matches_cold_starts(self):
        ds = random_dataset(np.random.default_rng(6), 20, 4, corr=0.5)
        lams = [1.0, 0.3, 0.1, 0.01]
        path = enet_path(ds, lams, 0.5, tolerance=1e-12)
        for row, lam in zip(path, lams):
            cold = fit_elastic_net(ds, EnetConfig(lam, 0.5, tolerance=1e-12)).coefficients
            np.testing.assert_allclose(row, cold, atol=1e-9)

    def test_ascending_grid_rejected(self):
        with pytest.raises(ParameterError):
            enet_path(random_dataset(np.random.default_rng(7), 10, 2), [0.1, 1.0], 1.0)
