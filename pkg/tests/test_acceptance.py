"""Acceptance criteria, one test each, with their time limits.

Each test prints a single ``[acceptance N] PASS|FAIL`` line to the terminal.
"""

import csv
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from splitmspe import cli
from splitmspe.core import CorrelationSpec, Partition, RngStream, gram_blocks
from splitmspe.elastic_net import EnetConfig, enet_objective, fit_elastic_net
from splitmspe.estimators import (
    cov_garrote,
    cov_ls,
    cov_split,
    fit_garrote,
    fit_ls,
    fit_ridge,
    fit_split,
    generalized_variance,
    gram_for,
    total_variance,
)
from splitmspe.mspe import (
    Scenario,
    coef_mse_ls,
    coef_mse_split,
    draw_sample,
    estimate_g,
    mspe_garrote_closed,
    mspe_ls_closed,
    mspe_ridge_closed,
    mspe_split2_closed,
    split_crossover,
)
from splitmspe.partitions import adaptive_split_set, count_splits, enumerate_splits
from splitmspe.splitreg import SplitRegConfig, fit_splitreg
from splitmspe.targetcov import TargetCovRequest, empirical_cov, generate_detailed, triangular_factor

from _util import random_correlation, random_dataset, random_partition
from test_elastic_net import kkt_violation, lattice_minimum


@contextmanager
def criterion(capsys, number, title, limit):
    """Time the block, print one PASS/FAIL line and enforce the time limit."""
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        status = "PASS" if ok and dt < limit else "FAIL"
        with capsys.disabled():
            print(f"\n[acceptance {number}] {status} {title} ({dt:.2f} s, limit {limit} s)")
    assert dt < limit, f"took {dt:.1f} s, limit {limit} s"


def test_1_combinatorics(capsys):
    with criterion(capsys, 1, "split counts, adaptive set size, enumeration lengths", 1.0):
        assert count_splits(6, 2).value == 31
        assert count_splits(6, 3).value == 90
        assert len(adaptive_split_set(6, 3)) == 122
        for p in range(1, 10):
            for G in range(1, p + 1):
                assert sum(1 for _ in enumerate_splits(p, G)) == count_splits(p, G).value


def test_2_crossover_threshold(capsys):
    with criterion(capsys, 2, "split/LS crossover |beta2| at r=0.7, n=10", 1.0):
        b = split_crossover(1.0, 10, 0.7)
        assert abs(b - 0.4428) <= 1e-3
        assert coef_mse_split(b, 1.0, 10, 0.7) == pytest.approx(coef_mse_ls(1.0, 10, 0.7), rel=1e-12)


def _merge(rng, p):
    g = list(p.groups)
    i, j = rng.choice(len(g), 2, replace=False)
    return Partition.from_groups([g[k] for k in range(len(g)) if k not in (i, j)] + [g[i] + g[j]])


def test_3_variance_inequalities(capsys):
    with criterion(capsys, 3, "determinant and trace inequalities on 1000 designs", 30.0):
        rng = np.random.default_rng(2024)
        slack = 1 + 1e-10
        for _ in range(1000):
            ds = random_dataset(rng, 20, 6, corr=rng.uniform(-0.15, 0.9))
            fine = random_partition(rng, 6, 3)
            coarse = _merge(rng, fine)  # two blocks, refined by ``fine``
            sigma2 = rng.uniform(0.1, 5.0)
            ls = cov_ls(gram_for(ds), sigma2)
            c2 = cov_split(gram_blocks(ds, coarse), sigma2)
            c3 = cov_split(gram_blocks(ds, fine), sigma2)
            ga = cov_garrote(gram_for(ds), sigma2, rng.uniform(0, 1, 6))
            det, tr = generalized_variance, total_variance
            # split and garrote against LS, in determinant and trace
            assert det(c2) <= det(ls) * slack and det(c3) <= det(ls) * slack
            assert det(ga) <= det(ls) * slack
            assert tr(c2) <= tr(ls) * slack and tr(c3) <= tr(ls) * slack
            assert tr(ga) <= tr(ls) * slack
            # refinement never increases either functional
            assert det(c3) <= det(c2) * slack
            assert tr(c3) <= tr(c2) * slack


def test_4_target_covariance(capsys):
    with criterion(capsys, 4, "exact empirical covariance and triangular-factor oracle", 30.0):
        rng = np.random.default_rng(77)
        for i in range(100):
            gamma_r = random_correlation(rng, 6)
            gamma_rho = random_correlation(rng, 6)
            req = TargetCovRequest(50, CorrelationSpec(gamma_rho, gamma_r), RngStream(i, 0, "design"))
            out = generate_detailed(req)
            assert np.linalg.norm(empirical_cov(out.Y) - gamma_r) < 1e-8
            np.testing.assert_allclose(out.Y, out.Z @ triangular_factor(gamma_r).T, rtol=0, atol=1e-8)


C5_PAIRS = [(0.5, 0.2), (0.9, 0.1), (0.9, 0.5)]
C5_BETA2 = [-1.0, 0.0, 1.0]
C5_LAMBDAS = [1.0, 10.0, 100.0]
C5_WEIGHTS = [(0.5, 0.5), (1.0, 0.3), (0.2, 0.9)]


def test_5_closed_form_vs_monte_carlo(capsys):
    with criterion(capsys, 5, "closed forms within 2 SE of Monte Carlo, d=2", 300.0):
        singletons = Partition.from_groups([[0], [1]])
        failures = []
        checks = 0
        for r, rho in C5_PAIRS:
            for b2 in C5_BETA2:
                # default moment-matched test set and training noise
                sc = Scenario.equicorrelated(10, 2, r, rho, beta2=b2, snr=3.0, N=200, M=500, seed=0)
                sample = draw_sample(sc)
                cases = [("ls", lambda ds: fit_ls(ds).coefficients,
                          mspe_ls_closed(sc.sigma2, 10, r, rho))]
                for lam in C5_LAMBDAS:
                    cases.append((f"ridge {lam}", lambda ds, lam=lam: fit_ridge(ds, lam).coefficients,
                                  mspe_ridge_closed(lam, sc.beta, sc.sigma2, 10, r, rho)))
                for w in C5_WEIGHTS:
                    cases.append((f"garrote {w}", lambda ds, w=w: fit_garrote(ds, w).coefficients,
                                  mspe_garrote_closed(w, sc.beta, sc.sigma2, 10, r, rho)))
                    cases.append((f"split {w}", lambda ds, w=w: fit_split(ds, singletons, w).coefficients,
                                  mspe_split2_closed(w, sc.beta, sc.sigma2, 10, r, rho)))
                for name, fit, closed in cases:
                    est = estimate_g(fit, sc, sample)
                    checks += 1
                    if not abs(est.g - sc.sigma2 - closed) < 2 * est.se:
                        failures.append((r, rho, b2, name, est.g - sc.sigma2, closed, est.se))
        assert checks == 90
        assert not failures, failures


def test_6_solver_oracles(capsys):
    with criterion(capsys, 6, "elastic net KKT and lattice oracle, SplitReg degeneracy", 120.0):
        for seed in range(20):
            rng = np.random.default_rng(500 + seed)
            ds = random_dataset(rng, 12, 2, corr=rng.uniform(-0.8, 0.8), noise=0.5)
            lam, alpha = rng.uniform(0.01, 1.0), rng.uniform(0, 1)
            beta = fit_elastic_net(ds, EnetConfig(lam, alpha, tolerance=1e-12)).coefficients
            assert kkt_violation(ds, beta, lam, alpha) < 1e-7
            assert enet_objective(ds, beta, lam, alpha) <= lattice_minimum(ds, lam, alpha) + 1e-12
        for seed in range(20):
            rng = np.random.default_rng(900 + seed)
            d = int(rng.integers(2, 8))
            ds = random_dataset(rng, 25, d, corr=rng.uniform(0, 0.8))
            lam, alpha, G = rng.uniform(0.01, 0.5), rng.uniform(0, 1), int(rng.integers(1, 4))
            fit = fit_splitreg(ds, SplitRegConfig(G, lam, alpha, 0.0, tolerance=1e-10))
            ref = fit_elastic_net(ds, EnetConfig(lam, alpha, tolerance=1e-10)).coefficients
            for g in range(G):
                np.testing.assert_allclose(fit.betas[g], ref, rtol=0, atol=1e-6)


SMOKE_CONFIG = """\
seed = 0
n = 50
d = 6
r = 0.9
rho = 0.1
beta2 = -1:1:5
snr = 3
N = 50
M = 200
methods = ls, ridge, lasso, elastic_net, garrote, split, splitreg, splitreg_weighted
mode = montecarlo

[enet]
lambda_min = 1e-3
lambda_max = 1
lambda_count = 12
alphas = 0, 0.5, 1

[splitreg]
G = 3
lambda_d = 0, 1, 0.1, 0.01

[split]
gmax = 3
"""


@pytest.fixture(scope="module")
def smoke_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("smoke")
    (path / "smoke.cfg").write_text(SMOKE_CONFIG)
    return path


def _run_smoke(directory: Path, name: str, jobs: int) -> Path:
    out = directory / name
    assert cli.main(["curves", str(directory / "smoke.cfg"), "-o", str(out), "--jobs", str(jobs)]) == 0
    return out


def _mspe_table(path: Path) -> dict[str, list[float]]:
    with open(path) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    table: dict[str, list[float]] = {}
    for row in rows:
        table.setdefault(row["method"], []).append(float(row["mspe"]))
    return table


def test_7_ordering_claims(capsys, smoke_dir):
    with criterion(capsys, 7, "exact orderings on the d=6 smoke sweep", 600.0):
        t = _mspe_table(_run_smoke(smoke_dir, "jobs1.csv", 1))
        assert all(len(v) == 5 for v in t.values())
        for i in range(5):
            assert t["split"][i] <= t["garrote"][i] <= t["ls"][i]
            assert t["splitreg"][i] <= t["elastic_net"][i]
            assert t["splitreg_weighted"][i] <= t["splitreg"][i]


def test_8_determinism(capsys, smoke_dir):
    with criterion(capsys, 8, "byte-identical smoke CSV across repeats and --jobs", 600.0):
        first = smoke_dir / "jobs1.csv"
        if not first.exists():
            _run_smoke(smoke_dir, "jobs1.csv", 1)
        again = _run_smoke(smoke_dir, "jobs1_again.csv", 1)
        parallel = _run_smoke(smoke_dir, "jobs2.csv", 2)
        assert first.read_bytes() == again.read_bytes()
        assert first.read_bytes() == parallel.read_bytes()


DOCUMENTED_A_15_3 = 6_137_951


def test_9_documented_discrepancy(capsys):
    with criterion(capsys, 9, "a(15,3) differs from the documented value; formula checked by enumeration", 10.0):
        value = count_splits(15, 3).value
        # Stirling number of the second kind by inclusion-exclusion
        stirling = (3**15 - 3 * 2**15 + 3) // 6
        assert value == stirling == 2_375_101
        assert value != DOCUMENTED_A_15_3
        with capsys.disabled():
            print(f"\n    a(15,3) computed = {value:,}; documented = {DOCUMENTED_A_15_3:,}")
        for p in (7, 8):
            assert sum(1 for _ in enumerate_splits(p, 3)) == count_splits(p, 3).value
