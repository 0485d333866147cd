"""Full-size acceptance criteria (n = m = 400). Each test prints one PASS/FAIL line."""
import time
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import nnls

from optshrink.asymptotics import limiting_mse, predict_spike
from optshrink.dtransform import MpParams, NoiseSpectrum, empirical_d, empirical_d_derivative, mp_d_transform
from optshrink.harness import ExperimentConfig, simulate_trials
from optshrink.linalg import SignalSpec, SvdFactors, sample_gaussian_matrix, sample_orthonormal_frame
from optshrink.oracle import exact_squared_error, oracle_diagonal, rank_regularized_weights

pytestmark = pytest.mark.slow

N = 400
FULL = MpParams(1.0, 1.0)


def column(trials, label, idx):
    return np.array([t[label][idx] for t in trials])


@pytest.fixture(scope="module")
def theta_two():
    cfg = ExperimentConfig("weights-vs-theta", n=N, m=N, trials=100, seed=2024, grid=[2.0])
    start = time.perf_counter()
    trials = simulate_trials(cfg)[0]
    return trials, time.perf_counter() - start


def test_c01_spike_location(theta_two, criterion):
    trials, elapsed = theta_two
    mean_sigma = column(trials, "eym", 0).mean()
    ok = 2.45 <= mean_sigma <= 2.55 and elapsed < 120
    criterion(1, "spike location, mean sigma_1 in [2.45, 2.55], runtime < 2 min", ok,
              f"mean={mean_sigma:.4f}, {elapsed:.1f}s")


def test_c02_oracle_and_optshrink_weights(theta_two, criterion):
    trials, _ = theta_two
    w_or = column(trials, "oracle", 0)
    w_opt = column(trials, "optshrink", 0)
    gap = np.mean(np.abs(w_opt - w_or))
    ok = 1.42 <= w_or.mean() <= 1.58 and gap < 0.05
    criterion(2, "oracle weight in [1.42, 1.58]; mean |w_optshrink - w_oracle| < 0.05", ok,
              f"oracle={w_or.mean():.4f}, gap={gap:.4f}")


def test_c03_normalized_se(theta_two, criterion):
    trials, _ = theta_two
    opt = column(trials, "optshrink", 1).mean()
    eym = column(trials, "eym", 1).mean()
    pred = predict_spike(2.0, FULL)
    assert pred.mse_opt_limit / 4 == pytest.approx(0.4375)
    assert pred.mse_eym_limit / 4 == pytest.approx(0.6875)
    ok = abs(opt - 0.4375) <= 0.05 and abs(eym - 0.6875) <= 0.05
    criterion(3, "SE/theta^2: OptShrink 0.4375 +- 0.05, EYM 0.6875 +- 0.05", ok, f"opt={opt:.4f}, eym={eym:.4f}")


def test_c04_thresholding(criterion):
    cfg = ExperimentConfig("weights-vs-theta", n=N, m=N, trials=100, seed=4, grid=[0.5])
    trials = simulate_trials(cfg)[0]
    w_or = column(trials, "oracle", 0).mean()
    eym = column(trials, "eym", 1).mean()
    assert predict_spike(0.5, FULL).mse_eym_limit / 0.25 == pytest.approx(17.0)
    ok = w_or < 0.1 and abs(eym - 17.0) <= 3.0
    criterion(4, "theta=0.5: oracle weight < 0.1, EYM SE/theta^2 = 17 +- 3", ok, f"oracle={w_or:.4f}, eym={eym:.3f}")


def test_c05_rank_overestimation(criterion):
    cfg = ExperimentConfig("mse-vs-rhat", n=N, m=N, trials=50, seed=5, grid=[1, 2, 3, 4, 5], thetas=[10.0])
    per_rank = simulate_trials(cfg)
    # normalized by theta^2 = 100 inside the harness
    eym = np.array([column(t, "eym", 1).mean() * 100 for t in per_rank])
    opt = np.array([column(t, "optshrink", 1).mean() * 100 for t in per_rank])
    d_eym, d_opt = np.diff(eym), np.diff(opt)
    ok = bool(np.all(np.abs(d_eym - 4.0) <= 0.5) and np.all(d_opt < 0.15))
    criterion(5, "each extra EYM component adds 4 +- 0.5; each extra OptShrink component adds < 0.15", ok,
              f"eym steps={np.round(d_eym, 3).tolist()}, opt steps={np.round(d_opt, 4).tolist()}")


def test_c06_missing_data(criterion):
    cfg = ExperimentConfig("missing-data", n=N, m=N, trials=100, seed=6, grid=[0.5, 0.2], thetas=[2.0])
    half, fifth = simulate_trials(cfg)
    # harness reports S-scale weights (divided by p); sigma_1 = p * eym weight
    sigma1 = 0.5 * column(half, "eym", 0).mean()
    w_half = column(half, "oracle", 0).mean()
    w_fifth = column(fifth, "oracle", 0).mean()
    ok = 1.45 <= sigma1 <= 1.55 and 0.93 <= w_half <= 1.07 and w_fifth < 0.15
    criterion(6, "p=0.5: sigma_1 in [1.45, 1.55], oracle in [0.93, 1.07]; p=0.2: oracle < 0.15", ok,
              f"sigma1={sigma1:.4f}, oracle(0.5)={w_half:.4f}, oracle(0.2)={w_fifth:.4f}")


FD_FAILURES = []


@settings(max_examples=1200, deadline=None, database=None)
@given(
    st.integers(1, 60).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(0, 5), min_size=n, max_size=n), st.just(n), st.integers(0, 40), st.floats(0.01, 3.0)
        )
    )
)
def _fd_property(case):
    vals, n, extra, offset = case
    spec = NoiseSpectrum(sorted(vals, reverse=True), n, n + extra)
    z = max(spec.edge, 1e-3) * (1 + offset)
    h = 1e-6 * z
    fd = (empirical_d(z + h, spec) - empirical_d(z - h, spec)) / (2 * h)
    exact = empirical_d_derivative(z, spec)
    FD_FAILURES.append(abs(exact - fd) > 1e-6 * abs(fd))
    assert abs(exact - fd) <= 1e-6 * abs(fd)


def test_c07_d_transform_consistency(criterion):
    x = sample_gaussian_matrix(N, N, 1 / N, seed=7)
    spec = NoiseSpectrum(np.linalg.svd(x, compute_uv=False), N, N)
    errs = [abs(empirical_d(z, spec) - mp_d_transform(z, FULL)) for z in (2.5, 3.0)]
    FD_FAILURES.clear()
    try:
        _fd_property()
        fd_ok = True
    except AssertionError:
        fd_ok = False
    cases = len(FD_FAILURES)
    ok = max(errs) < 0.01 and fd_ok and cases >= 1000
    criterion(7, "|D_hat - D_MP| < 0.01 at z in {2.5, 3}; D_hat' matches finite differences (>= 1000 cases)", ok,
              f"max err={max(errs):.2e}, cases={cases}")


def test_c08_relmse_accuracy(criterion):
    cfg = ExperimentConfig("relmse-accuracy", n=N, m=N, trials=100, seed=8, grid=[2.0, 4.0, 8.0])
    gaps = []
    for trials in simulate_trials(cfg):
        est = column(trials, "relmse-estimate", 1).mean()
        emp = column(trials, "optshrink", 1).mean()
        gaps.append(abs(est - emp))
    ok = max(gaps) < 0.05
    criterion(8, "|relMSE_hat - empirical SE/||S||^2| < 0.05 at theta in {2, 4, 8}", ok,
              f"gaps={np.round(gaps, 4).tolist()}")


def _brute_force(signal, factors, r_hat):
    target = signal.matrix().ravel()
    best_obj, best_w = np.inf, None
    for support in combinations(range(factors.q), r_hat):
        atoms = np.column_stack([factors.component(i).ravel() for i in support])
        coef, resid = nnls(atoms, target)
        if resid**2 < best_obj - 1e-12:
            best_obj = resid**2
            best_w = np.zeros(factors.q)
            best_w[list(support)] = coef
    return best_obj, best_w


def test_c09_rank_regularized_brute_force(criterion):
    rng = np.random.default_rng(9)
    mismatches = 0
    for _ in range(100):
        r = int(rng.integers(1, 4))
        thetas = np.sort(rng.uniform(0.5, 3, r))[::-1]
        m = 6 + int(rng.integers(0, 3))
        signal = SignalSpec.random(thetas, 6, m, rng)
        factors = SvdFactors(
            np.sort(rng.uniform(0, 3, 6))[::-1], sample_orthonormal_frame(6, 6, rng), sample_orthonormal_frame(m, 6, rng)
        )
        diag = oracle_diagonal(signal, factors)
        for r_hat in (1, 2, 3):
            w = rank_regularized_weights(diag, r_hat).weights
            obj, w_ref = _brute_force(signal, factors, r_hat)
            same_support = np.array_equal(w > 1e-12, w_ref > 1e-12)
            same_value = np.allclose(w, w_ref, atol=1e-9)
            same_obj = np.isclose(exact_squared_error(signal, factors, w, diag), obj, rtol=1e-9, atol=1e-12)
            mismatches += not (same_support and same_value and same_obj)
    criterion(9, "rank-regularized oracle equals exhaustive sparse-support minimization (q=6, 300 cases)",
              mismatches == 0, f"mismatches={mismatches}")


def test_c10_svt_suboptimality(criterion):
    cfg = ExperimentConfig("svt-compare", n=N, m=N, trials=50, seed=10, grid=[3.0], lambdas=[1.0, 2.0])
    trials = simulate_trials(cfg)[0]
    opt = column(trials, "optshrink", 1).mean()
    svt1 = column(trials, "svt-1", 1).mean()
    svt2 = column(trials, "svt-2", 1).mean()

    # asymptotic excess-error law for lambda = 2 across a theta grid
    thetas = np.linspace(1.05, 30, 600)
    identity_ok = True
    normalized_gap = []
    for t in thetas:
        pred = predict_spike(t, FULL)
        w_svt = max(pred.rho - 2.0, 0.0)
        excess = limiting_mse([t], [w_svt], FULL) - limiting_mse([t], [pred.w_opt_limit], FULL)
        quad = (w_svt - pred.w_opt_limit) ** 2
        identity_ok &= abs(excess - quad) <= 1e-8 * max(abs(quad), 1e-300) + 1e-14
        normalized_gap.append(quad / t**2)
    peak = thetas[int(np.argmax(normalized_gap))]
    moderate = 1.5 < peak < 3.0 and normalized_gap[-1] < 0.5 * max(normalized_gap)

    ok = opt < svt1 and opt < svt2 and identity_ok and moderate
    criterion(10, "theta=3: SE(OptShrink) < SE(SVT, lambda=1, 2); excess law exact, gap peaks at moderate theta", ok,
              f"opt={opt:.4f}, svt1={svt1:.3f}, svt2={svt2:.4f}, peak theta={peak:.2f}")
