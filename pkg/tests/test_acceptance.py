"""Acceptance suite.

Each test exercises one end-to-end criterion at its stated tolerance and
prints a single PASS/FAIL line (run with -s to see them). The expensive
shared artifacts (long records, ensembles) are module-scoped fixtures.
"""

import itertools

import numpy as np
import pytest
from scipy.integrate import trapezoid

from rabitrace.atom import GROUND, SystemParams, evolve_me
from rabitrace.detector import (
    DetectorParams,
    OstensibleRate,
    SupersystemState,
    linear_step_ideal,
    linear_step_realistic,
    ostensible_rate,
)
from rabitrace.estimator import (
    TrajectoryBank,
    build_grid,
    info_gain_ensemble,
)
from rabitrace.records import (
    derive_seed,
    simulate_avalanche_record,
    simulate_ideal_record,
)
from rabitrace.waiting_times import (
    avalanche_initial_state,
    first_ideal_zero,
    ideal_wtd,
    realistic_wtd,
)


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def bin_averaged(curve_fn, edges: np.ndarray, points_per_bin: int = 200) -> np.ndarray:
    out = np.empty(edges.size - 1)
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        fine = np.linspace(a, b, points_per_bin)
        out[i] = trapezoid(curve_fn(fine), fine) / (b - a)
    return out


# --------------------------------------------------------------------------
# record-enumeration oracles
# --------------------------------------------------------------------------

@pytest.mark.parametrize("omega", [1.0, 4.0])
def test_enumeration_ideal(omega):
    dt, k = 0.05, 10
    params = SystemParams(omega)
    eps = ostensible_rate(omega, 1.0, 1.0)
    total_prob = 0.0
    mean = np.zeros(4)
    for bits in itertools.product((0, 1), repeat=k):
        rho = GROUND
        lam = 1.0
        for b in bits:
            rho = linear_step_ideal(rho, params, 1.0, eps, b, dt)
            lam *= eps.epsilon * dt if b else 1.0 - eps.epsilon * dt
        total_prob += lam * rho.n
        mean += lam * rho.as_array()
    _, states = evolve_me(GROUND, params, 1e-4, k * dt)
    prob_err = abs(total_prob - 1.0)
    state_err = np.abs(mean - states[-1]).max()
    report(
        f"enumeration-ideal omega={omega}",
        prob_err <= 1e-8 and state_err <= 1e-3,
        f"completeness err {prob_err:.2e} (tol 1e-8), state err {state_err:.2e} (tol 1e-3)",
    )


@pytest.mark.parametrize("omega", [1.0, 4.0])
def test_enumeration_realistic(omega):
    dt, k = 0.05, 8
    det = DetectorParams(eta=1.0, gamma_r=7.0, gamma_dk=0.0, tau_dd=0.0)
    params = SystemParams(omega)
    eps = ostensible_rate(omega, 1.0, 1.0)
    total_prob = 0.0
    mean = np.zeros(4)
    for bits in itertools.product((0, 1), repeat=k):
        s = SupersystemState.ready(GROUND)
        lam = 1.0
        for b in bits:
            s = linear_step_realistic(s, params, det, eps, b, b, dt)
            lam *= eps.epsilon * dt if b else 1.0 - eps.epsilon * dt
        total_prob += lam * s.total_trace
        mean += lam * s.total().as_array()
    _, states = evolve_me(GROUND, params, 1e-4, k * dt)
    prob_err = abs(total_prob - 1.0)
    state_err = np.abs(mean - states[-1]).max()
    report(
        f"enumeration-realistic omega={omega}",
        prob_err <= 1e-8 and state_err <= 1e-3,
        f"completeness err {prob_err:.2e} (tol 1e-8), state err {state_err:.2e} (tol 1e-3)",
    )


# --------------------------------------------------------------------------
# steady-state flux
# --------------------------------------------------------------------------

def test_steady_state_flux():
    params = SystemParams(4.0)
    target = 16.0 / 33.0
    duration = 2.2e5  # ~1.07e5 detections at flux 16/33
    record, _ = simulate_ideal_record(params, duration, dt=1e-3, seed=101)
    assert record.n_events >= 1e5
    rate = record.n_events / record.duration
    rel = abs(rate - target) / target
    report(
        "steady-state-flux",
        rel <= 0.02,
        f"{record.n_events} detections, rate {rate:.5f} vs 16/33 = {target:.5f}, rel err {rel:.3%} (tol 2%)",
    )


# --------------------------------------------------------------------------
# waiting times
# --------------------------------------------------------------------------

BIN_WIDTH = 0.2
TAU_MAX = 5.0


def wait_histogram(waits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    edges = np.arange(0.0, TAU_MAX + BIN_WIDTH, BIN_WIDTH)
    hist, _ = np.histogram(waits, bins=edges)
    return edges, hist / (waits.size * BIN_WIDTH)


def test_ideal_waiting_time():
    omega = 5.0
    record, _ = simulate_ideal_record(SystemParams(omega), 2.2e5, dt=1e-3, seed=102)
    waits = (np.diff(record.steps) * record.dt)[:100_000]
    assert waits.size == 100_000
    edges, dens = wait_histogram(waits)
    expected = bin_averaged(lambda t: ideal_wtd(omega, 1.0, t), edges)
    peak = ideal_wtd(omega, 1.0, np.linspace(0, TAU_MAX, 20001)).max()
    maxdev = np.abs(dens - expected).max()
    tau_zero = first_ideal_zero(omega)
    window = (edges[:-1] >= 0.8) & (edges[:-1] <= 2.0)
    centers = edges[:-1] + BIN_WIDTH / 2
    min_center = centers[window][np.argmin(dens[window])]
    zero_ok = abs(min_center - tau_zero) <= BIN_WIDTH
    report(
        "ideal-waiting-time",
        maxdev <= 0.03 * peak and zero_ok,
        f"max dev {maxdev / peak:.2%} of peak (tol 3%), first zero {tau_zero:.3f} "
        f"vs min bin centre {min_center:.3f} (tol one bin of {BIN_WIDTH})",
    )


@pytest.fixture(scope="module")
def realistic_curves():
    det = DetectorParams(eta=1.0, gamma_r=7.0)
    tau = np.linspace(0.0, TAU_MAX, 20001)
    return det, tau, {om: realistic_wtd(om, det, tau) for om in (5.0, 10.0, 20.0)}


def test_realistic_waiting_time(realistic_curves):
    det, tau, curves = realistic_curves
    record, _ = simulate_ideal_record(SystemParams(5.0), 2.4e5, dt=1e-3, seed=103)
    avalanche = simulate_avalanche_record(record, det, seed=104)
    waits = (np.diff(avalanche.steps) * avalanche.dt)[:100_000]
    assert waits.size == 100_000
    edges, dens = wait_histogram(waits)
    curve = curves[5.0]
    expected = bin_averaged(lambda t: np.interp(t, curve.tau, curve.density), edges)
    peak = curve.density.max()
    maxdev = np.abs(dens - expected).max()

    region = (tau > 0.3) & (tau < 4.0)
    min_density = curve.density[region].min()

    contrasts = []
    for om in (5.0, 10.0, 20.0):
        d = curves[om].density
        imax = int(np.argmax(d))
        imin = imax + int(np.argmin(d[imax : imax + 6000]))
        contrasts.append((d[imax] - d[imin]) / d[imax])
    monotone = contrasts[0] > contrasts[1] > contrasts[2]

    report(
        "realistic-waiting-time",
        maxdev <= 0.03 * peak and min_density > 0.0 and monotone,
        f"max dev {maxdev / peak:.2%} of peak (tol 3%), min density {min_density:.4f} (> 0), "
        f"contrasts {[round(c, 3) for c in contrasts]} decreasing",
    )


def test_avalanche_initial_state():
    y, z = avalanche_initial_state(4.0, 7.0)
    exact_err = max(abs(y - 8.0 / 19.0), abs(z + 15.0 / 19.0))

    horizon = 40.0 / 7.0
    times, states = evolve_me(GROUND, SystemParams(4.0), dt_step=1e-5, duration=horizon)
    weights = 7.0 * np.exp(-7.0 * times)
    quad_err = max(
        abs(trapezoid(weights * states[:, 2], times) - y),
        abs(trapezoid(weights * states[:, 3], times) - z),
    )
    report(
        "avalanche-initial-state",
        exact_err <= 1e-12 and quad_err <= 1e-6,
        f"(y, z) = (8/19, -15/19) err {exact_err:.1e} (tol 1e-12), "
        f"maturation-average quadrature err {quad_err:.1e} (tol 1e-6)",
    )


# --------------------------------------------------------------------------
# posterior behaviour at the reference operating point
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def posterior_runs():
    dt = 1e-4
    duration = 50.0
    grid = build_grid(10.0, 100)
    params = SystemParams(4.0)
    eps = ostensible_rate(4.0, 1.0, 1.0)
    results = []
    for seed in range(20):
        record, _ = simulate_ideal_record(
            params, duration, dt, derive_seed(seed, "ideal-record")
        )
        bank = TrajectoryBank(grid, dt=dt, eps=eps)
        bank.advance(record)
        results.append(bank.posterior())
    return grid, results


def test_posterior_concentration(posterior_runs):
    grid, results = posterior_runs
    window = (np.abs(grid.omegas) >= 3.5) & (np.abs(grid.omegas) <= 4.5)
    masses = np.array([snap.probabilities[window].sum() for snap in results])
    hits = int(np.sum(masses > 0.8))
    report(
        "posterior-concentration",
        hits >= 16,
        f"{hits}/20 seeded runs put > 0.8 posterior mass in |omega| in [3.5, 4.5] "
        f"(need >= 16); masses min/median {masses.min():.3f}/{np.median(masses):.3f}",
    )


def test_posterior_symmetry(posterior_runs):
    _, results = posterior_runs
    worst = max(
        np.abs(snap.probabilities - snap.probabilities[::-1]).max() for snap in results
    )
    report(
        "posterior-symmetry",
        worst == 0.0,
        f"max |P(omega) - P(-omega)| = {worst} over 20 runs (machine precision)",
    )


# --------------------------------------------------------------------------
# entropy scaling
# --------------------------------------------------------------------------

def test_entropy_scaling():
    worst = 0.0
    for om_max, n in ((5.0, 100), (10.0, 100), (10.0, 50)):
        a = build_grid(om_max, n).prior_entropy_bits()
        b = build_grid(2 * om_max, n).prior_entropy_bits()
        worst = max(worst, abs((b - a) - 1.0))
    report(
        "entropy-scaling",
        worst <= 1e-6,
        f"doubling omega_max shifts prior entropy by 1 bit, worst dev {worst:.2e} (tol 1e-6)",
    )


# --------------------------------------------------------------------------
# information-gain ordering (scaled ensembles)
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def gain_ensembles():
    det = DetectorParams(eta=1.0, gamma_r=7.0)
    common = dict(n_members=50, duration=10.0, dt=1e-4, n_nodes=50,
                  master_seed=2024, snapshot_every=0.5)
    out = {}
    for om_max in (5.0, 10.0, 20.0):
        out[om_max] = (
            info_gain_ensemble(om_max, **common),
            info_gain_ensemble(om_max, detector=det, **common),
        )
    return out


def test_info_gain_ordering(gain_ensembles):
    gaps = {}
    details = []
    ok = True
    for om_max, (ideal, realistic) in gain_ensembles.items():
        mi, si = ideal.mean_bits[-1], ideal.stderr_bits[-1]
        mr, sr = realistic.mean_bits[-1], realistic.stderr_bits[-1]
        gaps[om_max] = mi - mr
        ok &= mi >= mr
        details.append(
            f"omega_max={om_max:g}: ideal {mi:.3f}±{si:.3f} vs realistic {mr:.3f}±{sr:.3f}"
        )
    ok &= gaps[20.0] > gaps[5.0]
    report(
        "info-gain-ordering",
        ok,
        "; ".join(details)
        + f"; gap(20) = {gaps[20.0]:.3f} > gap(5) = {gaps[5.0]:.3f}",
    )


# --------------------------------------------------------------------------
# ostensible-rate invariance
# --------------------------------------------------------------------------

def test_eps_invariance():
    dt = 1e-3
    record, _ = simulate_ideal_record(SystemParams(4.0), 20.0, dt, seed=105)
    grid = build_grid(10.0, 40)
    posts = []
    for factor in (1.0, 2.0):
        eps = OstensibleRate(factor * ostensible_rate(4.0, 1.0, 1.0).epsilon)
        bank = TrajectoryBank(grid, dt=dt, eps=eps)
        bank.advance(record)
        posts.append(bank.posterior().probabilities)
    worst = np.abs(posts[0] - posts[1]).max()
    report(
        "eps-invariance",
        worst <= 1e-8,
        f"max per-node posterior shift between eps and 2*eps: {worst:.2e} (tol 1e-8)",
    )
