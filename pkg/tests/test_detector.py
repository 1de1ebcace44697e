import itertools

import numpy as np
import pytest

from rabitrace.atom import EXCITED, GROUND, AtomState, SystemParams, evolve_me
from rabitrace.detector import (
    EPSILON_FLOOR_FRACTION,
    DetectorParams,
    OstensibleRate,
    SupersystemState,
    default_ostensible_rate,
    ideal_step_matrices,
    linear_step_ideal,
    linear_step_realistic,
    ostensible_rate,
    realistic_step_matrices,
    supersystem_generators,
    total_state,
)

OM_GRID = (1.0, 4.0)


def enumerate_ideal(omega, dt, k, eta=1.0, eps=None, start=GROUND):
    """Sum Lambda(record) * state over all 2^k records."""
    params = SystemParams(omega)
    eps = eps or ostensible_rate(omega, 1.0, 1.0)
    total_prob = 0.0
    mean = np.zeros(4)
    for bits in itertools.product((0, 1), repeat=k):
        rho = start
        lam = 1.0
        for b in bits:
            rho = linear_step_ideal(rho, params, eta, eps, b, dt)
            lam *= eps.epsilon * dt if b else 1.0 - eps.epsilon * dt
        total_prob += lam * rho.n
        mean += lam * rho.as_array()
    return total_prob, mean


def enumerate_realistic(omega, det, dt, k, eps=None):
    params = SystemParams(omega)
    eps = eps or ostensible_rate(omega, 1.0, det.eta)
    n_dd = int(round(det.tau_dd / dt))
    total_prob = 0.0
    mean = np.zeros(4)
    for bits in itertools.product((0, 1), repeat=k):
        s = SupersystemState.ready(GROUND)
        for i, b in enumerate(bits):
            delayed = bits[i - n_dd] if i - n_dd >= 0 else 0
            s = linear_step_realistic(s, params, det, eps, b, delayed, dt)
        lam = np.prod([eps.epsilon * dt if b else 1.0 - eps.epsilon * dt for b in bits])
        total_prob += lam * s.total_trace
        mean += lam * s.total().as_array()
    return total_prob, mean


class TestOstensibleRate:
    def test_value_at_four(self):
        assert ostensible_rate(4.0, 1.0, 1.0).epsilon == pytest.approx(16.0 / 33.0, rel=1e-14)

    def test_large_drive_asymptote(self):
        assert ostensible_rate(1e7, 1.0, 1.0).epsilon == pytest.approx(0.5, abs=1e-12)

    def test_linear_in_eta(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            om = rng.uniform(0.5, 20)
            assert ostensible_rate(om, 1.0, 0.5).epsilon == pytest.approx(
                0.5 * ostensible_rate(om, 1.0, 1.0).epsilon, rel=1e-14
            )

    def test_zero_rejected_and_floor(self):
        with pytest.raises(ValueError):
            ostensible_rate(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            ostensible_rate(3.0, 1.0, 0.0)
        assert default_ostensible_rate(0.0, 2.0, 1.0).epsilon == EPSILON_FLOOR_FRACTION * 2.0
        assert default_ostensible_rate(4.0, 1.0, 1.0).epsilon == pytest.approx(16.0 / 33.0)


class TestLinearStepIdeal:
    def test_click_resets_to_ground(self):
        eps = ostensible_rate(3.0, 1.0, 1.0)
        for start in (EXCITED, AtomState(1.0, 0.0, 0.5, 0.2)):
            out = linear_step_ideal(start, SystemParams(3.0), 1.0, eps, 1, 1e-4)
            norm = out.normalized()
            assert norm.z == pytest.approx(-1.0, abs=1e-3)
            assert abs(norm.y) < 1e-3

    def test_click_from_ground_nearly_impossible(self):
        # within-bin excite-and-emit paths leave O(dt^3) weight
        dt = 1e-4
        eps = ostensible_rate(4.0, 1.0, 1.0)
        out = linear_step_ideal(GROUND, SystemParams(4.0), 1.0, eps, 1, dt)
        bound = 4.0**2 * dt**3  # ~ omega^2 gamma dt^3
        assert 0.0 <= out.n * eps.epsilon * dt < bound

    def test_eps_dt_guard(self):
        with pytest.raises(ValueError):
            linear_step_ideal(GROUND, SystemParams(3.0), 1.0, OstensibleRate(5.0), 0, 0.5)

    @pytest.mark.parametrize("omega", OM_GRID)
    def test_enumeration_completeness_and_me(self, omega):
        dt, k = 0.05, 10
        total_prob, mean = enumerate_ideal(omega, dt, k)
        assert total_prob == pytest.approx(1.0, abs=1e-8)
        _, states = evolve_me(GROUND, SystemParams(omega), 1e-4, k * dt)
        assert np.abs(mean - states[-1]).max() < 1e-6

    def test_enumeration_inefficient(self):
        total_prob, mean = enumerate_ideal(2.0, 0.05, 8, eta=0.6,
                                           eps=ostensible_rate(2.0, 1.0, 0.6))
        assert total_prob == pytest.approx(1.0, abs=1e-8)
        _, states = evolve_me(GROUND, SystemParams(2.0), 1e-4, 0.4)
        assert np.abs(mean - states[-1]).max() < 1e-6


class TestLinearStepRealistic:
    DET = DetectorParams(eta=1.0, gamma_r=7.0, gamma_dk=0.0, tau_dd=0.0)

    def test_no_feed_keeps_avalanching_empty(self):
        det = DetectorParams(eta=0.0, gamma_r=7.0, gamma_dk=0.0)
        eps = OstensibleRate(0.05)
        s = SupersystemState.ready(GROUND)
        for _ in range(200):
            s = linear_step_realistic(s, SystemParams(3.0), det, eps, 0, 0, 1e-3)
        assert s.rho1.n == 0.0
        assert s.rho2.n == 0.0

    def test_single_step_trace_identity(self):
        # Lambda-weighted one-step sum preserves the total trace exactly,
        # and the no-click trace drop is the avalanche weight gamma_r*Tr[rho1]*dt
        det = self.DET
        params = SystemParams(2.0)
        eps = OstensibleRate(0.3)
        dt = 1e-3
        rng = np.random.default_rng(4)
        v = rng.uniform(0.1, 0.5, size=12)
        v[1::4] = 0.0  # x components zero
        s = SupersystemState.from_vector(v)
        s0 = linear_step_realistic(s, params, det, eps, 0, 0, dt)
        s1 = linear_step_realistic(s, params, det, eps, 1, 0, dt)
        lam0, lam1 = 1.0 - eps.epsilon * dt, eps.epsilon * dt
        assert lam0 * s0.total_trace + lam1 * s1.total_trace == pytest.approx(
            s.total_trace, rel=1e-12
        )
        drop = s.total_trace - lam0 * s0.total_trace
        assert drop == pytest.approx(det.gamma_r * s.rho1.n * dt, rel=2e-2)

    def test_trace_growth_under_no_click_record(self):
        # eta=0, gamma_dk=0, omega=0: the only trace change is the ostensible
        # division, compounding as (1 - eps dt)^-k -> e^{eps t}
        det = DetectorParams(eta=0.0, gamma_r=7.0)
        eps = OstensibleRate(0.2)
        dt, k = 1e-3, 500
        s = SupersystemState.ready(GROUND)
        for _ in range(k):
            s = linear_step_realistic(s, SystemParams(0.0), det, eps, 0, 0, dt)
        expected = (1.0 - eps.epsilon * dt) ** (-k)
        assert s.total_trace == pytest.approx(expected, rel=1e-12)
        assert s.total_trace == pytest.approx(np.exp(eps.epsilon * dt * k), rel=1e-3)

    @pytest.mark.parametrize("omega", OM_GRID)
    def test_enumeration_completeness_and_me(self, omega):
        dt, k = 0.05, 8
        total_prob, mean = enumerate_realistic(omega, self.DET, dt, k)
        assert total_prob == pytest.approx(1.0, abs=1e-8)
        _, states = evolve_me(GROUND, SystemParams(omega), 1e-4, k * dt)
        assert np.abs(mean - states[-1]).max() < 1e-6

    def test_enumeration_with_dead_time_and_darks(self):
        # records with clicks inside the dead window must carry zero weight
        det = DetectorParams(eta=0.8, gamma_r=5.0, gamma_dk=0.3, tau_dd=0.1)
        total_prob, mean = enumerate_realistic(2.0, det, 0.05, 8,
                                               eps=OstensibleRate(0.3))
        assert total_prob == pytest.approx(1.0, abs=1e-8)
        _, states = evolve_me(GROUND, SystemParams(2.0), 1e-4, 0.4)
        assert np.abs(mean - states[-1]).max() < 1e-6

    def test_eps_invariance_of_ratios(self):
        # fixed record: likelihood ratios between drives must not move with eps
        det = self.DET
        rng = np.random.default_rng(5)
        bits = (rng.random(40) < 0.2).astype(int)
        ratios = []
        for eps_val in (0.2, 0.4):
            eps = OstensibleRate(eps_val)
            traces = []
            for om in (2.0, 5.0):
                s = SupersystemState.ready(GROUND)
                for b in bits:
                    s = linear_step_realistic(s, SystemParams(om), det, eps, b, b, 0.01)
                traces.append(s.total_trace)
            ratios.append(traces[0] / traces[1])
        assert ratios[0] == pytest.approx(ratios[1], abs=1e-9)


class TestSupersystem:
    def test_total_state_sums(self):
        g = GROUND
        s = SupersystemState.ready(g)
        assert total_state(s) == g
        third = AtomState(1 / 3, 0.0, 0.0, -1 / 3)
        s3 = SupersystemState(third, third, third)
        assert total_state(s3).normalized() == AtomState(1.0, 0.0, 0.0, -1.0)
        assert s3.total_trace == pytest.approx(1.0)

    def test_generators_trace_structure(self):
        # G_total preserves the summed trace; G_noclick leaks gamma_r * Tr[rho1]
        det = DetectorParams(eta=0.7, gamma_r=4.0, gamma_dk=0.2)
        G0, Gt = supersystem_generators(SystemParams(3.0), det)
        ell = np.zeros(12)
        ell[[0, 4, 8]] = 1.0  # total-trace functional
        assert np.abs(ell @ Gt).max() == 0.0
        leak = ell @ G0
        expect = np.zeros(12)
        expect[4] = -det.gamma_r
        assert leak == pytest.approx(expect, abs=1e-14)

    def test_detector_params_validation(self):
        with pytest.raises(ValueError):
            DetectorParams(eta=1.5)
        with pytest.raises(ValueError):
            DetectorParams(gamma_r=0.0)
        with pytest.raises(ValueError):
            DetectorParams(gamma_dk=-1.0)
        with pytest.raises(ValueError):
            DetectorParams(tau_dd=-0.1)

    def test_step_matrices_cached_and_consistent(self):
        a = ideal_step_matrices(SystemParams(2.0), 1.0, 1e-3)
        b = ideal_step_matrices(SystemParams(2.0), 1.0, 1e-3)
        assert a[0] is b[0]
        M0, M1 = realistic_step_matrices(SystemParams(2.0), DetectorParams(gamma_r=7.0), 1e-3)
        assert M0.shape == M1.shape == (12, 12)
