import numpy as np
import pytest

from rabitrace.atom import (
    EXCITED,
    GROUND,
    AtomState,
    PositivityError,
    SystemParams,
    apply_J,
    evolve_me,
    lindblad_generator,
    lindblad_rhs,
    me_propagator,
    steady_state,
    steady_state_flux,
)


def random_states(rng, count=50):
    """Valid random states with traces in (0, 2]."""
    out = []
    for _ in range(count):
        n = rng.uniform(0.05, 2.0)
        r = rng.uniform(0.0, n)
        v = rng.normal(size=3)
        v *= r / np.linalg.norm(v)
        out.append(AtomState(n, *v))
    return out


class TestLindbladRhs:
    def test_ground_is_fixed_point_undriven(self):
        d = lindblad_rhs(GROUND, SystemParams(0.0))
        assert d.as_array() == pytest.approx([0.0] * 4, abs=0.0)

    def test_excited_decays_at_gamma(self):
        d = lindblad_rhs(EXCITED, SystemParams(0.0, gamma=1.0))
        assert d.z == pytest.approx(-2.0)
        d2 = lindblad_rhs(EXCITED, SystemParams(0.0, gamma=3.0))
        assert d2.z == pytest.approx(-6.0)

    def test_trace_conserved_for_random_states(self):
        rng = np.random.default_rng(0)
        for state in random_states(rng):
            omega = rng.uniform(-8, 8)
            assert lindblad_rhs(state, SystemParams(omega)).n == 0.0

    def test_component_form(self):
        rng = np.random.default_rng(1)
        for state in random_states(rng, 20):
            om, g = rng.uniform(-5, 5), rng.uniform(0.3, 2.0)
            d = lindblad_rhs(state, SystemParams(om, g))
            assert d.x == pytest.approx(-g * state.x / 2)
            assert d.y == pytest.approx(-g * state.y / 2 - om * state.z)
            assert d.z == pytest.approx(om * state.y - g * (state.n + state.z))


class TestApplyJ:
    def test_excited_to_ground(self):
        out = apply_J(EXCITED)
        assert out == AtomState(1.0, 0.0, 0.0, -1.0)

    def test_ground_annihilated(self):
        out = apply_J(GROUND)
        assert out.n == 0.0 and out.z == 0.0

    def test_half_excited(self):
        out = apply_J(AtomState(1.0, 0.0, 0.3, 0.0))
        assert out.n == pytest.approx(0.5)
        assert out.z == pytest.approx(-0.5)
        assert out.x == out.y == 0.0


class TestEvolveMe:
    def test_undriven_ground_constant(self):
        _, states = evolve_me(GROUND, SystemParams(0.0), dt_step=1e-3, duration=5.0)
        assert np.abs(states - GROUND.as_array()).max() == 0.0

    def test_trace_exactly_conserved(self):
        start = AtomState(0.7, 0.1, -0.2, 0.3)
        _, states = evolve_me(start, SystemParams(4.0), dt_step=1e-3, duration=2.0)
        assert np.all(states[:, 0] == start.n)

    def test_long_run_reaches_steady_state(self):
        # z_ss = -gamma^2/(2 omega^2 + gamma^2) = -1/9 at omega=2
        _, states = evolve_me(GROUND, SystemParams(2.0), dt_step=1e-4, duration=40.0)
        assert states[-1, 3] == pytest.approx(-1.0 / 9.0, abs=1e-8)

    def test_rejects_bad_steps(self):
        with pytest.raises(ValueError):
            evolve_me(GROUND, SystemParams(1.0), dt_step=0.0, duration=1.0)
        with pytest.raises(ValueError):
            evolve_me(GROUND, SystemParams(1.0), dt_step=1e-3, duration=-1.0)

    def test_x_stays_zero_on_resonance(self):
        start = AtomState(1.0, 0.0, 0.4, -0.5)
        _, states = evolve_me(start, SystemParams(3.0), dt_step=1e-3, duration=3.0)
        assert np.abs(states[:, 1]).max() == 0.0

    def test_rk4_fourth_order_convergence(self):
        # against the exact propagator, halving dt shrinks the error ~16x
        params = SystemParams(3.0)
        exact = me_propagator(params, 1.0) @ GROUND.as_array()
        errs = []
        for dt in (0.02, 0.01):
            _, states = evolve_me(GROUND, params, dt_step=dt, duration=1.0)
            errs.append(np.abs(states[-1] - exact).max())
        ratio = errs[0] / errs[1]
        assert 12.0 < ratio < 20.0


class TestSteadyState:
    def test_undriven_is_ground(self):
        assert steady_state(SystemParams(0.0)) == GROUND

    def test_is_fixed_point(self):
        for om in (0.5, 2.0, 4.0, 17.0):
            ss = steady_state(SystemParams(om))
            resid = lindblad_rhs(ss, SystemParams(om)).as_array()
            assert np.abs(resid).max() < 1e-10

    def test_flux_value_and_asymptote(self):
        assert steady_state_flux(SystemParams(4.0)) == pytest.approx(16.0 / 33.0, rel=1e-14)
        assert steady_state_flux(SystemParams(1e6)) == pytest.approx(0.5, abs=1e-10)
        ss = steady_state(SystemParams(1e6))
        assert ss.excited_population == pytest.approx(0.5, abs=1e-10)


class TestValidation:
    def test_positivity_violation_raises(self):
        with pytest.raises(PositivityError):
            AtomState(1.0, 0.0, 0.0, -1.1).validate()
        with pytest.raises(PositivityError):
            AtomState(-0.5, 0.0, 0.0, 0.0).validate()

    def test_tolerance_honoured(self):
        AtomState(1.0, 0.0, 0.0, -(1.0 + 1e-10)).validate()  # inside 1e-9 band

    def test_purity(self):
        assert GROUND.purity() == 1.0
        assert AtomState(1.0).purity() == 0.5
        assert AtomState(2.0, 0.0, 0.0, -2.0).purity() == 1.0

    def test_params_validation(self):
        with pytest.raises(ValueError):
            SystemParams(np.inf)
        with pytest.raises(ValueError):
            SystemParams(1.0, gamma=0.0)

    def test_generator_matches_rhs(self):
        rng = np.random.default_rng(2)
        M = lindblad_generator(SystemParams(2.5, 1.3))
        for state in random_states(rng, 10):
            direct = lindblad_rhs(state, SystemParams(2.5, 1.3)).as_array()
            assert M @ state.as_array() == pytest.approx(direct, rel=1e-14)
