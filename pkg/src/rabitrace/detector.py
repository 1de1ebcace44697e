"""Avalanche-photodiode model and linear conditional evolution of atom + detector.

A realistic photon counter is a classical three-state machine riding on the
atom: ready (0), avalanching (1, a photon was absorbed or a dark count fired
and the charge avalanche is maturing at rate gamma_r), and resetting (2, dead
for a fixed tau_dd after the avalanche registers). The observer's knowledge is
a triple of unnormalised atom states (rho0, rho1, rho2), one per detector
microstate; their summed trace carries the record likelihood.

Discretisation. The record is binned on a fixed grid dt; each bin yields one
bit (avalanche registered / not). The pair of conditional maps for a bin is an
exact split of the exact bin propagator:

    M_noclick = expm(dt * G_noclick)
    M_click   = expm(dt * G_total) - M_noclick

where G_total adds the avalanche transfer (rate gamma_r, microstate 1 -> 2) to
the no-click generator. Summed over the two outcomes the maps reproduce
expm(dt * G_total) identically, so enumerating all records reproduces the
master equation and total probability exactly (to rounding); each map agrees
with the first-order Ito increments to O(dt). Ostensible weighting divides the
outcome maps by Lambda(0) = 1 - eps*dt and Lambda(1) = eps*dt exactly, which
keeps likelihood ratios between candidate drives strictly independent of eps.

The dead-time return (resetting -> ready) is driven by the record bit from
tau_dd earlier and is applied at the end of the bin; with tau_dd = 0 that is
the current bin's bit, so avalanche weight lands back in the ready component
immediately. On a click bin the resetting component is conditioned away
(an avalanche cannot fire while the detector is dead or ready), so records
with avalanches inside a dead window carry exactly zero weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .atom import AtomState, SystemParams, _jump_matrix, _lindblad_matrix

__all__ = [
    "DetectorParams",
    "SupersystemState",
    "OstensibleRate",
    "ostensible_rate",
    "default_ostensible_rate",
    "no_click_generator_ideal",
    "supersystem_generators",
    "ideal_step_matrices",
    "realistic_step_matrices",
    "linear_step_ideal",
    "linear_step_realistic",
    "total_state",
    "EPSILON_FLOOR_FRACTION",
]

# Fallback ostensible rate (in units of gamma) when the steady-state flux
# vanishes; any positive value is valid, this one keeps norms well scaled.
EPSILON_FLOOR_FRACTION = 0.05


@dataclass(frozen=True)
class DetectorParams:
    """Avalanche photodiode parameters.

    eta: quantum efficiency in [0, 1]; gamma_r: avalanche maturation rate
    (detector bandwidth); gamma_dk: dark-count rate; tau_dd: dead time.
    """

    eta: float = 1.0
    gamma_r: float = 7.0
    gamma_dk: float = 0.0
    tau_dd: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.eta <= 1.0):
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not (self.gamma_r > 0.0 and np.isfinite(self.gamma_r)):
            raise ValueError(f"gamma_r must be positive and finite, got {self.gamma_r}")
        if self.gamma_dk < 0.0:
            raise ValueError(f"gamma_dk must be non-negative, got {self.gamma_dk}")
        if self.tau_dd < 0.0:
            raise ValueError(f"tau_dd must be non-negative, got {self.tau_dd}")


@dataclass(frozen=True)
class SupersystemState:
    """Unnormalised atom states conditioned on the detector microstate."""

    rho0: AtomState
    rho1: AtomState
    rho2: AtomState

    @property
    def total_trace(self) -> float:
        return self.rho0.n + self.rho1.n + self.rho2.n

    def total(self) -> AtomState:
        return AtomState(
            self.rho0.n + self.rho1.n + self.rho2.n,
            self.rho0.x + self.rho1.x + self.rho2.x,
            self.rho0.y + self.rho1.y + self.rho2.y,
            self.rho0.z + self.rho1.z + self.rho2.z,
        )

    def as_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.rho0.as_array(), self.rho1.as_array(), self.rho2.as_array()]
        )

    @staticmethod
    def from_vector(v: np.ndarray) -> "SupersystemState":
        return SupersystemState(
            AtomState.from_array(v[0:4]),
            AtomState.from_array(v[4:8]),
            AtomState.from_array(v[8:12]),
        )

    @staticmethod
    def ready(atom: AtomState) -> "SupersystemState":
        """All weight in the ready microstate."""
        zero = AtomState(0.0, 0.0, 0.0, 0.0)
        return SupersystemState(atom, zero, zero)


def total_state(s: SupersystemState) -> AtomState:
    """Component-wise sum over detector microstates."""
    return s.total()


@dataclass(frozen=True)
class OstensibleRate:
    """Reference click rate eps defining ostensible probabilities
    Lambda(1) = eps*dt, Lambda(0) = 1 - eps*dt."""

    epsilon: float

    def __post_init__(self) -> None:
        if not (self.epsilon > 0.0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")


def ostensible_rate(omega_true: float, gamma: float, eta: float) -> OstensibleRate:
    """Steady-state detection rate eta*gamma*omega^2 / (2 omega^2 + gamma^2).

    Raises ValueError when the result is zero (omega_true = 0 or eta = 0),
    since a vanishing Lambda(1) breaks the linear-trajectory bookkeeping;
    use default_ostensible_rate to substitute a floor in that case.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    eps = eta * gamma * omega_true**2 / (2.0 * omega_true**2 + gamma**2)
    if eps == 0.0:
        raise ValueError(
            "ostensible rate is zero (omega_true = 0 or eta = 0); "
            "substitute a positive floor value"
        )
    return OstensibleRate(eps)


def default_ostensible_rate(omega_true: float, gamma: float, eta: float) -> OstensibleRate:
    """ostensible_rate with a floor of EPSILON_FLOOR_FRACTION * gamma.

    The floor only conditions the numerics; results do not depend on eps.
    """
    try:
        return ostensible_rate(omega_true, gamma, eta)
    except ValueError:
        return OstensibleRate(EPSILON_FLOOR_FRACTION * gamma)


def no_click_generator_ideal(params: SystemParams, eta: float) -> np.ndarray:
    """Generator of the no-detection evolution, L - eta*gamma*J."""
    return _lindblad_matrix(params.omega, params.gamma) - eta * _jump_matrix(params.gamma)


def supersystem_generators(
    params: SystemParams, det: DetectorParams
) -> tuple[np.ndarray, np.ndarray]:
    """(G_noclick, G_total) 12x12 generators on the stacked (rho0, rho1, rho2).

    rho0 evolves under L - eta*gamma*J - gamma_dk and feeds rho1 through
    eta*gamma*J + gamma_dk; rho1 evolves under L - gamma_r; rho2 under plain L.
    G_total adds the avalanche transfer gamma_r * (rho1 -> rho2), so it is
    trace preserving while G_noclick leaks exactly the avalanche weight.
    """
    L = _lindblad_matrix(params.omega, params.gamma)
    J = _jump_matrix(params.gamma)
    I4 = np.eye(4)
    feed = det.eta * J + det.gamma_dk * I4
    G0 = np.zeros((12, 12))
    G0[0:4, 0:4] = L - feed
    G0[4:8, 4:8] = L - det.gamma_r * I4
    G0[4:8, 0:4] = feed
    G0[8:12, 8:12] = L
    G_total = G0.copy()
    G_total[8:12, 4:8] += det.gamma_r * I4
    return G0, G_total


@lru_cache(maxsize=None)
def _ideal_step_matrices_cached(
    omega: float, gamma: float, eta: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    L = _lindblad_matrix(omega, gamma)
    N = expm((L - eta * _jump_matrix(gamma)) * dt)
    M1 = expm(L * dt) - N
    return N, M1


def ideal_step_matrices(
    params: SystemParams, eta: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """(no-click, click) conditional maps for one bin of ideal detection."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return _ideal_step_matrices_cached(params.omega, params.gamma, eta, dt)


@lru_cache(maxsize=None)
def _realistic_step_matrices_cached(
    omega: float, gamma: float, eta: float, gamma_r: float, gamma_dk: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    det = DetectorParams(eta=eta, gamma_r=gamma_r, gamma_dk=gamma_dk)
    G0, G_total = supersystem_generators(SystemParams(omega, gamma), det)
    N = expm(G0 * dt)
    M1 = expm(G_total * dt) - N
    return N, M1


def realistic_step_matrices(
    params: SystemParams, det: DetectorParams, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """(no-click, click) conditional maps for one bin of the supersystem."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return _realistic_step_matrices_cached(
        params.omega, params.gamma, det.eta, det.gamma_r, det.gamma_dk, dt
    )


def _check_eps_dt(eps: OstensibleRate, dt: float) -> None:
    if eps.epsilon * dt >= 1.0:
        raise ValueError(
            f"eps*dt = {eps.epsilon * dt} >= 1; Lambda(0) would be non-positive"
        )


def linear_step_ideal(
    rho: AtomState,
    params: SystemParams,
    eta: float,
    eps: OstensibleRate,
    dN_now: int,
    dt: float,
) -> AtomState:
    """One ostensibly-weighted bin of ideal (possibly inefficient) detection.

    dN_now = 0 applies the no-detection map over Lambda(0); dN_now = 1 applies
    the detection map over Lambda(1), taking the atom to the ground state up
    to O(dt) corrections.
    """
    _check_eps_dt(eps, dt)
    M0, M1 = ideal_step_matrices(params, eta, dt)
    v = rho.as_array()
    if dN_now:
        out = (M1 @ v) / (eps.epsilon * dt)
    else:
        out = (M0 @ v) / (1.0 - eps.epsilon * dt)
    return AtomState.from_array(out)


def linear_step_realistic(
    s: SupersystemState,
    params: SystemParams,
    det: DetectorParams,
    eps: OstensibleRate,
    dN_now: int,
    dN_delayed: int,
    dt: float,
) -> SupersystemState:
    """One ostensibly-weighted bin of the atom + detector supersystem.

    dN_now is the record bit for this bin; dN_delayed the bit from tau_dd
    earlier (0 before the record starts). On dN_delayed = 1 the resetting
    component returns to ready at the end of the bin.
    """
    _check_eps_dt(eps, dt)
    M0, M1 = realistic_step_matrices(params, det, dt)
    v = s.as_vector()
    if dN_now:
        out = (M1 @ v) / (eps.epsilon * dt)
    else:
        out = (M0 @ v) / (1.0 - eps.epsilon * dt)
    if dN_delayed:
        out[0:4] += out[8:12]
        out[8:12] = 0.0
    return SupersystemState.from_vector(out)
