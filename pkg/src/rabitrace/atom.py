"""Two-level atom state and its resonance-fluorescence master equation.

The density operator is stored as four reals (n, x, y, z), meaning

    rho = (n*I + x*sigma_x + y*sigma_y + z*sigma_z) / 2

so ``n`` is the trace and (x, y, z) the trace-scaled Bloch vector. Every
generator in this package is linear in these components, which turns all
evolutions into small constant matrices acting on plain float vectors:
positivity is the single inequality x^2 + y^2 + z^2 <= n^2, and the trace
is conserved exactly because the generator's n-row is identically zero.

On resonance the drive couples only (y, z); an initially zero x stays zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

__all__ = [
    "AtomState",
    "SystemParams",
    "PositivityError",
    "GROUND",
    "EXCITED",
    "lindblad_rhs",
    "lindblad_generator",
    "jump_generator",
    "apply_J",
    "evolve_me",
    "me_propagator",
    "steady_state",
    "steady_state_flux",
]

# Relative Bloch-ball overshoot beyond which a state is rejected as unphysical.
POSITIVITY_TOL = 1e-9


class PositivityError(ValueError):
    """Raised when a state leaves the Bloch ball beyond numerical tolerance."""


@dataclass(frozen=True)
class AtomState:
    """Possibly unnormalised two-level state in (n, x, y, z) components."""

    n: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @property
    def trace(self) -> float:
        return self.n

    @property
    def excited_population(self) -> float:
        return 0.5 * (self.n + self.z)

    @property
    def bloch_norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def purity(self) -> float:
        """Purity of the trace-normalised state, (1 + |r|^2/n^2) / 2."""
        if self.n <= 0.0:
            raise ValueError("purity undefined for zero-trace state")
        return 0.5 * (1.0 + (self.x**2 + self.y**2 + self.z**2) / self.n**2)

    def normalized(self) -> "AtomState":
        if self.n <= 0.0:
            raise ValueError("cannot normalise a state with non-positive trace")
        return AtomState(1.0, self.x / self.n, self.y / self.n, self.z / self.n)

    def validate(self, tol: float = POSITIVITY_TOL) -> "AtomState":
        """Check n >= 0 and the Bloch inequality; raise PositivityError if broken."""
        if not np.isfinite([self.n, self.x, self.y, self.z]).all():
            raise PositivityError(f"non-finite state components: {self}")
        scale = max(self.n, 1.0)
        if self.n < -tol * scale:
            raise PositivityError(f"negative trace: n={self.n}")
        if self.bloch_norm > self.n + tol * scale:
            raise PositivityError(
                f"Bloch vector exceeds trace: |r|={self.bloch_norm}, n={self.n}"
            )
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.n, self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(v: np.ndarray) -> "AtomState":
        return AtomState(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


GROUND = AtomState(1.0, 0.0, 0.0, -1.0)
EXCITED = AtomState(1.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class SystemParams:
    """Drive strength and decay rate of the atom.

    ``omega`` is the Rabi frequency (may be negative, sign unobservable under
    photon counting); ``gamma`` the spontaneous emission rate, default 1 so
    times are measured in lifetimes.
    """

    omega: float
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.omega):
            raise ValueError(f"omega must be finite, got {self.omega}")
        if not (self.gamma > 0.0 and np.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")


@lru_cache(maxsize=None)
def _lindblad_matrix(omega: float, gamma: float) -> np.ndarray:
    return np.array(
        [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, -gamma / 2, 0.0, 0.0],
            [0.0, 0.0, -gamma / 2, -omega],
            [-gamma, 0.0, omega, -gamma],
        ]
    )


def lindblad_generator(params: SystemParams) -> np.ndarray:
    """4x4 matrix of the master-equation generator on (n, x, y, z).

    Component form (gamma = G):  dn/dt = 0, dx/dt = -G x/2,
    dy/dt = -G y/2 - omega z,  dz/dt = omega y - G (n + z).
    """
    return _lindblad_matrix(params.omega, params.gamma).copy()


@lru_cache(maxsize=None)
def _jump_matrix(gamma: float) -> np.ndarray:
    # sigma rho sigma^dag: new trace is the excited population, result is
    # proportional to the ground state.
    half = gamma / 2.0
    return np.array(
        [
            [half, 0.0, 0.0, half],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [-half, 0.0, 0.0, -half],
        ]
    )


def jump_generator(gamma: float = 1.0) -> np.ndarray:
    """4x4 matrix of gamma * J[sigma] on (n, x, y, z)."""
    return _jump_matrix(gamma).copy()


def lindblad_rhs(state: AtomState, params: SystemParams) -> AtomState:
    """Time derivative of the state under the master equation."""
    d = _lindblad_matrix(params.omega, params.gamma) @ state.as_array()
    return AtomState.from_array(d)


def apply_J(state: AtomState) -> AtomState:
    """Emission superoperator J[sigma]: rho -> sigma rho sigma^dag.

    Sends any state to a ground-state-proportional operator whose trace is
    the excited population (n + z)/2.
    """
    ne = state.excited_population
    return AtomState(ne, 0.0, 0.0, -ne)


@lru_cache(maxsize=None)
def _me_propagator_cached(omega: float, gamma: float, dt: float) -> np.ndarray:
    return expm(_lindblad_matrix(omega, gamma) * dt)


def me_propagator(params: SystemParams, dt: float) -> np.ndarray:
    """Exact one-step propagator expm(dt * L), cached per (params, dt)."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return _me_propagator_cached(params.omega, params.gamma, dt)


def _rk4_step(M: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    k1 = M @ v
    k2 = M @ (v + 0.5 * dt * k1)
    k3 = M @ (v + 0.5 * dt * k2)
    k4 = M @ (v + dt * k3)
    return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_me(
    state: AtomState,
    params: SystemParams,
    dt_step: float = 1e-4,
    duration: float = 1.0,
    store_every: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the master equation with fixed-step RK4.

    Returns (times, states) where states has one (n, x, y, z) row per stored
    time, including t=0 and the final time. The generator's n-row is zero, so
    the trace is conserved exactly at every step. Stored states are checked
    against the Bloch inequality and a violation raises PositivityError.
    """
    if dt_step <= 0.0:
        raise ValueError(f"dt_step must be positive, got {dt_step}")
    if duration < 0.0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    if store_every < 1:
        raise ValueError(f"store_every must be >= 1, got {store_every}")
    state.validate()
    n_steps = int(round(duration / dt_step))
    M = _lindblad_matrix(params.omega, params.gamma)
    v = state.as_array()
    times = [0.0]
    out = [v.copy()]
    for i in range(n_steps):
        v = _rk4_step(M, v, dt_step)
        if (i + 1) % store_every == 0 or i == n_steps - 1:
            AtomState.from_array(v).validate()
            times.append((i + 1) * dt_step)
            out.append(v.copy())
    return np.array(times), np.array(out)


def steady_state(params: SystemParams) -> AtomState:
    """Normalised fixed point of the master equation.

    x = 0, y = 2*omega*gamma / (2 omega^2 + gamma^2),
    z = -gamma^2 / (2 omega^2 + gamma^2).
    """
    om, g = params.omega, params.gamma
    denom = 2.0 * om**2 + g**2
    return AtomState(1.0, 0.0, 2.0 * om * g / denom, -(g**2) / denom)


def steady_state_flux(params: SystemParams) -> float:
    """Mean photon emission rate in steady state, gamma * omega^2 / (2 omega^2 + gamma^2)."""
    om, g = params.omega, params.gamma
    return g * om**2 / (2.0 * om**2 + g**2)
