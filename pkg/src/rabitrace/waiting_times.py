"""Waiting-time distributions between detections or avalanches.

For ideal photon counting of the resonantly driven atom, the delay density
between successive detections is

    w(tau) = Gamma * Omega^2 / (Omega^2 - (Gamma/2)^2)
             * exp(-Gamma tau / 2) * sin^2( sqrt(Omega^2 - (Gamma/2)^2) tau / 2 )

which vanishes at tau = 0 and at every multiple of 2*pi/sqrt(Omega^2 -
Gamma^2/4): right after a detection the atom is in the ground state and
cannot emit until the drive rotates it back up. (The overall Gamma makes the
density integrate to one for any Gamma; it is invisible in units Gamma = 1.)

For an avalanche photodiode the observable delays are avalanche-to-avalanche.
Marginally over the exponential maturation delay the post-avalanche atom
state is the maturation-averaged solution of the master equation started
from ground; from there the no-avalanche evolution of the atom + detector
pair closes on six real variables

    r = (y0~, z0~, P0~, y1~, z1~, P1~)

(microstate-resolved y, z and occupation probabilities), evolving linearly as
dr/dt = A r with constant A (Gamma = 1, no dark counts). The avalanche delay
density is gamma_r * P1~(tau). Internally the components are ordered
(y0, y1, z0, z1, P0, P1); the A matrix in that ordering coincides with the
no-click supersystem generator restricted to the x = 0, no-dark subspace.

A detector whose only flaw is inefficiency eta keeps the ground-state reset
at every (possibly missed) emission, so detections form a thinned renewal
process and the observed delay density is the geometric mixture of repeated
self-convolutions of the ideal density:

    w_eta(tau) = sum_{n>=0} eta (1-eta)^n  w^{*(n+1)}(tau).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .atom import SystemParams, me_propagator
from .detector import DetectorParams

__all__ = [
    "WaitingTimeCurve",
    "SixVector",
    "ideal_wtd",
    "ideal_wtd_curve",
    "first_ideal_zero",
    "avalanche_initial_state",
    "wtd_matrix",
    "realistic_wtd",
    "inefficient_wtd",
]

NEGATIVE_DENSITY_TOL = 1e-12


@dataclass(frozen=True)
class WaitingTimeCurve:
    """Delay density sampled on an increasing tau grid."""

    tau: np.ndarray
    density: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))
        object.__setattr__(self, "density", np.asarray(self.density, dtype=float))
        if self.tau.shape != self.density.shape:
            raise ValueError("tau and density must have equal shape")
        if self.tau.size and (self.tau[0] < 0.0 or np.any(np.diff(self.tau) <= 0)):
            raise ValueError("tau grid must be non-negative and increasing")

    def integral(self) -> float:
        from scipy.integrate import trapezoid

        return float(trapezoid(self.density, self.tau))


def _clip_density(density: np.ndarray) -> np.ndarray:
    low = density.min(initial=0.0)
    if low < -NEGATIVE_DENSITY_TOL:
        warnings.warn(
            f"waiting-time density dipped to {low:.3g}; clipping to zero",
            RuntimeWarning,
            stacklevel=3,
        )
    return np.clip(density, 0.0, None)


@dataclass(frozen=True)
class SixVector:
    """Detector-microstate-resolved atom components and occupations."""

    y0: float
    z0: float
    P0: float
    y1: float
    z1: float
    P1: float

    def as_internal(self) -> np.ndarray:
        return np.array([self.y0, self.y1, self.z0, self.z1, self.P0, self.P1])

    @staticmethod
    def from_internal(v: np.ndarray) -> "SixVector":
        return SixVector(y0=v[0], y1=v[1], z0=v[2], z1=v[3], P0=v[4], P1=v[5])


def ideal_wtd(omega: float, gamma: float, tau) -> np.ndarray:
    """Ideal inter-detection delay density, vectorised over tau.

    Valid for any omega: below the oscillatory threshold omega <= gamma/2 the
    sine continues analytically to a hyperbolic sine (overdamped regime, no
    zeros) and a RuntimeWarning flags it.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    tau = np.asarray(tau, dtype=float)
    q = omega**2 - (gamma / 2.0) ** 2
    if q <= 0.0:
        warnings.warn(
            f"overdamped regime omega = {omega} <= gamma/2: density has no zeros",
            RuntimeWarning,
            stacklevel=2,
        )
    if q > 0.0:
        kernel = np.sin(0.5 * math.sqrt(q) * tau) ** 2 / q
    elif q < 0.0:
        kernel = np.sinh(0.5 * math.sqrt(-q) * tau) ** 2 / (-q)
    else:
        kernel = (0.5 * tau) ** 2
    return gamma * omega**2 * np.exp(-gamma * tau / 2.0) * kernel


def first_ideal_zero(omega: float, gamma: float = 1.0) -> float:
    """First positive zero of the ideal delay density, 2*pi/sqrt(omega^2 - gamma^2/4)."""
    q = omega**2 - (gamma / 2.0) ** 2
    if q <= 0.0:
        raise ValueError("no zeros in the overdamped regime omega <= gamma/2")
    return 2.0 * math.pi / math.sqrt(q)


def ideal_wtd_curve(omega: float, gamma: float, tau_grid) -> WaitingTimeCurve:
    tau_grid = np.asarray(tau_grid, dtype=float)
    return WaitingTimeCurve(tau_grid, _clip_density(ideal_wtd(omega, gamma, tau_grid)))


def avalanche_initial_state(omega: float, gamma_r: float) -> tuple[float, float]:
    """Maturation-averaged post-avalanche atom state (y, z), with x = 0.

    Units gamma = 1 (rescale omega -> omega/gamma, gamma_r -> gamma_r/gamma
    for general decay rates). Closed form of the exponentially weighted time
    average of the master-equation solution started from the ground state:

        y = 2*omega*(1 + gamma_r) / D
        z = -(2*gamma_r + 1)*(1 + gamma_r) / D
        D = 1 + 3*gamma_r + 2*gamma_r^2 + 2*omega^2
    """
    if gamma_r <= 0.0:
        raise ValueError(f"gamma_r must be positive, got {gamma_r}")
    denom = 1.0 + 3.0 * gamma_r + 2.0 * gamma_r**2 + 2.0 * omega**2
    y = 2.0 * omega * (1.0 + gamma_r) / denom
    z = -(2.0 * gamma_r + 1.0) * (1.0 + gamma_r) / denom
    return y, z


def wtd_matrix(omega: float, gamma_r: float, eta: float) -> np.ndarray:
    """Constant generator A of the six no-avalanche variables.

    Component order (y0, y1, z0, z1, P0, P1); gamma = 1, dark counts excluded.
    """
    h = eta / 2.0
    return np.array(
        [
            [-0.5, 0.0, -omega, 0.0, 0.0, 0.0],
            [0.0, -0.5 - gamma_r, 0.0, -omega, 0.0, 0.0],
            [omega, 0.0, -1.0 + h, 0.0, -1.0 + h, 0.0],
            [0.0, omega, -h, -1.0 - gamma_r, -h, -1.0],
            [0.0, 0.0, -h, 0.0, -h, 0.0],
            [0.0, 0.0, h, 0.0, h, -gamma_r],
        ]
    )


def realistic_wtd(
    omega: float,
    det: DetectorParams,
    tau_grid,
    dt: float = 1e-4,
    method: str = "rk4",
) -> WaitingTimeCurve:
    """Avalanche-to-avalanche delay density for the realistic detector.

    Starts from the maturation-averaged post-avalanche state (advanced
    through the dead time with the plain master equation when tau_dd > 0),
    integrates dr/dt = A r, and returns gamma_r * P1~ on tau_grid (zero
    inside the dead window). Units gamma = 1; dark counts are rejected
    because the post-avalanche state is then no longer ground-rooted.

    method "rk4" is the fixed-step reference; "expm" steps with the exact
    matrix exponential (useful when gamma_r makes the system stiff).
    """
    if det.gamma_dk != 0.0:
        raise ValueError("realistic waiting time requires gamma_dk = 0")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if method not in ("rk4", "expm"):
        raise ValueError(f"unknown method {method!r}")
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.size == 0:
        return WaitingTimeCurve(tau_grid, np.empty(0))

    y0, z0 = avalanche_initial_state(omega, det.gamma_r)
    if det.tau_dd > 0.0:
        P = me_propagator(SystemParams(omega, 1.0), det.tau_dd)
        v = P @ np.array([1.0, 0.0, y0, z0])
        y0, z0 = v[2], v[3]

    A = wtd_matrix(omega, det.gamma_r, det.eta)
    r0 = np.array([y0, 0.0, z0, 0.0, 1.0, 0.0])
    horizon = max(float(tau_grid[-1]) - det.tau_dd, 0.0)
    n_steps = int(math.ceil(horizon / dt)) if horizon > 0.0 else 0
    if method == "rk4":
        path = _kernels.rk4_linear_trajectory(A, r0, dt, n_steps, 1)
    else:
        step = expm(A * dt)
        path = np.empty((n_steps + 1, 6))
        path[0] = r0
        for i in range(n_steps):
            path[i + 1] = step @ path[i]
    fine_tau = det.tau_dd + dt * np.arange(path.shape[0])
    fine_w = det.gamma_r * path[:, 5]
    density = np.interp(tau_grid, fine_tau, fine_w, left=0.0)
    density[tau_grid < det.tau_dd] = 0.0
    return WaitingTimeCurve(tau_grid, _clip_density(density))


SERIES_TAIL = 1e-6


def _uniform_spacing(tau_grid: np.ndarray) -> float:
    diffs = np.diff(tau_grid)
    if diffs.size == 0:
        raise ValueError("tau_grid needs at least two points")
    if not np.allclose(diffs, diffs[0], rtol=1e-9, atol=0.0):
        raise ValueError("inefficient_wtd requires a uniform tau grid")
    return float(diffs[0])


def inefficient_wtd(omega: float, gamma: float, eta: float, tau_grid) -> WaitingTimeCurve:
    """Delay density seen by a detector of efficiency eta (only flaw).

    Geometric renewal series of self-convolutions of the ideal density,
    truncated once the remaining weight (1-eta)^(n+1) drops below 1e-6.
    Convolutions are direct quadrature on an internal uniform grid extended
    far enough that the truncated tail mass stays negligible.
    """
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    tau_grid = np.asarray(tau_grid, dtype=float)
    if eta == 1.0:
        return ideal_wtd_curve(omega, gamma, tau_grid)
    dtau = _uniform_spacing(tau_grid)
    mean_wait = (2.0 * omega**2 + gamma**2) / (gamma * omega**2) if omega != 0 else np.inf
    tau_max = max(10.0 / gamma, 20.0 * mean_wait / eta, float(tau_grid[-1]))
    n_grid = int(math.ceil(tau_max / dtau)) + 1
    grid = dtau * np.arange(n_grid)
    w = ideal_wtd(omega, gamma, grid)
    from scipy.signal import fftconvolve

    total = np.zeros(n_grid)
    conv = w.copy()  # (n+1)-fold convolution of the ideal density
    n = 0
    while True:
        total += eta * (1.0 - eta) ** n * conv
        if (1.0 - eta) ** (n + 1) < SERIES_TAIL:
            break
        # same rectangle-rule sum as np.convolve (endpoints vanish), via FFT
        conv = fftconvolve(conv, w)[:n_grid] * dtau
        n += 1
    density = np.interp(tau_grid, grid, total)
    return WaitingTimeCurve(tau_grid, _clip_density(density))


def write_wtd_csv(path, curve: WaitingTimeCurve, params: dict | None = None) -> None:
    from pathlib import Path

    lines = [f"# {key} = {value}" for key, value in (params or {}).items()]
    lines.append("tau,density")
    for t, d in zip(curve.tau, curve.density):
        lines.append(f"{t:.12g},{d:.12g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
