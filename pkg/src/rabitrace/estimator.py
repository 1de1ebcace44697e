"""Grid-based Bayesian estimation of the drive strength from click records.

The prior over the drive omega is the arcsine law induced by a uniformly
random position in a standing wave, P0(omega) = 1/(pi*sqrt(omega_max^2 -
omega^2)). Substituting omega = omega_max*sin(theta) makes theta uniform on
(-pi/2, pi/2), so a grid of equal-weight nodes at midpoint angles is an exact
quadrature of the prior with no endpoint blow-up.

A TrajectoryBank advances one unnormalised (linear) trajectory per node
through a shared record; the trace of each node is its record likelihood, and
the posterior is the prior-weighted, normalised trace vector. Traces are kept
in log space via periodic renormalisation. Nodes come in exact +/- pairs and
negative-omega step matrices are built by conjugating the positive-omega ones
with the y-flip sign matrix, so the posterior symmetry P(omega) = P(-omega)
for a ground-state start holds bit-for-bit.

Information gain is the drop in differential entropy of the posterior
relative to the prior, in bits; both entropies are evaluated with the same
grid discretisation so the gain is exactly zero before any data arrive and
doubling omega_max shifts the prior entropy by exactly one bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .atom import GROUND, AtomState, SystemParams
from .detector import (
    DetectorParams,
    OstensibleRate,
    SupersystemState,
    default_ostensible_rate,
    ideal_step_matrices,
    realistic_step_matrices,
)
from .records import MeasurementRecord, derive_seed, simulate_avalanche_record, simulate_ideal_record, thin_absorptions

__all__ = [
    "OmegaGrid",
    "PosteriorSnapshot",
    "TrajectoryBank",
    "EnsembleResult",
    "build_grid",
    "known_omega_grid",
    "sample_omega_true",
    "advance_bank",
    "posterior",
    "best_state",
    "info_gain_ensemble",
    "analytic_prior_entropy_bits",
    "write_posterior_csv",
    "write_info_gain_csv",
    "write_best_state_csv",
]

RENORM_EVERY = 1000


@dataclass(frozen=True)
class OmegaGrid:
    """Candidate drive values with prior weights (and quadrature cell widths)."""

    omegas: np.ndarray
    weights: np.ndarray
    cell_widths: np.ndarray

    def __post_init__(self) -> None:
        for name in ("omegas", "weights", "cell_widths"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.omegas.shape == self.weights.shape == self.cell_widths.shape):
            raise ValueError("grid arrays must share one shape")
        if np.any(self.weights <= 0.0):
            raise ValueError("prior weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("prior weights must sum to 1")

    @property
    def n_nodes(self) -> int:
        return int(self.omegas.size)

    def prior_entropy_bits(self) -> float:
        """Differential entropy of the prior under this grid's discretisation."""
        return float(-np.sum(self.weights * np.log2(self.weights / self.cell_widths)))

    def cdf(self, omega: np.ndarray) -> np.ndarray:
        """Right-continuous CDF of the discrete grid measure."""
        order = np.argsort(self.omegas)
        cum = np.cumsum(self.weights[order])
        idx = np.searchsorted(self.omegas[order], np.asarray(omega), side="right")
        return np.concatenate([[0.0], cum])[idx]


def build_grid(omega_max: float, n_nodes: int = 100) -> OmegaGrid:
    """Exact midpoint quadrature of the arcsine prior on (-omega_max, omega_max).

    Nodes are omega_max*sin(theta_j) at midpoint angles, all with weight
    1/n_nodes. n_nodes must be even so the nodes pair exactly under
    omega -> -omega and zero never appears as a node.
    """
    if omega_max <= 0.0:
        raise ValueError(f"omega_max must be positive, got {omega_max}")
    if n_nodes < 2 or n_nodes % 2 != 0:
        raise ValueError(f"n_nodes must be even and >= 2, got {n_nodes}")
    dtheta = np.pi / n_nodes
    # build the positive half and mirror it so +/- pairs are exact negations
    theta_pos = (np.arange(n_nodes // 2) + 0.5) * dtheta
    half = omega_max * np.sin(theta_pos)
    omegas = np.concatenate([-half[::-1], half])
    weights = np.full(n_nodes, 1.0 / n_nodes)
    widths_pos = omega_max * np.cos(theta_pos) * dtheta
    cell_widths = np.concatenate([widths_pos[::-1], widths_pos])
    return OmegaGrid(omegas, weights, cell_widths)


def known_omega_grid(omega_true: float) -> OmegaGrid:
    """Two-node bank at +/-omega_true for the known-|omega| conditional state.

    Cell widths are set to 1 so the information gain degenerates to the
    discrete relative entropy; only the best state is meaningful here.
    """
    if omega_true == 0.0:
        raise ValueError("omega_true must be nonzero for a two-node bank")
    om = abs(omega_true)
    return OmegaGrid(
        np.array([-om, om]), np.array([0.5, 0.5]), np.array([1.0, 1.0])
    )


def analytic_prior_entropy_bits(omega_max: float) -> float:
    """Closed-form differential entropy of the arcsine prior, log2(pi*omega_max/2)."""
    return math.log2(math.pi * omega_max / 2.0)


def sample_omega_true(omega_max: float, rng: np.random.Generator) -> float:
    """Draw from the arcsine prior by inverse CDF."""
    u = rng.random()
    return omega_max * math.sin(math.pi * (u - 0.5))


@dataclass(frozen=True)
class PosteriorSnapshot:
    """Posterior over the grid at one time, with its information gain."""

    time: float
    probabilities: np.ndarray
    info_gain_bits: float


_MIRROR4 = np.diag([1.0, 1.0, -1.0, 1.0])
_MIRROR12 = np.kron(np.eye(3), _MIRROR4)


def _node_matrices(
    omega: float,
    gamma: float,
    dt: float,
    eps: OstensibleRate,
    detector: DetectorParams | None,
    eta_ideal: float,
) -> np.ndarray:
    """Ostensibly-weighted (no-click, click) maps for one +omega node."""
    params = SystemParams(omega, gamma)
    if detector is None:
        M0, M1 = ideal_step_matrices(params, eta_ideal, dt)
    else:
        M0, M1 = realistic_step_matrices(params, detector, dt)
    return np.stack([M0 / (1.0 - eps.epsilon * dt), M1 / (eps.epsilon * dt)])


class TrajectoryBank:
    """One linear trajectory per grid node, advanced through a shared record.

    detector=None runs ideal detection (optionally inefficient via eta);
    otherwise the full supersystem is evolved with the given detector. All
    nodes share the same ostensible rate, so their traces are directly
    comparable likelihoods.
    """

    def __init__(
        self,
        grid: OmegaGrid,
        gamma: float = 1.0,
        dt: float = 1e-4,
        detector: DetectorParams | None = None,
        eta_ideal: float = 1.0,
        eps: OstensibleRate | None = None,
        initial: AtomState = GROUND,
    ) -> None:
        if eps is None:
            omega_ref = float(np.max(np.abs(grid.omegas)))
            eta_ref = eta_ideal if detector is None else detector.eta
            eps = default_ostensible_rate(omega_ref, gamma, eta_ref)
        if eps.epsilon * dt >= 1.0:
            raise ValueError(f"eps*dt = {eps.epsilon * dt} >= 1")
        self.grid = grid
        self.gamma = gamma
        self.dt = dt
        self.detector = detector
        self.eta_ideal = eta_ideal
        self.eps = eps
        self.dim = 4 if detector is None else 12
        self.n_dd = 0 if detector is None else int(round(detector.tau_dd / dt))
        self.step = 0

        n = grid.n_nodes
        self.mats = np.empty((n, 2, self.dim, self.dim))
        mirror = _MIRROR4 if detector is None else _MIRROR12
        cache: dict[float, np.ndarray] = {}
        for j, om in enumerate(grid.omegas):
            if abs(om) not in cache:
                cache[abs(om)] = _node_matrices(
                    abs(om), gamma, dt, eps, detector, eta_ideal
                )
            pos = cache[abs(om)]
            if om >= 0:
                self.mats[j] = pos
            else:
                # exact sign conjugation keeps +/- pairs bit-identical
                self.mats[j, 0] = mirror @ pos[0] @ mirror
                self.mats[j, 1] = mirror @ pos[1] @ mirror

        initial.validate()
        if detector is None:
            v0 = initial.as_array()
        else:
            v0 = SupersystemState.ready(initial).as_vector()
        self.states = np.tile(v0, (n, 1))
        self.logw = np.zeros(n)

    @property
    def time(self) -> float:
        return self.step * self.dt

    def node_state(self, j: int) -> AtomState | SupersystemState:
        if self.detector is None:
            return AtomState.from_array(self.states[j])
        return SupersystemState.from_vector(self.states[j])

    def _advance_bits(
        self, bits: np.ndarray, stop: int, snap_steps: np.ndarray,
        snap_logw: np.ndarray, snap_states: np.ndarray, snap_offset: int = 0,
    ) -> None:
        if stop > bits.size:
            raise ValueError(f"record has {bits.size} bins, requested stop={stop}")
        _kernels.advance_bank_kernel(
            self.states, self.logw, self.mats, bits,
            self.step, stop, self.n_dd, self.detector is not None,
            RENORM_EVERY, snap_steps, snap_logw, snap_states, snap_offset,
        )
        self.step = stop

    def advance(self, record: MeasurementRecord, stop_step: int | None = None) -> "TrajectoryBank":
        """Advance all nodes through record bins [current step, stop_step)."""
        if record.dt != self.dt:
            raise ValueError("record grid step differs from bank grid step")
        bits = record.to_bits()
        stop = bits.size if stop_step is None else int(stop_step)
        if stop < self.step:
            raise ValueError("cannot advance backwards")
        none = np.empty(0, dtype=np.int64)
        self._advance_bits(bits, stop, none, np.empty((0, 0)), np.empty((0, 0, 4)))
        return self

    def advance_with_snapshots(
        self, record: MeasurementRecord, snap_steps: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Advance to the last snapshot step, recording per-node log-likelihood
        and the (summed) atom components at every requested bin index.

        Returns (snap_logw, snap_states) of shapes (n_snaps, n_nodes) and
        (n_snaps, n_nodes, 4).
        """
        snap_steps = np.asarray(snap_steps, dtype=np.int64)
        if snap_steps.size and np.any(np.diff(snap_steps) <= 0):
            raise ValueError("snapshot steps must be strictly increasing")
        if snap_steps.size and snap_steps[0] <= self.step:
            raise ValueError("snapshot steps must lie ahead of the current step")
        n = self.grid.n_nodes
        snap_logw = np.empty((snap_steps.size, n))
        snap_states = np.empty((snap_steps.size, n, 4))
        bits = record.to_bits()
        stop = int(snap_steps[-1]) if snap_steps.size else self.step
        self._advance_bits(bits, stop, snap_steps, snap_logw, snap_states)
        return snap_logw, snap_states

    def _loglik(self) -> np.ndarray:
        traces = self.states[:, 0].copy()
        if self.dim == 12:
            traces = self.states[:, 0] + self.states[:, 4] + self.states[:, 8]
        with np.errstate(divide="ignore", invalid="ignore"):
            logt = np.where(traces > _kernels.DEAD_TRACE, np.log(np.maximum(traces, 1e-320)), -np.inf)
        return self.logw + logt

    def posterior(self) -> PosteriorSnapshot:
        probs = _posterior_probs(self._loglik(), self.grid.weights)
        gain = info_gain_bits(probs, self.grid)
        return PosteriorSnapshot(self.time, probs, gain)

    def best_state(self) -> AtomState:
        """Prior-weighted average of the node states, normalised."""
        loglik = self._loglik()
        logits = np.log(self.grid.weights) + loglik
        m = np.max(logits)
        if not np.isfinite(m):
            raise ValueError("record impossible under all candidates")
        rel = np.exp(logits - m)
        atoms = self.states[:, :4].copy()
        if self.dim == 12:
            atoms = self.states[:, 0:4] + self.states[:, 4:8] + self.states[:, 8:12]
        # rel already contains each node's trace; rescale states to unit trace first
        traces = atoms[:, 0]
        safe = np.where(traces > 0, traces, 1.0)
        mean = (atoms / safe[:, None] * rel[:, None]).sum(axis=0) / rel.sum()
        return AtomState.from_array(mean).normalized()


def _posterior_probs(loglik: np.ndarray, weights: np.ndarray) -> np.ndarray:
    logits = np.log(weights) + loglik
    m = np.max(logits)
    if not np.isfinite(m):
        raise ValueError("record impossible under all candidates")
    p = np.exp(logits - m)
    return p / p.sum()


def info_gain_bits(probs: np.ndarray, grid: OmegaGrid) -> float:
    """Entropy drop of probs relative to the grid prior, in bits.

    Both terms use the same cells, so the gain of the prior against itself is
    exactly zero and rescaling omega_max cancels exactly.
    """
    mask = probs > 0.0
    post = float(np.sum(probs[mask] * np.log2(probs[mask] / grid.cell_widths[mask])))
    return post - (-grid.prior_entropy_bits())


def best_state_from_snapshot(
    snap_logw: np.ndarray, snap_states: np.ndarray, grid: OmegaGrid
) -> AtomState:
    """Best-estimate atom state from one snapshot row of advance_with_snapshots."""
    probs = _posterior_probs(snap_logw, grid.weights)
    traces = snap_states[:, 0]
    safe = np.where(traces > 0, traces, 1.0)
    mean = (snap_states / safe[:, None] * probs[:, None]).sum(axis=0)
    return AtomState.from_array(mean).normalized()


def advance_bank(bank: TrajectoryBank, record: MeasurementRecord, stop_step: int | None = None) -> TrajectoryBank:
    return bank.advance(record, stop_step)


def posterior(bank: TrajectoryBank) -> PosteriorSnapshot:
    return bank.posterior()


def best_state(bank: TrajectoryBank) -> AtomState:
    return bank.best_state()


@dataclass(frozen=True)
class EnsembleResult:
    """Pointwise mean and standard error of the information gain over members."""

    times: np.ndarray
    mean_bits: np.ndarray
    stderr_bits: np.ndarray
    member_bits: np.ndarray  # (n_members, n_times)


def _simulate_member_record(
    omega_true: float,
    gamma: float,
    duration: float,
    dt: float,
    detector: DetectorParams | None,
    eta_ideal: float,
    member_seed: int,
) -> MeasurementRecord:
    params = SystemParams(omega_true, gamma)
    ideal, _ = simulate_ideal_record(
        params, duration, dt, derive_seed(member_seed, "ideal-record")
    )
    if detector is None:
        if eta_ideal < 1.0:
            return thin_absorptions(ideal, eta_ideal, derive_seed(member_seed, "thin"))
        return ideal
    absorptions = thin_absorptions(ideal, detector.eta, derive_seed(member_seed, "thin"))
    return simulate_avalanche_record(absorptions, detector, derive_seed(member_seed, "avalanche"))


def info_gain_ensemble(
    omega_max: float,
    n_members: int,
    duration: float,
    dt: float = 1e-4,
    n_nodes: int = 100,
    gamma: float = 1.0,
    detector: DetectorParams | None = None,
    eta_ideal: float = 1.0,
    master_seed: int = 0,
    snapshot_every: float = 0.25,
) -> EnsembleResult:
    """Mean information-gain curve over an ensemble of random true drives.

    Each member draws omega_true from the prior, simulates one record with it
    (ideal, or thinned + avalanche automaton when a detector is given), and
    evolves a fresh bank through that record. Members are independent given
    their derived seeds, so any execution order gives identical results.
    """
    if n_members < 2:
        raise ValueError("ensemble needs at least 2 members")
    grid = build_grid(omega_max, n_nodes)
    n_steps = int(round(duration / dt))
    every = max(1, int(round(snapshot_every / dt)))
    snap_steps = np.arange(every, n_steps + 1, every, dtype=np.int64)
    times = np.concatenate([[0.0], snap_steps * dt])
    member_bits = np.empty((n_members, times.size))
    for m in range(n_members):
        member_seed = derive_seed(master_seed, "ensemble-member", m)
        rng = np.random.default_rng(derive_seed(member_seed, "omega-draw"))
        omega_true = sample_omega_true(omega_max, rng)
        record = _simulate_member_record(
            omega_true, gamma, duration, dt, detector, eta_ideal, member_seed
        )
        bank = TrajectoryBank(
            grid, gamma=gamma, dt=dt, detector=detector, eta_ideal=eta_ideal,
            eps=default_ostensible_rate(omega_true, gamma,
                                        eta_ideal if detector is None else detector.eta),
        )
        snap_logw, _ = bank.advance_with_snapshots(record, snap_steps)
        member_bits[m, 0] = 0.0
        for k in range(snap_steps.size):
            probs = _posterior_probs(snap_logw[k], grid.weights)
            member_bits[m, k + 1] = info_gain_bits(probs, grid)
    mean = member_bits.mean(axis=0)
    stderr = member_bits.std(axis=0, ddof=1) / math.sqrt(n_members)
    return EnsembleResult(times, mean, stderr, member_bits)


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def write_posterior_csv(
    path, times: np.ndarray, probs: np.ndarray, grid: OmegaGrid, params: dict | None = None
) -> None:
    """Rows of node probabilities per time; node drive values in the header."""
    from pathlib import Path

    lines = [f"# omega_nodes = {','.join(_fmt(o) for o in grid.omegas)}"]
    for key, value in (params or {}).items():
        lines.append(f"# {key} = {value}")
    lines.append("time," + ",".join(f"omega_{j + 1}" for j in range(grid.n_nodes)))
    for t, row in zip(times, probs):
        lines.append(_fmt(t) + "," + ",".join(_fmt(p) for p in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_info_gain_csv(path, result: EnsembleResult, params: dict | None = None) -> None:
    from pathlib import Path

    lines = [f"# {key} = {value}" for key, value in (params or {}).items()]
    lines.append("time,mean_bits,stderr_bits")
    for t, m, s in zip(result.times, result.mean_bits, result.stderr_bits):
        lines.append(f"{_fmt(t)},{_fmt(m)},{_fmt(s)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_best_state_csv(path, times: np.ndarray, states: np.ndarray, params: dict | None = None) -> None:
    """states rows are normalised (n, x, y, z) of the best estimate."""
    from pathlib import Path

    lines = [f"# {key} = {value}" for key, value in (params or {}).items()]
    lines.append("time,n,x,y,z")
    for t, s in zip(times, states):
        lines.append(_fmt(t) + "," + ",".join(_fmt(c) for c in s))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
