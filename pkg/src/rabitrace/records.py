"""Stochastic measurement records: photodetections and detector avalanches.

Records live on a fixed time grid of step dt. An ideal record lists the bins
in which the atom's emission was detected; a realistic record lists the bins
in which the photodiode's avalanche registered. Both analyses of one physical
run are kept consistent by construction: a single emission record is thinned
by the diode efficiency into an absorption stream, and that same stream
drives the classical detector automaton (ready -> avalanching -> resetting).

All generators are deterministic given their seed (numpy PCG64 streams).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from . import _kernels
from .atom import GROUND, AtomState, SystemParams
from .detector import DetectorParams, ideal_step_matrices

__all__ = [
    "RecordKind",
    "MeasurementRecord",
    "DetectorAutomatonState",
    "simulate_ideal_record",
    "thin_absorptions",
    "simulate_avalanche_record",
    "derive_seed",
]

_CHUNK = 1 << 20

_ROLE_TAGS = {
    "ideal-record": 1,
    "thin": 2,
    "avalanche": 3,
    "ensemble-member": 4,
    "omega-draw": 5,
}


def derive_seed(master_seed: int, role: str, index: int = 0) -> int:
    """Mix (master seed, role tag, index) into one 64-bit stream seed."""
    ss = np.random.SeedSequence(
        entropy=int(master_seed) & (2**64 - 1),
        spawn_key=(_ROLE_TAGS[role], int(index)),
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RecordKind(IntEnum):
    DETECTION = 0
    AVALANCHE = 1
    DARK_AVALANCHE = 2


_KIND_NAMES = {
    RecordKind.DETECTION: "detection",
    RecordKind.AVALANCHE: "avalanche",
    RecordKind.DARK_AVALANCHE: "dark_avalanche",
}
_KIND_FROM_NAME = {v: k for k, v in _KIND_NAMES.items()}


@dataclass
class MeasurementRecord:
    """Time-stamped event sequence on a fixed grid.

    steps holds strictly increasing bin indices, kinds the event type per bin.
    """

    dt: float
    duration: float
    steps: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    kinds: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.uint8))

    def __post_init__(self) -> None:
        self.steps = np.asarray(self.steps, dtype=np.int64)
        self.kinds = np.asarray(self.kinds, dtype=np.uint8)
        if self.dt <= 0.0 or self.duration < 0.0:
            raise ValueError("dt must be positive and duration non-negative")
        if self.steps.shape != self.kinds.shape:
            raise ValueError("steps and kinds must have equal length")
        if self.steps.size:
            if np.any(np.diff(self.steps) <= 0):
                raise ValueError("event step indices must be strictly increasing")
            if self.steps[0] < 0 or self.steps[-1] * self.dt >= self.duration:
                raise ValueError("event steps must satisfy 0 <= step*dt < duration")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def n_events(self) -> int:
        return int(self.steps.size)

    def times(self) -> np.ndarray:
        return self.steps * self.dt

    def events(self) -> list[tuple[int, RecordKind]]:
        return [(int(s), RecordKind(k)) for s, k in zip(self.steps, self.kinds)]

    def to_bits(self) -> np.ndarray:
        """Dense 0/1 array over all bins; every event kind counts as a click."""
        bits = np.zeros(self.n_steps, dtype=np.uint8)
        bits[self.steps] = 1
        return bits

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MeasurementRecord):
            return NotImplemented
        return (
            self.dt == other.dt
            and self.duration == other.duration
            and np.array_equal(self.steps, other.steps)
            and np.array_equal(self.kinds, other.kinds)
        )

    def write_csv(self, path: str | Path, params: dict | None = None) -> None:
        """Write `step_index,kind` rows with a comment header.

        dt and duration are written with 17 significant digits so the
        round-trip through text is bit-exact.
        """
        lines = [f"# dt = {self.dt:.17g}", f"# duration = {self.duration:.17g}"]
        for key, value in (params or {}).items():
            if isinstance(value, float):
                lines.append(f"# {key} = {value:.17g}")
            else:
                lines.append(f"# {key} = {value}")
        lines.append("step_index,kind")
        for s, k in zip(self.steps, self.kinds):
            lines.append(f"{int(s)},{_KIND_NAMES[RecordKind(k)]}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    @classmethod
    def read_csv(cls, path: str | Path) -> "MeasurementRecord":
        dt = duration = None
        steps: list[int] = []
        kinds: list[int] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if "=" in body:
                        key, _, value = body.partition("=")
                        key = key.strip()
                        if key == "dt":
                            dt = float(value)
                        elif key == "duration":
                            duration = float(value)
                    continue
                if line.startswith("step_index"):
                    continue
                s, _, name = line.partition(",")
                steps.append(int(s))
                kinds.append(int(_KIND_FROM_NAME[name.strip()]))
        if dt is None or duration is None:
            raise ValueError(f"record file {path} lacks dt/duration header")
        return cls(dt=dt, duration=duration,
                   steps=np.array(steps, dtype=np.int64),
                   kinds=np.array(kinds, dtype=np.uint8))


def simulate_ideal_record(
    params: SystemParams,
    duration: float,
    dt: float = 1e-4,
    seed: int = 0,
    initial: AtomState = GROUND,
) -> tuple[MeasurementRecord, AtomState]:
    """Quantum-jump simulation of ideal direct detection.

    Per bin, the detection probability is one minus the trace kept by the
    no-click propagator; on a click the atom resets to the ground state and
    the bin index is recorded. Returns the record and the final normalised
    atom state. Deterministic for a fixed seed.
    """
    if duration <= 0.0 or dt <= 0.0:
        raise ValueError("duration and dt must be positive")
    n_steps = int(round(duration / dt))
    M0, _ = ideal_step_matrices(params, eta=1.0, dt=dt)
    rng = np.random.default_rng(seed)
    v = initial.normalized().as_array()
    chunks: list[np.ndarray] = []
    out = np.empty(_CHUNK, dtype=np.int64)
    done = 0
    while done < n_steps:
        m = min(_CHUNK, n_steps - done)
        uniforms = rng.random(m)
        count = _kernels.ideal_record_chunk(v, M0, uniforms, done, out)
        if count:
            chunks.append(out[:count].copy())
        done += m
    steps = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    record = MeasurementRecord(
        dt=dt,
        duration=duration,
        steps=steps,
        kinds=np.full(steps.size, RecordKind.DETECTION, dtype=np.uint8),
    )
    return record, AtomState.from_array(v)


def thin_absorptions(record: MeasurementRecord, eta: float, seed: int = 0) -> MeasurementRecord:
    """Keep each detection independently with probability eta.

    Models the diode's beam-splitter: survivors are the photons actually
    absorbed by the avalanche photodiode.
    """
    if not (0.0 <= eta <= 1.0):
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if eta == 1.0:
        keep = np.ones(record.n_events, dtype=bool)
    elif eta == 0.0:
        keep = np.zeros(record.n_events, dtype=bool)
    else:
        rng = np.random.default_rng(seed)
        keep = rng.random(record.n_events) < eta
    return MeasurementRecord(
        dt=record.dt,
        duration=record.duration,
        steps=record.steps[keep],
        kinds=record.kinds[keep],
    )


@dataclass
class DetectorAutomatonState:
    """Classical detector microstate: 0 ready, 1 avalanching, 2 resetting.

    Only the cycle 0 -> 1 (absorption or dark count), 1 -> 2 (avalanche
    registers), 2 -> 0 (dead time over) is physical.
    """

    micro: int = 0
    time_entered: float = 0.0

    _ALLOWED = frozenset({(0, 1), (1, 2), (2, 0)})

    def transition(self, micro: int, time: float) -> None:
        if (self.micro, micro) not in self._ALLOWED:
            raise ValueError(f"illegal detector transition {self.micro} -> {micro}")
        self.micro = micro
        self.time_entered = time


def simulate_avalanche_record(
    absorptions: MeasurementRecord,
    det: DetectorParams,
    seed: int = 0,
) -> MeasurementRecord:
    """Drive the classical detector automaton with an absorption stream.

    In ready(0) an absorption, or a dark count at rate gamma_dk, starts an
    avalanche; the avalanche registers after an Exponential(gamma_r) delay
    rounded up to the next grid point, and the detector then resets for
    tau_dd. Absorptions arriving while avalanching or resetting are
    discarded. Event-driven, so cost scales with the number of triggers.
    """
    dt = absorptions.dt
    n_steps = absorptions.n_steps
    n_dd = int(round(det.tau_dd / dt))
    rng = np.random.default_rng(seed)
    abs_steps = absorptions.steps
    out_steps: list[int] = []
    out_kinds: list[int] = []
    auto = DetectorAutomatonState()
    ready_from = 0
    i = 0
    while True:
        while i < abs_steps.size and abs_steps[i] < ready_from:
            i += 1
        next_abs = int(abs_steps[i]) if i < abs_steps.size else None
        next_dark = None
        if det.gamma_dk > 0.0:
            gap = rng.exponential(1.0 / det.gamma_dk)
            cand = ready_from + math.ceil(gap / dt)
            if cand < n_steps:
                next_dark = cand
        if next_abs is None and next_dark is None:
            break
        if next_dark is not None and (next_abs is None or next_dark < next_abs):
            trigger, kind = next_dark, RecordKind.DARK_AVALANCHE
        else:
            trigger, kind = next_abs, RecordKind.AVALANCHE
            i += 1
        auto.transition(1, trigger * dt)
        delay = rng.exponential(1.0 / det.gamma_r)
        aval_step = trigger + max(1, math.ceil(delay / dt))
        if aval_step >= n_steps:
            break  # still avalanching when the record ends
        auto.transition(2, aval_step * dt)
        out_steps.append(aval_step)
        out_kinds.append(int(kind))
        ready_from = aval_step + n_dd
        auto.transition(0, ready_from * dt)
    return MeasurementRecord(
        dt=dt,
        duration=absorptions.duration,
        steps=np.array(out_steps, dtype=np.int64),
        kinds=np.array(out_kinds, dtype=np.uint8),
    )
