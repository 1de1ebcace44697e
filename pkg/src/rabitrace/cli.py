"""Command-line orchestration of the five experiment types.

    rabitrace <mode> --config <path> [--seed N] [--out DIR]

Modes: simulate-record, posterior, conditional-state, info-gain, wtd.
Configs are flat ``key = value`` text with ``#`` comments. Every run writes a
``manifest.cfg`` echoing the fully resolved configuration (floats at 17
significant digits), and re-running from the manifest reproduces the outputs
byte for byte. Errors print a single machine-parsable line
``ERROR <code> <detail>`` on stderr and exit nonzero without writing files.

The environment variable RABITRACE_THREADS caps the numba thread pool; the
computational kernels are single-threaded by design, so results never depend
on it.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .atom import GROUND, SystemParams
from .detector import DetectorParams, default_ostensible_rate
from .estimator import (
    TrajectoryBank,
    best_state_from_snapshot,
    build_grid,
    info_gain_ensemble,
    known_omega_grid,
    write_best_state_csv,
    write_info_gain_csv,
    write_posterior_csv,
)
from .records import derive_seed, simulate_avalanche_record, simulate_ideal_record, thin_absorptions
from .waiting_times import ideal_wtd_curve, inefficient_wtd, realistic_wtd, write_wtd_csv

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "run", "main"]

MODES = ("simulate-record", "posterior", "conditional-state", "info-gain", "wtd")


class ConfigError(ValueError):
    def __init__(self, code: str, detail: str) -> None:
        super().__init__(f"{code} {detail}")
        self.code = code
        self.detail = detail


def parse_config(path: str | Path) -> dict[str, str]:
    """Read flat key = value lines; '#' starts a comment, blank lines ignored."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config-parse", f"line {lineno} is not 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


_DEFAULTS = {
    "gamma": "1",
    "eta": "1",
    "gamma_dk": "0",
    "tau_dd": "0",
    "dt": "1e-4",
    "n_nodes": "100",
    "master_seed": "0",
    "detection": "ideal",
    "snapshot_every": "0.1",
    "bank": "grid",
    "wtd_kind": "ideal",
    "tau_max": "5",
    "n_tau": "1001",
    "output_dir": "out",
}

_REQUIRED = {
    "simulate-record": ("omega_true", "duration"),
    "posterior": ("omega_true", "omega_max", "duration"),
    "conditional-state": ("omega_true", "omega_max", "duration"),
    "info-gain": ("omega_max", "duration", "ensemble_size"),
    "wtd": ("omega",),
}


@dataclass
class ExperimentConfig:
    """Validated parameters of one run, plus the resolved key/value mapping."""

    mode: str
    resolved: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError("config-invalid", f"unknown mode '{self.mode}'")

    # -- typed accessors ---------------------------------------------------
    def _get(self, key: str) -> str:
        if key not in self.resolved:
            raise ConfigError("config-missing", f"key '{key}' required for mode {self.mode}")
        return self.resolved[key]

    def f(self, key: str) -> float:
        try:
            return float(self._get(key))
        except ValueError as exc:
            raise ConfigError("config-invalid", f"key '{key}' is not a number") from exc

    def i(self, key: str) -> int:
        try:
            return int(self._get(key))
        except ValueError as exc:
            raise ConfigError("config-invalid", f"key '{key}' is not an integer") from exc

    def s(self, key: str) -> str:
        return self._get(key)

    @classmethod
    def from_mapping(
        cls,
        mode: str,
        mapping: dict[str, str],
        seed_override: int | None = None,
        out_override: str | None = None,
    ) -> "ExperimentConfig":
        if "mode" in mapping and mapping["mode"] != mode:
            raise ConfigError(
                "config-invalid",
                f"config file declares mode '{mapping['mode']}' but '{mode}' was requested",
            )
        resolved = dict(_DEFAULTS)
        resolved.update(mapping)
        resolved["mode"] = mode
        if seed_override is not None:
            resolved["master_seed"] = str(seed_override)
        if out_override is not None:
            resolved["output_dir"] = out_override
        cfg = cls(mode, resolved)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for key in _REQUIRED[self.mode]:
            self._get(key)
        if self.s("detection") not in ("ideal", "realistic"):
            raise ConfigError("config-invalid", "detection must be 'ideal' or 'realistic'")
        if self.s("detection") == "realistic":
            self._get("gamma_r")
        gamma = self.f("gamma")
        if gamma <= 0:
            raise ConfigError("config-invalid", "gamma must be positive")
        if self.f("dt") <= 0:
            raise ConfigError("config-invalid", "dt must be positive")
        if not (0.0 <= self.f("eta") <= 1.0):
            raise ConfigError("config-invalid", "eta must lie in [0, 1]")
        if "omega_true" in self.resolved and "omega_max" in self.resolved:
            if abs(self.f("omega_true")) > self.f("omega_max"):
                raise ConfigError("config-invalid", "|omega_true| must not exceed omega_max")
        if self.mode in ("posterior", "conditional-state", "info-gain"):
            n = self.i("n_nodes")
            if n < 2 or n % 2:
                raise ConfigError("config-invalid", "n_nodes must be even and >= 2")
        if self.mode == "info-gain" and self.i("ensemble_size") < 2:
            raise ConfigError("config-invalid", "ensemble_size must be >= 2")
        if self.mode == "wtd":
            if self.s("wtd_kind") not in ("ideal", "realistic", "inefficient"):
                raise ConfigError(
                    "config-invalid", "wtd_kind must be ideal, realistic or inefficient"
                )
            if self.s("wtd_kind") == "realistic":
                self._get("gamma_r")

    # -- derived objects ---------------------------------------------------
    def detector(self) -> DetectorParams | None:
        if self.s("detection") != "realistic":
            return None
        return DetectorParams(
            eta=self.f("eta"),
            gamma_r=self.f("gamma_r"),
            gamma_dk=self.f("gamma_dk"),
            tau_dd=self.f("tau_dd"),
        )

    def manifest_text(self) -> str:
        lines = []
        for key in sorted(self.resolved):
            value = self.resolved[key]
            try:
                as_float = float(value)
                if not float(value).is_integer() or "e" in value.lower() or "." in value:
                    value = f"{as_float:.17g}"
            except ValueError:
                pass
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _simulate_record_for(cfg: ExperimentConfig):
    """(record driving the estimator, extra CSV payloads) for the config."""
    params = SystemParams(cfg.f("omega_true"), cfg.f("gamma"))
    dt, duration = cfg.f("dt"), cfg.f("duration")
    seed = cfg.i("master_seed")
    ideal, _ = simulate_ideal_record(
        params, duration, dt, derive_seed(seed, "ideal-record")
    )
    det = cfg.detector()
    eta = cfg.f("eta")
    extras = {"record_ideal.csv": ideal}
    if det is not None:
        absorptions = thin_absorptions(ideal, det.eta, derive_seed(seed, "thin"))
        avalanche = simulate_avalanche_record(absorptions, det, derive_seed(seed, "avalanche"))
        extras["record_absorptions.csv"] = absorptions
        extras["record_avalanche.csv"] = avalanche
        return avalanche, extras
    if eta < 1.0:
        thinned = thin_absorptions(ideal, eta, derive_seed(seed, "thin"))
        extras["record_thinned.csv"] = thinned
        return thinned, extras
    return ideal, extras


def _record_params(cfg: ExperimentConfig) -> dict:
    keys = ("mode", "detection", "gamma", "eta", "gamma_r", "gamma_dk", "tau_dd",
            "omega_true", "master_seed")
    return {k: cfg.resolved[k] for k in keys if k in cfg.resolved}


def run(config: ExperimentConfig) -> list[Path]:
    """Execute one experiment; returns the written file paths."""
    out_dir = Path(config.s("output_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, writer) -> None:
        path = out_dir / name
        writer(path)
        written.append(path)

    mode = config.mode
    if mode == "simulate-record":
        _, extras = _simulate_record_for(config)
        for name, record in extras.items():
            emit(name, lambda p, r=record: r.write_csv(p, _record_params(config)))

    elif mode in ("posterior", "conditional-state"):
        record, _ = _simulate_record_for(config)
        dt, duration = config.f("dt"), config.f("duration")
        gamma = config.f("gamma")
        det = config.detector()
        eta = config.f("eta")
        if mode == "conditional-state" and config.s("bank") == "known":
            grid = known_omega_grid(config.f("omega_true"))
        else:
            grid = build_grid(config.f("omega_max"), config.i("n_nodes"))
        eps = default_ostensible_rate(
            config.f("omega_true"), gamma, eta if det is None else det.eta
        )
        bank = TrajectoryBank(grid, gamma=gamma, dt=dt, detector=det,
                              eta_ideal=eta, eps=eps)
        n_steps = int(round(duration / dt))
        every = max(1, int(round(config.f("snapshot_every") / dt)))
        snap_steps = np.arange(every, n_steps + 1, every, dtype=np.int64)
        snap_logw, snap_states = bank.advance_with_snapshots(record, snap_steps)
        times = np.concatenate([[0.0], snap_steps * dt])
        emit("record.csv", lambda p: record.write_csv(p, _record_params(config)))
        if mode == "posterior":
            from .estimator import _posterior_probs

            rows = [grid.weights]
            for k in range(snap_steps.size):
                rows.append(_posterior_probs(snap_logw[k], grid.weights))
            emit("posterior.csv", lambda p: write_posterior_csv(
                p, times, np.array(rows), grid, {"mode": mode, "dt": f"{dt:.17g}"}
            ))
        else:
            states = [GROUND.as_array()]
            for k in range(snap_steps.size):
                states.append(
                    best_state_from_snapshot(snap_logw[k], snap_states[k], grid).as_array()
                )
            emit("best_state.csv", lambda p: write_best_state_csv(
                p, times, np.array(states), {"mode": mode, "dt": f"{dt:.17g}"}
            ))

    elif mode == "info-gain":
        result = info_gain_ensemble(
            omega_max=config.f("omega_max"),
            n_members=config.i("ensemble_size"),
            duration=config.f("duration"),
            dt=config.f("dt"),
            n_nodes=config.i("n_nodes"),
            gamma=config.f("gamma"),
            detector=config.detector(),
            eta_ideal=config.f("eta"),
            master_seed=config.i("master_seed"),
            snapshot_every=config.f("snapshot_every"),
        )
        emit("info_gain.csv", lambda p: write_info_gain_csv(
            p, result, {"mode": mode, "omega_max": config.s("omega_max"),
                        "detection": config.s("detection")}
        ))

    elif mode == "wtd":
        omega = config.f("omega")
        tau = np.linspace(0.0, config.f("tau_max"), config.i("n_tau"))
        kind = config.s("wtd_kind")
        if kind == "realistic":
            det = DetectorParams(
                eta=config.f("eta"), gamma_r=config.f("gamma_r"),
                gamma_dk=config.f("gamma_dk"), tau_dd=config.f("tau_dd"),
            )
            curve = realistic_wtd(omega, det, tau, dt=config.f("dt"))
        elif kind == "inefficient":
            curve = inefficient_wtd(omega, config.f("gamma"), config.f("eta"), tau)
        else:
            curve = ideal_wtd_curve(omega, config.f("gamma"), tau)
        emit("wtd.csv", lambda p: write_wtd_csv(
            p, curve, {"mode": mode, "wtd_kind": kind, "omega": config.s("omega")}
        ))

    emit("manifest.cfg", lambda p: p.write_text(
        config.manifest_text(), encoding="utf-8", newline="\n"
    ))
    return written


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rabitrace",
        description="Simulate photodetection of a driven two-level atom and "
        "estimate its drive strength from the record.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--out", default=None, help="override output_dir")
    args = parser.parse_args(argv)

    threads = os.environ.get("RABITRACE_THREADS")
    if threads:
        try:
            import numba

            numba.set_num_threads(max(1, int(threads)))
        except (ValueError, ImportError):
            pass

    try:
        mapping = parse_config(args.config)
        config = ExperimentConfig.from_mapping(
            args.mode, mapping, seed_override=args.seed, out_override=args.out
        )
    except ConfigError as exc:
        print(f"ERROR {exc.code} {exc.detail}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ERROR io-error {exc}", file=sys.stderr)
        return 1
    try:
        written = run(config)
    except OSError as exc:
        print(f"ERROR io-error {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
