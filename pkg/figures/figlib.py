"""Shared helpers for the figure scripts: CSV ingestion and deterministic output.

The scripts consume only the documented CSV columns (extra columns are
ignored) and never import the simulation library; the CSV files are the
interface.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fixed-salt"  # deterministic svg ids

import numpy as np


class FigureInputError(Exception):
    """Input CSV missing, empty, or not matching the documented schema."""


def read_table(path: str | Path) -> tuple[dict, list[str], np.ndarray]:
    """Parse a CSV with '#' comment headers into (comments, columns, data).

    comments maps 'key' -> 'value' strings from '# key = value' lines;
    data is a float array with one row per data line.
    """
    path = Path(path)
    if not path.is_file():
        raise FigureInputError(f"input file not found: {path}")
    comments: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                comments[key.strip()] = value.strip()
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        values = line.split(",")
        if len(values) != len(header):
            raise FigureInputError(f"{path}: row has {len(values)} fields, header has {len(header)}")
        try:
            rows.append([float(v) for v in values])
        except ValueError as exc:
            raise FigureInputError(f"{path}: non-numeric data row: {line!r}") from exc
    if header is None:
        raise FigureInputError(f"{path}: no header row")
    if not rows:
        raise FigureInputError(f"{path}: no data rows")
    return comments, header, np.asarray(rows)


def column(header: list[str], data: np.ndarray, name: str) -> np.ndarray:
    if name not in header:
        raise FigureInputError(f"required column '{name}' missing (have {header})")
    return data[:, header.index(name)]


def deterministic_savefig(fig, out_path: str | Path) -> None:
    """Save with timestamps scrubbed so identical inputs give identical bytes."""
    out_path = Path(out_path)
    suffix = out_path.suffix.lower()
    metadata = None
    if suffix == ".pdf":
        metadata = {"CreationDate": None}
    elif suffix == ".svg":
        metadata = {"Date": None}
    fig.savefig(out_path, dpi=150, metadata=metadata)


def fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)
    sys.exit(1)


# -- programmatic figure dispatch -------------------------------------------

FIGURE_KINDS = ("posterior-surface", "z-traces", "info-gain", "wtd-panels")

_SCRIPT_BY_KIND = {
    "posterior-surface": "plot_posterior_surface",
    "z-traces": "plot_z_traces",
    "info-gain": "plot_info_gain",
    "wtd-panels": "plot_wtd_panels",
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input CSVs, figure kind, output image path."""

    kind: str
    in_paths: tuple
    out_path: str
    labels: tuple | None = None

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise FigureInputError(f"unknown figure kind {self.kind!r}")
        if not self.in_paths:
            raise FigureInputError("at least one input CSV is required")


def _load_script(name: str):
    import importlib.util

    path = Path(__file__).with_name(f"{name}.py")
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def render(figure_spec: FigureSpec) -> Path:
    """Render one figure; raises FigureInputError on schema problems."""
    module = _load_script(_SCRIPT_BY_KIND[figure_spec.kind])
    paths = [str(p) for p in figure_spec.in_paths]
    labels = list(figure_spec.labels) if figure_spec.labels else None
    if figure_spec.kind == "posterior-surface":
        module.render(paths[0], figure_spec.out_path)
    elif figure_spec.kind == "wtd-panels":
        module.render(paths, figure_spec.out_path)
    else:
        module.render(paths, labels, figure_spec.out_path)
    return Path(figure_spec.out_path)
