#!/usr/bin/env python3
"""Overlay best-estimate z(t) traces from one or more best-state CSVs.

Usage: plot_z_traces.py --in a.csv [b.csv ...] [--labels "known,unknown"] --out z.png
"""

import argparse

from figlib import FigureInputError, column, deterministic_savefig, fail, read_table


def render(in_paths: list[str], labels: list[str] | None, out_path: str) -> None:
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    for i, path in enumerate(in_paths):
        _, header, data = read_table(path)
        t = column(header, data, "time")
        z = column(header, data, "z")
        label = labels[i] if labels and i < len(labels) else path
        ax.plot(t, z, lw=1.0, label=label)
    ax.set_xlabel(r"$t\ (\Gamma^{-1})$")
    ax.set_ylabel(r"$z(t)$")
    ax.set_ylim(-1.05, 1.05)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    deterministic_savefig(fig, out_path)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="in_paths", required=True, nargs="+")
    parser.add_argument("--labels", default=None, help="comma-separated legend labels")
    parser.add_argument("--out", dest="out_path", required=True)
    args = parser.parse_args()
    labels = args.labels.split(",") if args.labels else None
    try:
        render(args.in_paths, labels, args.out_path)
    except FigureInputError as exc:
        fail(str(exc))


if __name__ == "__main__":
    main()
