#!/usr/bin/env python3
"""Information-gain curves with standard-error bars from info-gain CSVs.

Usage: plot_info_gain.py --in a.csv [b.csv ...] [--labels "..."] --out gain.png
"""

import argparse

from figlib import FigureInputError, column, deterministic_savefig, fail, read_table


def render(in_paths: list[str], labels: list[str] | None, out_path: str) -> None:
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i, path in enumerate(in_paths):
        comments, header, data = read_table(path)
        t = column(header, data, "time")
        mean = column(header, data, "mean_bits")
        err = column(header, data, "stderr_bits")
        fallback = comments.get("omega_max", path)
        label = labels[i] if labels and i < len(labels) else fallback
        ax.errorbar(t, mean, yerr=err, lw=1.2, elinewidth=0.6, capsize=2, label=label)
    ax.set_xlabel(r"$t\ (\Gamma^{-1})$")
    ax.set_ylabel(r"$\Delta I$ (bits)")
    ax.legend(loc="upper left", fontsize=8)
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
