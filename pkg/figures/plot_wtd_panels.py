#!/usr/bin/env python3
"""Waiting-time distribution panels, one per input CSV.

Usage: plot_wtd_panels.py --in w1.csv [w2.csv ...] --out panels.png
"""

import argparse
import math

from figlib import FigureInputError, column, deterministic_savefig, fail, read_table


def render(in_paths: list[str], out_path: str) -> None:
    import matplotlib.pyplot as plt

    n = len(in_paths)
    ncols = 1 if n == 1 else 2
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.0 * ncols, 2.6 * nrows),
                             squeeze=False, sharex=False)
    for i, path in enumerate(in_paths):
        comments, header, data = read_table(path)
        ax = axes[i // ncols][i % ncols]
        tau = column(header, data, "tau")
        dens = column(header, data, "density")
        ax.plot(tau, dens, lw=1.0)
        ax.set_ylim(bottom=0.0)
        title = ", ".join(
            f"{k}={comments[k]}" for k in ("wtd_kind", "omega") if k in comments
        )
        ax.set_title(title or path, fontsize=8)
        ax.set_xlabel(r"$\tau\ (\Gamma^{-1})$")
        ax.set_ylabel(r"$w(\tau)\ (\Gamma)$")
    for j in range(n, nrows * ncols):
        axes[j // ncols][j % ncols].axis("off")
    fig.tight_layout()
    deterministic_savefig(fig, out_path)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="in_paths", required=True, nargs="+")
    parser.add_argument("--out", dest="out_path", required=True)
    args = parser.parse_args()
    try:
        render(args.in_paths, args.out_path)
    except FigureInputError as exc:
        fail(str(exc))


if __name__ == "__main__":
    main()
