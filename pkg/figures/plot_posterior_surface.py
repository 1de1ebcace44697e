#!/usr/bin/env python3
"""Render a posterior surface over (omega, t) from a posterior CSV.

Usage: plot_posterior_surface.py --in posterior.csv --out surface.png

Expects the documented posterior schema: a 'time' column, probability
columns omega_1..omega_N, and the node drive values in the
'# omega_nodes = ...' comment.
"""

import argparse
import re

import numpy as np

from figlib import FigureInputError, deterministic_savefig, fail, read_table


def render(in_path: str, out_path: str) -> None:
    comments, header, data = read_table(in_path)
    if "omega_nodes" not in comments:
        raise FigureInputError("posterior CSV lacks '# omega_nodes = ...' comment")
    omegas = np.array([float(v) for v in comments["omega_nodes"].split(",")])
    prob_cols = [i for i, name in enumerate(header) if re.fullmatch(r"omega_\d+", name)]
    if "time" not in header or len(prob_cols) != omegas.size:
        raise FigureInputError(
            f"need 'time' plus {omegas.size} omega_* columns, found {len(prob_cols)}"
        )
    times = data[:, header.index("time")]
    probs = data[:, prob_cols]

    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    mesh = ax.pcolormesh(omegas, times, probs, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="posterior probability")
    ax.set_xlabel(r"$\Omega / \Gamma$")
    ax.set_ylabel(r"$t\ (\Gamma^{-1})$")
    ax.set_title("posterior over the drive vs time")
    fig.tight_layout()
    deterministic_savefig(fig, out_path)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="in_path", required=True)
    parser.add_argument("--out", dest="out_path", required=True)
    args = parser.parse_args()
    try:
        render(args.in_path, args.out_path)
    except FigureInputError as exc:
        fail(str(exc))


if __name__ == "__main__":
    main()
