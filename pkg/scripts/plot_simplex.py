"""Draw the ternary trajectories and share time series from scenario bundles.

Usage::

    python3 scripts/plot_simplex.py results

Reads ``*_simplex.csv`` and ``*_trajectory.csv`` from the directory and writes
one PNG per scenario next to them.
"""

import argparse
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


def plot_bundle(simplex_csv: Path) -> Path:
    name = simplex_csv.name.removesuffix("_simplex.csv")
    tuv = np.loadtxt(simplex_csv, delimiter=",", skiprows=1, ndmin=2)
    traj_csv = simplex_csv.with_name(f"{name}_trajectory.csv")
    header = traj_csv.read_text().split("\n", 1)[0].split(",")
    data = np.loadtxt(traj_csv, delimiter=",", skiprows=1, ndmin=2)
    xcols = [i for i, h in enumerate(header) if h.startswith("x_")]

    fig, (ax_s, ax_t) = plt.subplots(1, 2, figsize=(11, 4.5))
    tri = np.vstack([CORNERS, CORNERS[:1]])
    ax_s.plot(tri[:, 0], tri[:, 1], color="0.3", lw=1)
    ax_s.plot(tuv[:, 1], tuv[:, 2], lw=0.8)
    ax_s.plot(tuv[0, 1], tuv[0, 2], "o", color="tab:green", ms=4)
    ax_s.plot(tuv[-1, 1], tuv[-1, 2], "s", color="tab:red", ms=4)
    ax_s.plot(0.5, math.sqrt(3) / 6, "k+")
    for k, (cx, cy) in enumerate(CORNERS, start=1):
        ax_s.annotate(f"$x_{k}$", (cx, cy), textcoords="offset points", xytext=(0, -12 if cy == 0 else 4), ha="center")
    ax_s.set_aspect("equal")
    ax_s.axis("off")
    ax_s.set_title(name)

    for i in xcols:
        ax_t.plot(data[:, 0], data[:, i], lw=0.8, label=header[i])
    ax_t.set_xlabel("t")
    ax_t.set_ylabel("share")
    ax_t.legend(loc="upper right")
    fig.tight_layout()
    out = simplex_csv.with_name(f"{name}.png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_directory(directory: Path) -> list[Path]:
    return [plot_bundle(p) for p in sorted(directory.glob("*_simplex.csv"))]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("directory", type=Path)
    args = parser.parse_args()
    written = plot_directory(args.directory)
    if not written:
        raise SystemExit(f"no *_simplex.csv files in {args.directory}")
    for path in written:
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
