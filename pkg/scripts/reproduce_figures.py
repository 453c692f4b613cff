"""Run every simulation scenario and write the CSV/JSON bundles.

Usage::

    python3 scripts/reproduce_figures.py --out results [--T 100] [--plot]

``--plot`` additionally calls ``plot_simplex.py`` on the output directory
(needs matplotlib).
"""

import argparse
import time
from pathlib import Path

from antipassive import sim


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--T", type=float, default=100.0)
    parser.add_argument("--dt", type=float, default=0.005)
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()

    cfg = sim.ScenarioConfig(integrator=sim.IntegratorConfig(dt=args.dt, T=args.T))
    for name in sim.SCENARIOS:
        start = time.perf_counter()
        res = sim.run_scenario(name, cfg, args.out)
        rep = res.report
        extra = ""
        if "linear_crosscheck" in rep:
            dom = rep["linear_crosscheck"]["paper"]["max_real"]
            extra = f", linear max Re {dom:+.6f}"
        elif "lossless_residual" in rep:
            extra = f", lossless residual {rep['lossless_residual']:.2e}"
        print(f"{name:28s} {rep['verdict']:14s} drift {rep['simplex_drift']:.1e}{extra} ({time.perf_counter() - start:.1f}s)")

    if args.plot:
        from plot_simplex import plot_directory

        for path in plot_directory(Path(args.out)):
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
