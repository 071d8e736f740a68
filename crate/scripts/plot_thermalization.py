#!/usr/bin/env python3
"""Render the fidelity-vs-collisions figure from a `pmme thermalize` CSV.

Usage: plot_thermalization.py <thermalize.csv> <out.png>
"""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

STYLES = {
    "markov": dict(color="tab:blue", linestyle="-", label="memoryless chain"),
    "pm-early": dict(color="tab:red", linestyle="--", label="measured, early weights"),
    "pm-intermediate": dict(
        color="tab:green", linestyle="-.", label="measured, intermediate weights"
    ),
}


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    src, dst = sys.argv[1], sys.argv[2]

    series = defaultdict(lambda: ([], []))
    with open(src, newline="") as fh:
        for row in csv.DictReader(fh):
            ns, fs = series[row["scenario"]]
            ns.append(int(row["n"]))
            fs.append(float(row["fidelity"]))

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for scenario, (ns, fs) in sorted(series.items()):
        style = STYLES.get(scenario, dict(label=scenario))
        ax.plot(ns, fs, **style)
    ax.axhline(0.99, color="gray", linewidth=0.8, alpha=0.6)
    ax.set_xlabel("number of collisions $n$")
    ax.set_ylabel(r"fidelity $F(\rho_S(n), \eta)$")
    ax.set_ylim(0.0, 1.02)
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(dst, dpi=160)
    print(f"wrote {dst}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
