#!/usr/bin/env python3
"""Render the curve CSVs from an experiment output directory as PNGs.

Plotting is deliberately kept out of the library; the CSVs are the
authoritative artifacts and this script only draws them. Needs matplotlib
(`pip install advbundle[plots]`).
"""

import argparse
import csv
import sys
from pathlib import Path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir", help="directory containing sf_curve.csv etc.")
    args = parser.parse_args()
    outdir = Path(args.outdir)

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is not installed; run: pip install matplotlib", file=sys.stderr)
        return 1

    sf = read_csv(outdir / "sf_curve.csv")
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.plot([float(r["failure_rate"]) for r in sf],
            [float(r["success_rate"]) for r in sf], marker=".", color="crimson")
    ax.set_xlabel("failure rate (adversarial, above threshold)")
    ax.set_ylabel("success rate (clean, covered and correct)")
    ax.set_title("success-fail curve over confidence thresholds")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(outdir / "sf_curve.png", dpi=150)

    nc = read_csv(outdir / "norm_curve.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([float(r["epsilon"]) for r in nc],
            [float(r["error_rate"]) for r in nc], marker=".", color="steelblue")
    ax.set_xlabel("perturbation budget (L-inf)")
    ax.set_ylabel("error rate")
    ax.set_title("error vs. allowed perturbation")
    ax.set_ylim(0, 1)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(outdir / "norm_curve.png", dpi=150)

    rates = read_csv(outdir / "rates.csv")
    mat = [(r["attack_id"], float(r["rate"])) for r in rates if r["kind"] == "MAT"]
    bundled = [float(r["rate"]) for r in rates
               if r["kind"] == "BUNDLED" and r["attack_id"] == "bundled"]
    fig, ax = plt.subplots(figsize=(6, 4))
    names = [n for n, _ in mat] + ["bundled"]
    values = [v for _, v in mat] + bundled
    colors = ["slategray"] * len(mat) + ["crimson"]
    ax.bar(names, values, color=colors)
    ax.set_ylabel("error rate")
    ax.set_ylim(0, 1)
    ax.set_title("per-attack error rates vs. the bundled attacker")
    for i, v in enumerate(values):
        ax.text(i, v + 0.01, f"{v:.1%}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(outdir / "rates.png", dpi=150)

    print(f"wrote {outdir}/sf_curve.png, {outdir}/norm_curve.png, {outdir}/rates.png")
    return 0


if __name__ == "__main__":
    sys.exit(main())
