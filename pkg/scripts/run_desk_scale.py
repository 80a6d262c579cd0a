#!/usr/bin/env python3
"""Run the desk-scale bundling experiment straight from Python.

Same workload as `advbundle run configs/default.cfg`, but with the config
assembled in code, which is handier when sweeping parameters from a notebook
or another script.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import advbundle as ab
from advbundle.cli import run_experiment


def build_config(out_dir: str, seed: int) -> ab.ExperimentConfig:
    eps = 0.3
    return ab.ExperimentConfig(
        synth_n=400, synth_d=2, synth_k=3, synth_seed=7,
        architecture="mlp1", hidden=16,
        learning_rate=0.3, epochs=120, batch_size=32, train_seed=1,
        criterion=ab.Criterion.max_confidence(0.9),
        early_stop=False,
        seed=seed,
        output_dir=out_dir,
        attacks=(
            ab.AttackConfig("pgd-cheap", "pgd", epsilon=eps, step_size=0.1,
                            num_steps=40),
            ab.AttackConfig("pgd-expensive", "pgd", epsilon=eps, step_size=0.04,
                            num_steps=1000),
            ab.AttackConfig("noise", "uniform_noise", epsilon=eps, num_samples=100),
        ),
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="root seed")
    args = parser.parse_args()
    paths = run_experiment(build_config(args.out, args.seed))
    print(paths["summary.txt"].read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
