#!/usr/bin/env python3
"""End-to-end desk-scale run: synth -> fit -> confidence -> metrics -> contour -> export.

Produces a run directory with a viewer-ready artifact.json. Tweak the knobs
below or pass --run-dir / --seed / --n / --classes.
"""

import argparse
import sys

from distillmap.cli import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--run-dir", default="runs/desk")
    ap.add_argument("--seed", default="1")
    ap.add_argument("--n", default="2000")
    ap.add_argument("--classes", default="10")
    ap.add_argument("--epochs", default="600")
    args = ap.parse_args()

    preds = f"{args.run_dir}/teacher.csv"
    steps = [
        ["synth", "--classes", args.classes, "--n", args.n, "--seed", args.seed,
         "--confusable", "0:1:0.35,4:5:0.3", "--outlier-fraction", "0.03",
         "--blob-sd", "0.75", "--out", preds],
        ["fit", "--input", preds, "--run-dir", args.run_dir,
         "--epochs", args.epochs, "--seed", args.seed, "--deterministic"],
        ["confidence", "--run-dir", args.run_dir,
         "--kinds", "kde,gmm,dmm,entropy", "--seed", args.seed, "--deterministic"],
        ["metrics", "--run-dir", args.run_dir, "--knn", "1,5,10"],
        ["contour", "--run-dir", args.run_dir, "--level", "0.001"],
        ["export", "--run-dir", args.run_dir, "--seed", args.seed,
         "--deterministic"],
    ]
    for step in steps:
        code = cli(step)
        if code != 0:
            print(f"step failed ({code}): {' '.join(step)}", file=sys.stderr)
            return code
    print(f"done; open frontend/index.html and load {args.run_dir}/artifact.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
