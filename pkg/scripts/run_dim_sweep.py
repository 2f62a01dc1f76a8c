#!/usr/bin/env python3
"""Sweep embedding dimensionality and report detection quality per dim."""
import argparse
import sys

from driftwatch import DriftSchedule, SynthConfig
from driftwatch.synth import dim_sweep, sweep_csv


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.strip())
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 4, 8, 16, 32, 64, 128])
    ap.add_argument("--n-train", type=int, default=500, help="training samples per class")
    ap.add_argument("--n-test", type=int, default=200, help="test samples per class")
    ap.add_argument("--severity", type=float, default=8.0)
    ap.add_argument("--type2-rate", type=float, default=0.6)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", help="write CSV here instead of stdout")
    args = ap.parse_args(argv)

    config = SynthConfig(dim=args.dims[0], n_train=args.n_train, n_test=args.n_test, seed=args.seed)
    schedule = DriftSchedule(mode="abrupt", t0=0, severity=args.severity,
                             type_ii_rate=args.type2_rate)
    text = sweep_csv(dim_sweep(config, dims=args.dims, schedule=schedule))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
