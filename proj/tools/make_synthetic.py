#!/usr/bin/env python3
"""Writes the 4-class synthetic set used by the end-to-end acceptance check.

Two super-clusters ({a1,a2} low, {b1,b2} high); every series is a constant
level plus N(0,1) noise. A one-vs-rest linear model cannot isolate the two
inner classes, a two-level hierarchy can.
"""
import argparse

import numpy as np

LEVELS = {"a1": -4.0, "a2": -3.0, "b1": 3.0, "b2": 4.0}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/data/two_clusters.tsv")
    ap.add_argument("--per-class", type=int, default=30)
    ap.add_argument("--length", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    for label, level in LEVELS.items():
        x = level + rng.standard_normal((args.per_class, args.length))
        rows += [(label, r) for r in x]
    order = rng.permutation(len(rows))
    with open(args.out, "w") as f:
        f.write("# label then %d values; levels %s\n" % (args.length, LEVELS))
        for i in order:
            label, r = rows[i]
            f.write(label + "\t" + "\t".join("%.6f" % v for v in r) + "\n")


if __name__ == "__main__":
    main()
