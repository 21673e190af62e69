#!/usr/bin/env python3
"""Writes the four-node linear-Gaussian toy data set.

X1 ~ N(0, 1)
X2 = 0.8 X1 + N(0, 0.6^2)
X3 = -0.7 X1 + N(0, 0.7^2)
X4 = 0.6 X2 + 0.5 X3 + N(0, 0.5^2)

A categorical column `band` (low/mid/high by X4 tertile cut points -0.5 and
0.5) is appended so the toy exercises mixed-type handling.
"""

import argparse
import csv

import numpy as np


def generate(n, seed):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = 0.8 * x1 + 0.6 * rng.normal(size=n)
    x3 = -0.7 * x1 + 0.7 * rng.normal(size=n)
    x4 = 0.6 * x2 + 0.5 * x3 + 0.5 * rng.normal(size=n)
    band = np.where(x4 < -0.5, "low", np.where(x4 < 0.5, "mid", "high"))
    return x1, x2, x3, x4, band


def write(path, n, seed, with_band):
    x1, x2, x3, x4, band = generate(n, seed)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["X1", "X2", "X3", "X4"] + (["band"] if with_band else []))
        for i in range(n):
            row = [repr(float(v[i])) for v in (x1, x2, x3, x4)]
            if with_band:
                row.append(band[i])
            w.writerow(row)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=5000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="toy_train.csv")
    p.add_argument("--band", action="store_true", help="append the categorical band column")
    args = p.parse_args()
    write(args.out, args.rows, args.seed, args.band)


if __name__ == "__main__":
    main()
