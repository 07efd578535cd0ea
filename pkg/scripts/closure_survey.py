#!/usr/bin/env python3
"""Survey bracket-closure verdicts for a batch of forced mode sets.

Prints one line per (N, forced set): the reached set size and whether the
full-rank condition holds everywhere.
"""

import argparse

from stochmhd.hormander import closure
from stochmhd.lattice import build_lattice

SETS = {
    "axes": [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
    "tilted": [(1, 0, 0), (0, 1, 1), (0, 0, 1)],
    "single": [(1, 0, 0)],
    "pair": [(1, 0, 0), (0, 1, 0)],
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-N", type=int, default=2)
    ap.add_argument("--method", default="span", choices=("span", "rules"))
    args = ap.parse_args()

    for N in range(1, args.max_N + 1):
        lat = build_lattice(N)
        for name, forced in SETS.items():
            report = closure(forced, lat, method=args.method)
            print(
                f"N={N} {name:8s} reached {len(report.A_of_N):4d}/{lat.D:4d} modes  "
                f"hypoelliptic={report.hypoelliptic}  iterations={report.iterations}"
            )


if __name__ == "__main__":
    main()
