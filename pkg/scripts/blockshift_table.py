"""Per-block summary of a block-shift series file.

For each block, prints the active covariate, the mean weight of the matching
expert over the block's second half, and which expert has the lower mean
cumulative loss at the block's end.

    python3 scripts/run_study.py blockshift --seed 1
    python3 scripts/blockshift_table.py results/blockshift_seed1_series.csv
"""

import csv
import sys
from collections import defaultdict

import numpy as np

from coma.streams import block_bounds


def load(path):
    series = defaultdict(dict)
    with open(path) as fh:
        for row in csv.DictReader(fh):
            series[row["series"]][int(row["t"])] = float(row["value"])
    return series


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print(__doc__, file=sys.stderr)
        return 2
    s = load(argv[0])
    ts = sorted(s["mean_w_1"])
    T = ts[-1] + 1
    print("block        active  w_match(2nd half)  leader(L)")
    for start, stop, active in block_bounds(T):
        half = [t for t in ts if start + (stop - start) // 2 <= t < stop]
        if not half:
            continue
        w = np.mean([s[f"mean_w_{active}"][t] for t in half])
        end = half[-1]
        leader = 1 if s["mean_L_1"][end] < s["mean_L_2"][end] else 2
        print(f"[{start:4d},{stop:4d})  x{active}      {w:6.3f}             x{leader}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
