"""Write a synthetic stream as CSV in the ``t,x1,...,xd,y`` schema accepted by ``coma stream``.

    python3 scripts/export_stream.py shift 3000 --seed 4 > shift.csv
    coma stream --source shift.csv --seed 1 --mode decentralized-tracking
"""

import argparse
import sys

from coma.sims import substream
from coma.streams import synthetic_stream


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=["shift", "iid", "constant"])
    ap.add_argument("rows", type=int)
    ap.add_argument("--seed", type=int, required=True)
    args = ap.parse_args(argv)
    s = synthetic_stream(args.kind, args.rows, substream(args.seed, 0, "export"))
    out = sys.stdout
    out.write(",".join(["t", *s.names, "y"]) + "\n")
    for t in range(len(s)):
        out.write(",".join([str(t), *(repr(float(v)) for v in s.x[t]), repr(float(s.y[t]))]) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(run())
