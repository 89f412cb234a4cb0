"""Command-line entry point: ``coma merge | optimize-weights | simulate | stream``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
contract violation.  Simulation and stream reports start with the resolved
config as ``# config:`` lines; feeding a report back through ``--config``
reruns it exactly.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .config import build_config, parse_config_text, resolve_key
from .errors import ConfigError, ContractViolation, DataError, UnboundedMeasure
from .intervals import WeightVector
from .io import format_interval_set, parse_interval_set, parse_matrix, parse_numbers, read_text
from .merge import (
    capped_distance_loss,
    independent_merge,
    majority_vote,
    miscoverage_loss,
    optimize_weights,
    randomized_majority_vote,
    risk_merge,
    weight_objective,
)

EXIT_CONFIG, EXIT_DATA, EXIT_CONTRACT = 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coma", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("merge", help="merge K interval-set CSV files")
    m.add_argument("--sets", nargs="+", required=True, metavar="CSV")
    m.add_argument("--weights", metavar="CSV", help="K weights (default uniform)")
    m.add_argument("--rule", default="majority", choices=["majority", "randomized", "independent", "risk"])
    m.add_argument("--u", type=float, default=None, help="vote randomization in [0,1)")
    m.add_argument("--alpha", type=float, default=None, help="level for the independent rule")
    m.add_argument("--loss", default="capped-distance", choices=["capped-distance", "miscoverage"])
    m.add_argument("--bound", type=float, default=1.0, help="loss bound for the risk rule")

    o = sub.add_parser("optimize-weights", help="grid search for voting weights")
    o.add_argument("--matrix", required=True, metavar="CSV")
    o.add_argument("--resolution", type=int, default=20)

    for name, text in (("simulate", "run a Monte Carlo study"), ("stream", "run COMA over a stream")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", metavar="FILE", help="key=value file (or an earlier report)")
        s.add_argument("--out", metavar="FILE", help="write the report here instead of stdout")
        s.add_argument("--series", metavar="FILE", help="write series,t,value CSV here")
        if name == "simulate":
            s.add_argument("--scenario", choices=["splines", "highdim", "independence", "blockshift"])
        else:
            s.add_argument("--mode", choices=["direct-aci", "decentralized-aci", "decentralized-tracking"])
            s.add_argument("--source", help="stream CSV path or synthetic:<shift|iid|constant>")
            s.add_argument("--records", metavar="FILE", help="write per-round records CSV here")
    return ap


def _inline_overrides(extra: Sequence[str]) -> dict[str, str]:
    """``--key value`` / ``--key=value`` pairs for any config field."""
    out: dict[str, str] = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key, eq, value = tok[2:].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise ConfigError(f"--{key}: missing value")
            value = extra[i + 1]
            i += 1
        out[resolve_key(key)] = value
        i += 1
    return out


def _resolve(args, extra, scenario: Optional[str]):
    values: dict[str, object] = {}
    if args.config:
        values.update(parse_config_text(read_text(args.config), args.config))
    flags = {k: getattr(args, k, None) for k in ("scenario", "mode", "source")}
    values.update({k: v for k, v in flags.items() if v is not None})
    values.update(_inline_overrides(extra))
    scen = scenario or values.pop("scenario", None) or "splines"
    values.pop("scenario", None)
    return build_config(scen, **values)


def _write(path: Optional[str], text: str):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as e:
        raise DataError(f"{path}: {e.strerror}") from None


def _cmd_merge(args) -> None:
    sets = [parse_interval_set(read_text(p), p) for p in args.sets]
    K = len(sets)
    if args.weights:
        raw = parse_numbers(read_text(args.weights), args.weights)
        if len(raw) != K:
            raise DataError(f"{args.weights}: {len(raw)} weights for {K} sets")
        try:
            w = WeightVector(tuple(raw))
        except DataError as e:
            raise DataError(f"{args.weights}: {e}") from None
    else:
        w = WeightVector.uniform(K)
    if args.rule == "majority":
        merged = majority_vote(sets, w)
    elif args.rule == "randomized":
        if args.u is None:
            raise ConfigError("--u is required for the randomized rule")
        merged = randomized_majority_vote(sets, w, args.u)
    elif args.rule == "independent":
        if args.alpha is None:
            raise ConfigError("--alpha is required for the independent rule")
        merged = independent_merge(sets, args.alpha)
    else:
        loss = capped_distance_loss(args.bound) if args.loss == "capped-distance" else miscoverage_loss()
        merged = risk_merge(sets, w, loss)
    sys.stdout.write(format_interval_set(merged))


def _cmd_optimize(args) -> None:
    R = parse_matrix(read_text(args.matrix), args.matrix)
    w, obj = optimize_weights(R, args.resolution)
    assert weight_objective(w, R) == obj
    sys.stdout.write(f"objective={obj}\n")
    sys.stdout.write("w=" + ",".join(format(v, ".10g") for v in w) + "\n")


def _cmd_simulate(args, extra) -> None:
    from .sims import run_highdim, run_independence_check, run_splines_like
    from .streams import run_block_shift

    cfg = _resolve(args, extra, None)
    runners = {
        "splines": run_splines_like,
        "highdim": run_highdim,
        "independence": run_independence_check,
        "blockshift": run_block_shift,
    }
    if cfg.scenario not in runners:
        raise ConfigError(f"scenario: {cfg.scenario!r} is not a simulate scenario (use `coma stream`)")
    rep = runners[cfg.scenario](cfg)
    _write(args.out, rep.to_text())
    if args.series:
        _write(args.series, rep.series_csv())


def _cmd_stream(args, extra) -> None:
    from .streams import run_stream

    cfg = _resolve(args, extra, "stream")
    rep, run = run_stream(cfg)
    _write(args.out, rep.to_text())
    if args.series:
        _write(args.series, rep.series_csv())
    if args.records:
        _write(args.records, run.records_csv())


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _parser()
    args, extra = ap.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        if args.command in ("merge", "optimize-weights") and extra:
            raise ConfigError(f"unrecognized arguments: {' '.join(extra)}")
        if args.command == "merge":
            _cmd_merge(args)
        elif args.command == "optimize-weights":
            _cmd_optimize(args)
        elif args.command == "simulate":
            _cmd_simulate(args, extra)
        else:
            _cmd_stream(args, extra)
    except ConfigError as e:
        print(f"coma: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, UnboundedMeasure) as e:
        print(f"coma: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ContractViolation as e:
        print(f"coma: contract violation: {e}", file=sys.stderr)
        return EXIT_CONTRACT
    return 0


def main_exit() -> None:
    sys.exit(main())
