"""Command-line interface: generate, factorize, curve, eval, experiment."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .binmat import FactorPairBinary, read_matrix, write_matrix
from .bounds import min_usage_curve
from .driver import TrustConfig, trust_pal
from .evaluate import evaluate, wrong_rec_rate
from .experiment import ExperimentSpec, run_experiment
from .ratings import binarize_ratings, read_ratings
from .synth import PlantedParams, make_instance

logger = logging.getLogger("fdrbmf")

CURVE_COLUMNS = ("a_rel", "b_rel_density", "b_rel_coherence", "infeasible_flags")


def _dump_json(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _trust_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise-estimate", type=float, help="assumed noise rate p_hat")
    p.add_argument("--fdr-level", type=float, default=0.01, help="false-discovery level q")
    p.add_argument("--method", choices=("density", "coherence", "both"), default="density")
    p.add_argument("--rank-increment", type=int, default=10, help="columns added per round")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--min-decrease", type=float, default=1e-4)
    p.add_argument("--grid-step", type=float, default=0.05, help="rounding threshold grid step")
    p.add_argument("--rank-gap", type=int, help="stop gap (default: the rank increment)")
    p.add_argument("--max-rank", type=int, help="rank budget cap (default: min(m, n) // 2)")
    p.add_argument("--seed", type=int, default=0)


def _trust_config(args) -> TrustConfig:
    if args.noise_estimate is None:
        raise SystemExit("--noise-estimate is required")
    return TrustConfig(
        p_hat=args.noise_estimate,
        q=args.fdr_level,
        delta_r=args.rank_increment,
        method=args.method,
        max_iter=args.max_iter,
        min_decrease=args.min_decrease,
        grid_step=args.grid_step,
        rank_gap=args.rank_gap,
        max_rank_budget=args.max_rank,
        seed=args.seed,
    )


def cmd_generate(args) -> int:
    params = PlantedParams(
        n=args.n, m=args.m, r_star=args.rank, d=args.max_size,
        p_plus=args.p_plus, p_minus=args.p_minus, seed=args.seed,
    )
    inst = make_instance(params)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_matrix(f"{prefix}.D.txt", inst.D)
    write_matrix(f"{prefix}.X.txt", inst.X_star)
    write_matrix(f"{prefix}.Y.txt", inst.Y_star)
    _dump_json(params.to_dict(), f"{prefix}.json")
    logger.info("wrote %s.{D,X,Y}.txt (%d x %d, density %.4f)",
                prefix, params.m, params.n, inst.D.mean())
    return 0


def cmd_factorize(args) -> int:
    cfg = _trust_config(args)
    extra = {}
    if args.ratings:
        table = read_ratings(args.ratings)
        bin_ = binarize_ratings(
            table, args.positive_threshold, args.min_row_degree, args.min_col_degree
        )
        D = bin_.matrix
        extra["ratings"] = {
            "rows": D.shape[0],
            "cols": D.shape[1],
            "density": bin_.density,
            "duplicates": table.duplicates,
            "pruning_passes": bin_.passes,
        }
        logger.info("binarized ratings: %d x %d, density %.4f", D.shape[0], D.shape[1], bin_.density)
    elif args.data:
        D = read_matrix(args.data)
    else:
        raise SystemExit("give a data matrix or --ratings")
    run = trust_pal(D, cfg)
    if args.ratings:
        rate = wrong_rec_rate(run.factors, bin_.triples(table), args.bad_threshold)
        extra["ratings"]["wrong_rec_rate"] = rate
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    F = run.factors.compact() if args.compact else run.factors
    write_matrix(f"{prefix}.X.txt", F.X)
    write_matrix(f"{prefix}.Y.txt", F.Y)
    report = run.to_dict()
    report.update(extra)
    _dump_json(report, f"{prefix}.json")
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("round,iteration,objective\n")
            for k, rec in enumerate(run.rounds):
                for it, val in enumerate(rec.trace.objective_values):
                    fh.write(f"{k},{it},{val!r}\n")
    print(f"rank {run.rank} after {run.total_rounds} rounds ({run.stop_reason})")
    return 0


def _a_grid(args) -> list[float]:
    if args.a_rel:
        return [float(v) for v in args.a_rel]
    return list(np.round(np.linspace(args.a_min, args.a_max, args.a_points), 10))


def cmd_curve(args) -> int:
    rows = []
    for a_rel in _a_grid(args):
        a = max(int(round(a_rel * args.n)), 1)
        dens = min_usage_curve(args.n, args.m, args.noise_estimate, args.fdr_level,
                               args.delta, "density", [a])[0]
        if a >= 2:
            coh = min_usage_curve(args.n, args.m, args.noise_estimate, args.fdr_level,
                                  args.delta, "coherence", [a],
                                  ordered_pairs=not args.unordered_pairs,
                                  integer_eta=not args.continuous_eta)[0]
            coh_b, coh_inf = coh.b_rel, coh.infeasible
        else:
            coh_b, coh_inf = math.nan, True
        flags = ("D" if dens.infeasible else "") + ("C" if coh_inf else "")
        rows.append((a_rel, dens.b_rel, coh_b, flags))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for a_rel, bd, bc, flags in rows:
            w.writerow([repr(float(a_rel)), repr(float(bd)), repr(float(bc)), flags])
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_eval(args) -> int:
    D = read_matrix(args.data)
    computed = FactorPairBinary(read_matrix(args.x), read_matrix(args.y))
    planted = FactorPairBinary(read_matrix(args.planted_x), read_matrix(args.planted_y))
    rep = evaluate(D, computed, planted, args.t)
    if args.out and args.out.endswith(".json"):
        _dump_json(rep.to_dict(), args.out)
    elif args.out:
        Path(args.out).write_text(rep.to_csv())
    else:
        sys.stdout.write(rep.to_csv())
    return 0


def cmd_experiment(args) -> int:
    if not args.spec:
        raise SystemExit("experiment needs --spec (a JSON experiment description)")
    data = json.loads(Path(args.spec).read_text())
    if args.seed is not None:
        data["seed"] = args.seed
    if data.get("seed") is None:
        raise SystemExit("experiments need a seed (in the spec or via --seed)")
    spec = ExperimentSpec.from_dict(data)
    result = run_experiment(spec, args.out, workers=args.workers)
    failed = sum(1 for r in result["runs"] if r.get("error"))
    print(f"{len(result['runs'])} runs, {failed} failed; results in {args.out}")
    return 0


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="fdrbmf",
        description="Boolean matrix factorization with false-discovery-controlled rank selection.",
    )
    parser.add_argument("--config", help="JSON file of option defaults (keys are option names)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("generate", help="draw a planted instance with noise")
    p.add_argument("--n", type=int, required=False, help="columns of D (pattern length)")
    p.add_argument("--m", type=int, required=False, help="rows of D (usage length)")
    p.add_argument("--rank", type=int, default=10, help="planted rank r*")
    p.add_argument("--max-size", type=float, default=0.1, help="maximum relative tile side d")
    p.add_argument("--p-plus", type=float, default=0.1, help="0 -> 1 flip rate")
    p.add_argument("--p-minus", type=float, default=0.1, help="1 -> 0 flip rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="instance", help="output prefix")
    p.set_defaults(func=cmd_generate)
    subs["generate"] = p

    p = sub.add_parser("factorize", help="factorize a matrix or a ratings file")
    p.add_argument("data", nargs="?", help="matrix text file")
    _trust_options(p)
    p.add_argument("--ratings", help="row,col,score file instead of a matrix")
    p.add_argument("--positive-threshold", type=float, default=3.0)
    p.add_argument("--min-row-degree", type=int, default=0)
    p.add_argument("--min-col-degree", type=int, default=0)
    p.add_argument("--bad-threshold", type=float, default=2.5,
                   help="scores below this count as wrong recommendations")
    p.add_argument("--compact", action="store_true", help="drop empty factor columns")
    p.add_argument("--trace", help="CSV of objective values per round and iteration")
    p.add_argument("--out", default="factors", help="output prefix")
    p.set_defaults(func=cmd_factorize)
    subs["factorize"] = p

    p = sub.add_parser("curve", help="minimum certifiable usage per pattern size")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=800)
    p.add_argument("--noise-estimate", type=float, default=0.1)
    p.add_argument("--fdr-level", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=0.5, help="assumed tile density")
    p.add_argument("--a-rel", nargs="+", help="relative pattern sizes")
    p.add_argument("--a-min", type=float, default=0.004)
    p.add_argument("--a-max", type=float, default=0.05)
    p.add_argument("--a-points", type=int, default=47)
    p.add_argument("--unordered-pairs", action="store_true",
                   help="count each column pair once in the coherence union bound")
    p.add_argument("--continuous-eta", action="store_true",
                   help="do not round the overlap floor down to an integer")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_curve)
    subs["curve"] = p

    p = sub.add_parser("eval", help="compare computed factors with planted ones")
    p.add_argument("--data", required=False)
    p.add_argument("--x", required=False, help="computed pattern matrix")
    p.add_argument("--y", required=False, help="computed usage matrix")
    p.add_argument("--planted-x", required=False)
    p.add_argument("--planted-y", required=False)
    p.add_argument("--t", type=float, default=0.0, help="overlap at or below which a tile is false")
    p.add_argument("--out", help="CSV or .json path (default CSV on stdout)")
    p.set_defaults(func=cmd_eval)
    subs["eval"] = p

    p = sub.add_parser("experiment", help="run a synthetic parameter grid")
    p.add_argument("--spec", help="JSON experiment description")
    p.add_argument("--seed", type=int, help="overrides the spec's seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_experiment)
    subs["experiment"] = p
    return parser, subs


_REQUIRED = {
    "generate": ("n", "m"),
    "eval": ("data", "x", "y", "planted_x", "planted_y"),
}


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # config values become defaults; explicit flags still win on the reparse
        config = json.loads(Path(args.config).read_text())
        section = config.get(args.command, config)
        target = subs[args.command]
        known = {a.dest for a in target._actions}
        defaults = {}
        for key, value in section.items():
            dest = key.replace("-", "_")
            if isinstance(value, dict):
                continue
            if dest not in known:
                parser.error(f"unknown config key {key!r} for {args.command}")
            defaults[dest] = value
        target.set_defaults(**defaults)
        args = parser.parse_args(argv)
    for dest in _REQUIRED.get(args.command, ()):
        if getattr(args, dest) is None:
            parser.error(f"{args.command}: --{dest.replace('_', '-')} is required")
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
