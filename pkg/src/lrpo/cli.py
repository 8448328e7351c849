"""Command-line entry point: ``lrpo <command> ...``.

Exit codes: 0 when every checked invariant held, 1 on a violation or a failed
calibration, 2 on bad usage or unreadable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import LrpoError, UsageError, ValidationError
from .experiment import ExperimentSpec, ExperimentViolation, calibrate, run_experiment
from .generators import GENERATORS, generate
from .graph import Graph, OracleHandle
from .lowerbound import (
    TreeFamily,
    enumerate_seed_indices,
    random_family,
    seed_count_bound,
    verify_chunk_uniformity,
)
from .oracle import LocalOracle
from .partition import cut_fraction, global_partition, size_bound, validate_partition
from .randomness import Params, SeedBundle

OK, VIOLATION, USAGE = 0, 1, 2


def _emit(args, payload: dict, text: str) -> None:
    out = json.dumps(payload, sort_keys=True) if args.json else text
    if args.out:
        Path(args.out).write_text(out + "\n")
    else:
        print(out)


def _params(args, g: Graph) -> Params:
    if args.params_file:
        try:
            return Params.from_dict(json.loads(Path(args.params_file).read_text()))
        except (OSError, ValueError, TypeError) as exc:
            raise UsageError(f"cannot read params file: {exc}") from None
    return Params.practical(g.d)


def _graph(args) -> Graph:
    if not args.graph:
        raise UsageError("--graph is required")
    try:
        return Graph.load(args.graph)
    except OSError as exc:
        raise UsageError(f"cannot read graph: {exc}") from None


def _seeds(args, params: Params, g: Graph) -> SeedBundle:
    if args.seed_hex:
        try:
            sb = SeedBundle.from_hex(params, g.N, g.n, args.seed_hex)
        except ValueError as exc:
            raise UsageError(f"bad --seed-hex: {exc}") from None
        if (sb.N, sb.n) != (g.N, g.n):
            raise UsageError("seed file was made for a different graph size")
        return sb
    return SeedBundle.random(params, g.N, g.n, np.random.default_rng(args.rng_seed))


def cmd_generate(args) -> int:
    g = generate(args.generator, args.n, args.rng_seed, shuffle=args.shuffle)
    text = g.dumps()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return OK


def cmd_partition(args) -> int:
    g = _graph(args)
    sb = _seeds(args, _params(args, g), g)
    params = sb.params
    res = global_partition(g, sb, params)
    problems = validate_partition(g, res, size_bound(params))
    payload = res.to_json(g, params, sb.digest())
    payload["cut_fraction"] = cut_fraction(g, len(res.cut_edges))
    payload["charge"] = res.charge
    payload["problems"] = problems
    payload["seed_hex"] = sb.to_bytes().hex()
    text = (
        f"n={g.n} components={len(res.components)} cut_edges={len(res.cut_edges)} "
        f"cut_fraction={payload['cut_fraction']:.4f} max_component={res.max_component} "
        f"charge={res.charge} valid={not problems}"
    )
    _emit(args, payload, text)
    return VIOLATION if problems else OK


def cmd_oracle(args) -> int:
    g = _graph(args)
    sb = _seeds(args, _params(args, g), g)
    if args.vertex not in g:
        raise UsageError(f"vertex {args.vertex} is not in the graph")
    oracle = LocalOracle(OracleHandle(g), sb, sb.params)
    decision = oracle.decide(args.vertex)
    stats = oracle.stats()
    payload = {
        "vertex": args.vertex,
        "anchor": list(decision.anchor) if decision.anchor else None,
        "component": sorted(decision.component),
        "queries": stats.as_dict(),
    }
    text = (
        f"vertex {args.vertex}: component {sorted(decision.component)} anchor "
        f"{decision.anchor or 'leftover'}; neighbor_queries={stats.neighbor_queries} "
        f"label_queries={stats.label_queries}"
    )
    _emit(args, payload, text)
    return OK


def cmd_lowerbound(args) -> int:
    if args.family:
        try:
            fam = TreeFamily.load(args.family)
        except OSError as exc:
            raise UsageError(f"cannot read family: {exc}") from None
    else:
        fam = random_family(np.random.default_rng(args.rng_seed), args.r, args.q, args.n)
    if fam.q != args.q:
        raise UsageError(f"family has q={fam.q}, but --q {args.q} was given")
    seeds = enumerate_seed_indices(fam)
    rep = verify_chunk_uniformity(fam, args.n)
    q = fam.q
    bound_ok = len(seeds) <= seed_count_bound(fam.r, q)
    cover_needed = len(seeds) <= args.n / q**5
    cover_ok = (not cover_needed) or rep.chunks.covered >= (1 - 1 / q**2) * args.n
    cut_ok = (not cover_needed) or rep.implied_cut_fraction >= 1 - 1 / q**2
    ok = bound_ok and cover_ok and cut_ok and rep.all_uniform
    payload = {
        **rep.to_json(),
        "r": fam.r,
        "seed_count": len(seeds),
        "seed_count_bound_ok": bound_ok,
        "coverage_ok": cover_ok,
        "ok": ok,
    }
    bad = sum(not v.uniform for v in rep.verdicts)
    text = (
        f"n={args.n} q={q} r={fam.r} seeds={len(seeds)} chunks={len(rep.chunks.chunks)} "
        f"covered={rep.chunks.covered} ({rep.chunks.coverage:.4f}) non_uniform={bad} "
        f"implied_cut_fraction={rep.implied_cut_fraction:.4f} ok={ok}"
    )
    _emit(args, payload, text)
    return OK if ok else VIOLATION


def cmd_calibrate(args) -> int:
    res = calibrate(args.generator, args.n, args.target, seeds=args.seeds, rng_seed=args.rng_seed)
    if res.ok:
        text = json.dumps(res.params.to_dict(), sort_keys=True)
    else:
        best = min(res.tried, key=lambda p: p.median_cut_fraction)
        text = f"calibration failed: best median cut_fraction {best.median_cut_fraction:.4f} > {args.target}"
    _emit(args, res.to_json(), text)
    return OK if res.ok else VIOLATION


def cmd_report(args) -> int:
    g = generate(args.generator, args.n, args.rng_seed, shuffle=True)
    spec = ExperimentSpec(
        args.generator, args.n, _params(args, g) if args.params_file else None,
        seeds=args.seeds, rng_seed=args.rng_seed, oracle_checks=args.oracle_checks,
    )
    try:
        rep = run_experiment(spec, g)
    except ExperimentViolation as exc:
        print(json.dumps({"violation": str(exc), "dump": exc.dump}, sort_keys=True), file=sys.stderr)
        return VIOLATION
    if args.out:
        Path(args.out + ".jsonl").write_text(rep.to_jsonl())
        Path(args.out + ".csv").write_text(rep.to_csv())
    summary = rep.summary()
    if args.json or not args.out:
        print(json.dumps(summary, sort_keys=True) if args.json else rep.to_jsonl(), end="" if not args.json else "\n")
    else:
        cf = summary["cut_fraction"]
        print(f"{len(rep.runs)} runs: median cut_fraction {cf['median']:.4f}, wrote {args.out}.jsonl and {args.out}.csv")
    return OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph file in the `n d N` text format")
    common.add_argument("--seed-hex", help="seed file or seed material, hex encoded")
    common.add_argument("--params-file", help="JSON params (as written by `calibrate`)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--rng-seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="lrpo", description="Low-randomness partition oracle toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a generated graph")
    p.add_argument("--generator", choices=GENERATORS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--shuffle", action="store_true", help="random labels in [1, n]")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("partition", parents=[common], help="run the global partition")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("oracle", parents=[common], help="answer one local-oracle query")
    p.add_argument("--vertex", type=int, required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("lowerbound", parents=[common], help="chunk analysis of a tree family")
    p.add_argument("--family", help="family JSON; a random family is generated when omitted")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--r", type=int, default=1, help="randomness bits of a generated family")
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("calibrate", parents=[common], help="search PRACTICAL params for a cut target")
    p.add_argument("--generator", choices=GENERATORS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--seeds", type=int, default=5)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("report", parents=[common], help="seeded experiment as JSON lines and CSV")
    p.add_argument("--generator", choices=GENERATORS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--oracle-checks", type=int, default=2)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lrpo: {exc}", file=sys.stderr)
        return USAGE
    except ValidationError as exc:
        print(f"lrpo: invalid input: {exc}", file=sys.stderr)
        return USAGE
    except LrpoError as exc:
        print(f"lrpo: {exc}", file=sys.stderr)
        return VIOLATION


if __name__ == "__main__":
    sys.exit(main())
