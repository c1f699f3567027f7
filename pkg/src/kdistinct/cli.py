"""Command-line experiment runner: ``walk``, ``verify``, ``distinct``, ``store-bench``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .collision_driver import exponent_scan, r_sweep, run_k_distinctness
from .errors import KDistinctError
from .instances import load_instance
from .ledger import QueryLedger
from .verification import (engine_equivalence, gengrover_trials, hoffman_wielandt_trials,
                           spectrum_check, store_failure, store_histories)
from .walk_core import WalkParams, default_t1, success_curve

__all__ = ["main", "build_parser"]


def _config(args: argparse.Namespace) -> Dict:
    cfg = {k: v for k, v in vars(args).items() if k != "handler"}
    return {"tool": "kdistinct", "version": __version__, "config": cfg}


def _emit(args: argparse.Namespace, payload: Dict, rows: Optional[List[Dict]] = None) -> None:
    """Write JSON (header plus payload) or CSV (commented header plus rows)."""
    header = _config(args)
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        extra = {k: v for k, v in payload.items() if k != "rows"}
        if extra:
            buf.write("# " + json.dumps(extra, sort_keys=True) + "\n")
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps({**header, **payload}, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_walk(args: argparse.Namespace) -> int:
    params = WalkParams(args.N, args.r, args.k, M=args.M, t1=args.t1, t2=args.t2)
    t1 = default_t1(params) if args.t1 is None else args.t1
    t1_max = 2 * t1 if args.t1_max is None else args.t1_max
    curve = success_curve(params, t1_max)
    ledger = QueryLedger()
    ledger.charge_setup(params.r)
    ledger.charge_walk(2 * t1 * params.t2)
    rows = [{"t1": t, "success_prob": p} for t, p in curve]
    _emit(args, {"t1": t1, "t2": params.t2, "success_prob": dict(curve)[t1] if t1 <= t1_max else None,
                 "ledger": ledger.to_dict(), "rows": rows}, rows)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    suite = args.suite
    if suite == "subspace":
        report = engine_equivalence(args.N, args.r, args.k, t1_max=args.t1_max,
                                    seed=args.seed, tol=args.tol)
    elif suite == "spectrum":
        report = spectrum_check(args.k, args.r, args.N, tol=args.tol)
    elif suite == "hw":
        report = hoffman_wielandt_trials(args.trials, seed=args.seed)
    elif suite == "gengrover":
        report = gengrover_trials(args.trials, seed=args.seed)
    else:
        report = store_histories(args.N, args.r, histories=args.histories,
                                 set_size=min(200, args.r), seed=args.seed)
        report["failure"] = store_failure(args.N, args.r, seed=args.seed)
        report["passed"] = report["passed"] and report["failure"]["passed"]
    _emit(args, {"suite": suite, "report": report})
    return 0 if report["passed"] else 1


def _grid(text: str) -> List[int]:
    return [int(float(x)) for x in text.split(",") if x.strip()]


def cmd_distinct(args: argparse.Namespace) -> int:
    if args.scan_exponent:
        res = exponent_scan(args.k, _grid(args.grid), seed=args.seed, trials=args.trials,
                            perm_source=args.perm_source)
        rows = [{"N": n, "r": r, "queries": q} for n, r, q in res.rows]
        _emit(args, {"slope": res.slope, "target": args.k / (args.k + 1), "rows": rows}, rows)
        return 0
    if args.r_sweep:
        if args.N is None:
            raise KDistinctError("--r-sweep needs --N")
        sweep = r_sweep(args.N, args.k, _grid(args.r_sweep), seed=args.seed,
                        trials=args.trials, perm_source=args.perm_source)
        rows = [{"r": r, "queries": q} for r, q in sweep]
        _emit(args, {"N": args.N, "rows": rows}, rows)
        return 0
    if args.input is None:
        raise KDistinctError("an instance file (--input) is required")
    inst = load_instance(args.input, args.M)
    r = args.r if args.r is not None else int(inst.N ** (args.k / (args.k + 1)))
    r = max(r, args.k)
    res = run_k_distinctness(inst, r, args.k, seed=args.seed, perm_source=args.perm_source)
    if args.format == "csv":
        rows = [{"iteration": i + 1, **{k: t.get(k) for k in ("size", "r_j", "q", "queries", "outcome", "step")}}
                for i, t in enumerate(res.trace)]
        _emit(args, {"found": list(res.found) if res.found else "none",
                     "ledger": res.ledger.to_dict(), "rows": rows}, rows)
    else:
        _emit(args, {"found": list(res.found) if res.found else "none",
                     "ledger": res.ledger.to_dict(), "trace": res.trace, "r": r})
    if args.out:
        print(" ".join(map(str, res.found)) if res.found else "none")
    return 0


def cmd_store_bench(args: argparse.Namespace) -> int:
    report = store_failure(args.N, args.r, ops=args.ops, seed=args.seed, c=args.c)
    _emit(args, report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kdistinct", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt):
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)

    w = sub.add_parser("walk", help="success curve of the single-solution walk")
    w.add_argument("--N", type=int, required=True)
    w.add_argument("--r", type=int, required=True)
    w.add_argument("--k", type=int, default=2)
    w.add_argument("--M", type=int)
    w.add_argument("--t1", type=int)
    w.add_argument("--t2", type=int)
    w.add_argument("--t1-max", type=int)
    common(w, "csv")
    w.set_defaults(handler=cmd_walk)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", choices=("subspace", "spectrum", "hw", "gengrover", "store"),
                   required=True)
    v.add_argument("--N", type=int, default=6)
    v.add_argument("--r", type=int, default=2)
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--t1-max", type=int, default=8)
    v.add_argument("--trials", type=int, default=50)
    v.add_argument("--histories", type=int, default=1000)
    v.add_argument("--tol", type=float)
    common(v, "json")
    v.set_defaults(handler=cmd_verify)

    d = sub.add_parser("distinct", help="decide k-distinctness of an instance file")
    d.add_argument("--input", help="one integer per line, or a JSON array")
    d.add_argument("--k", type=int, default=2)
    d.add_argument("--r", type=int)
    d.add_argument("--M", type=int)
    d.add_argument("--N", type=int)
    d.add_argument("--perm-source", choices=("feistel", "uniform"), default="feistel")
    d.add_argument("--scan-exponent", action="store_true")
    d.add_argument("--grid", default="1e3,1e4,1e5,1e6")
    d.add_argument("--r-sweep", help="comma-separated r values (needs --N)")
    d.add_argument("--trials", type=int, default=5)
    common(d, "json")
    d.set_defaults(handler=cmd_distinct)

    s = sub.add_parser("store-bench", help="failure rate of the canonical store")
    s.add_argument("--N", type=int, default=1024)
    s.add_argument("--r", type=int, default=128)
    s.add_argument("--ops", type=int, default=10_000)
    s.add_argument("--c", type=float, default=1.0)
    common(s, "json")
    s.set_defaults(handler=cmd_store_bench)
    return p


_DEFAULT_TOL = {"subspace": 1e-9, "spectrum": 0.1}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "suite", None) and args.tol is None:
        args.tol = _DEFAULT_TOL.get(args.suite)
    try:
        return args.handler(args)
    except (KDistinctError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
