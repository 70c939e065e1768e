"""Command-line entry point: ``nwrob {gen,run,suite,report}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from nwrob.errors import NWRobError
from nwrob.harness import VARIANT_NAMES, declare_T, report, run_experiment, run_suite
from nwrob.instances import (RECIPES, Instance, corpus, format_instance, gen_instance,
                             parse_pairs, read_instance)


def _seed(args: argparse.Namespace) -> int:
    env = os.environ.get("ROB_SEED")
    return int(env) if env not in (None, "") else args.seed


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render(rep, fmt: str) -> str:
    return rep.to_csv() if fmt == "csv" else rep.to_text()


def cmd_gen(args: argparse.Namespace) -> int:
    params = {"M": args.M} if args.M is not None else {}
    inst = gen_instance(args.recipe, params, _seed(args))
    if args.k_tilde is not None:
        inst.k_tilde = args.k_tilde
    _emit(format_instance(inst), args.out)
    return 0


def _load(args: argparse.Namespace) -> Instance:
    inst = read_instance(args.instance)
    if args.M is not None:
        inst.M = args.M
    if args.k_tilde is not None:
        inst.k_tilde = args.k_tilde
    if args.declare_T:
        with open(args.declare_T, encoding="utf-8") as fh:
            raw = parse_pairs(fh.read())
        ids = {str(v): v for v in inst.graph.nodes}
        try:
            inst.T = [(ids[s], ids[t]) for s, t in raw]
        except KeyError as exc:
            raise NWRobError(f"declared pair uses unknown node {exc.args[0]!r}") from None
    return inst


def cmd_run(args: argparse.Namespace) -> int:
    inst = _load(args)
    res = run_experiment(inst, args.variant, _seed(args))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"summary": res.summary(), "trace": res.trace}, fh, sort_keys=True, indent=1)
    sys.stdout.write(_render(report([res]), args.format))
    for c in res.violations:
        sys.stderr.write(f"violation: {c.name} epoch={c.epoch} {c.where} lhs={c.lhs!r} rhs={c.rhs!r}\n")
    return 1 if res.violations else 0


def cmd_suite(args: argparse.Namespace) -> int:
    insts = corpus(args.count, args.base)
    variants = [args.variant] if args.variant else list(VARIANT_NAMES)
    results = run_suite((declare_T(i) for i in insts), variants, _seed(args))
    if args.results:
        with open(args.results, "w", encoding="utf-8") as fh:
            json.dump([r.summary() for r in results], fh, sort_keys=True)
    _emit(_render(report(results), args.format), args.out)
    return 1 if any(r.violations for r in results) else 0


def cmd_report(args: argparse.Namespace) -> int:
    rows: List[dict] = []
    for path in args.inputs:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if isinstance(data, dict):
            rows.append(data["summary"])
        else:
            rows.extend(data)
    _emit(_render(report(rows), args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nwrob", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed (overridden by $ROB_SEED)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "text"), default="text")

    g = sub.add_parser("gen", parents=[common], help="generate an instance file")
    g.add_argument("--recipe", choices=RECIPES, required=True)
    g.add_argument("--M", type=int)
    g.add_argument("--k-tilde", type=int)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", parents=[common], help="run one variant on an instance file")
    r.add_argument("--instance", required=True)
    r.add_argument("--variant", choices=VARIANT_NAMES, default="randomized")
    r.add_argument("--M", type=int)
    r.add_argument("--k-tilde", type=int)
    r.add_argument("--declare-T", help="file of 's t' lines declaring the terminal pairs")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("suite", parents=[common], help="run the generated corpus")
    s.add_argument("--count", type=int, default=500)
    s.add_argument("--base", type=int, default=0, help="first instance seed")
    s.add_argument("--variant", choices=VARIANT_NAMES)
    s.add_argument("--results", help="also write per-run summaries as JSON")
    s.set_defaults(func=cmd_suite)

    p = sub.add_parser("report", parents=[common], help="aggregate saved run/suite JSON files")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NWRobError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
