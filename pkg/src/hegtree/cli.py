"""Command line entry point: ``hegtree <subcommand> ...``.

Exit codes: 0 all checks pass, 1 a verification failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import bigword as bw
from .acyl import SampleSpec, acyl_profile, bowditch_bound_check, verify_kn_acylindrical
from .groupcore import GroupError
from .harness import (
    NestingPlan,
    PlanError,
    Report,
    _stamp,
    estimate_constants_report,
    load_group,
    probe_elliptic_radical,
    resolve_path,
    run_theorem_a,
    verify_lemmas,
)
from .treeact import TreeAction


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all sampling")
    common.add_argument("--out", default=os.environ.get("HEGTREE_OUT"),
                        help="directory for the JSON report and CSV tables")

    p = _Parser(prog="hegtree", description="Tree actions, acylindricity and big words.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("verify-lemmas", parents=[common], help="run every invariant suite")
    s.add_argument("--group", default="zmod2_star_zmod3.json")

    s = sub.add_parser("theorem-a", parents=[common], help="nested-word growth chain")
    s.add_argument("--plan", required=True)
    s.add_argument("--depth", type=int)

    s = sub.add_parser("acyl-check", parents=[common], help="(k,n)-acylindricity and Bowditch counts")
    s.add_argument("--group", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--radius", type=int, default=8)
    s.add_argument("--sigma", type=int, nargs="*", default=[],
                   help="also run the Bowditch count for these sigma values")
    s.add_argument("--profile", action="store_true", help="add an (epsilon, R, N) profile on the same ball")

    s = sub.add_parser("estimate-constants", parents=[common], help="ball estimates of the product constants")
    s.add_argument("--group", required=True)
    s.add_argument("--word-length", type=int, default=4)
    s.add_argument("--max-exponent", type=int, default=4)
    s.add_argument("--samples", type=int, default=200)

    s = sub.add_parser("bigword", parents=[common], help="project a big-word scheme")
    s.add_argument("--scheme", required=True)
    s.add_argument("--project", type=int, required=True)

    s = sub.add_parser("probe-radical", parents=[common], help="find a Gamma_n where a word is loxodromic")
    s.add_argument("--scheme", required=True)
    s.add_argument("--nmax", type=int, required=True)
    s.add_argument("--m", type=int, help="truncation level (default: largest letter index)")
    return p


def _load_scheme(name) -> bw.BigWord:
    with open(resolve_path(name)) as fh:
        return bw.from_json(json.load(fh))


def _run(args) -> Report:
    if args.command == "verify-lemmas":
        return verify_lemmas(load_group(args.group), seed=args.seed, group_name=args.group)

    if args.command == "theorem-a":
        plan = NestingPlan.load(args.plan)
        return run_theorem_a(plan, args.depth or plan.max_depth)

    if args.command == "acyl-check":
        started = time.perf_counter()
        action = TreeAction(load_group(args.group))
        kn = verify_kn_acylindrical(action, args.k, args.n, args.radius)
        rep = Report("acyl_check", {"group": args.group, "k": args.k, "n": args.n,
                                    "radius": args.radius, "sigma": args.sigma},
                     tables={"kn": [kn.to_json()]}, verdicts={"kn_acylindrical": kn.ok},
                     provenance={"kn": "exact"})
        if kn.ok:
            for sigma in args.sigma:
                b = bowditch_bound_check(action, sigma, args.k, args.n, args.radius)
                row = b.to_json()
                rep.tables.setdefault("bowditch", []).append(row)
                rep.verdicts[f"bowditch_sigma_{sigma}"] = b.violations == 0
                rep.provenance[f"bowditch_sigma_{sigma}"] = f"exact on radius {args.radius} ({b.status})"
            if args.profile:
                rep.tables["profile"] = acyl_profile(action, args.k, args.n, args.radius).to_json()
        return _stamp(rep, started)

    if args.command == "estimate-constants":
        sample = SampleSpec(args.word_length, args.max_exponent, args.samples, args.seed)
        return estimate_constants_report(load_group(args.group), sample, args.group)

    if args.command == "bigword":
        started = time.perf_counter()
        w = _load_scheme(args.scheme)
        p = bw.project(w, args.project)
        rep = Report("bigword", {"scheme": args.scheme, "project": args.project},
                     tables={"projection": [{"level": p.level, "word": str(p), "letters": len(p.word)}]},
                     provenance={"projection": "exact"})
        return _stamp(rep, started)

    if args.command == "probe-radical":
        started = time.perf_counter()
        w = _load_scheme(args.scheme)
        m = args.m if args.m is not None else max(bw.support_max(w), 1)
        res = probe_elliptic_radical(w, args.nmax, m)
        rep = Report("probe_radical", {"scheme": args.scheme, "nmax": args.nmax, "m": m},
                     tables={"trace": [{"n": n, "class": c} for n, c in res.trace]},
                     verdicts={"witness_found": res.status == "witness"},
                     provenance={"classification": "exact"})
        rep.tables["result"] = [{"status": res.status, "n": res.n}]
        return _stamp(rep, started)
    raise _UsageError(f"unknown command {args.command}")


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:          # --help
        return int(exc.code or 0)
    try:
        rep = _run(args)
    except (OSError, ValueError, KeyError, GroupError, PlanError, json.JSONDecodeError) as exc:
        print(f"hegtree: input error: {exc}", file=sys.stderr)
        return 2
    print(rep.to_json())
    if args.out:
        for path in rep.write(Path(args.out)):
            print(f"wrote {path}", file=sys.stderr)
    return 0 if rep.ok else 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
