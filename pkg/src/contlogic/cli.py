"""Command-line front end.

Reports go to standard output as JSON (or to ``--output``); a one-line human
summary goes to standard error.  Exit codes: 0 success, 1 mismatch, 2 usage
error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources

from . import diagrams, infinitary, verify
from .hierarchy import RelationTable, encode_exists_check, encode_forall_check
from .logic import ParseError, classify_prenex, parse_formula
from .numerics import Dyadic
from .structures import (RelationFamily, make_interval_structure, make_lower_bound_structure,
                         sample_family)

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_UNKNOWN = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    structure: str = "discrete"
    family: str | None = None
    range: int | None = None
    K: int = 10
    k: int = 10
    points: int = 16
    steps: int = 200_000
    truncation: int = 8
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.structure not in ("discrete", "interval"):
            raise UsageError(f"unknown structure {self.structure!r}")
        for name in ("K", "k", "truncation"):
            if getattr(self, name) < 0:
                raise UsageError(f"--{name} must be non-negative")
        if self.points < 1 or self.steps < 1:
            raise UsageError("budget must be at least 1")
        if self.range is not None and self.range < 0:
            raise UsageError("--range must be non-negative")

    @property
    def budget(self) -> diagrams.Budget:
        return diagrams.Budget(self.points, self.k, self.steps)


def _family(cfg: RunConfig) -> RelationFamily:
    return RelationFamily.load(cfg.family) if cfg.family else sample_family()


def _structure(cfg: RunConfig):
    if cfg.structure == "interval":
        return make_interval_structure(_family(cfg) if cfg.family else None)
    return make_lower_bound_structure(_family(cfg))


def _formula(args, M):
    if args.formula_file:
        with open(args.formula_file) as fh:
            text = fh.read()
    elif args.formula:
        text = args.formula
    else:
        raise UsageError("give --formula or --formula-file")
    return parse_formula(text.strip(), M.signature)


def _dyadic(text: str) -> Dyadic:
    try:
        return Dyadic.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_eval(args, cfg):
    M = _structure(cfg)
    phi = _formula(args, M)
    enc = diagrams.eval_enclosure(M, phi, cfg.budget)
    report = {"command": "eval", "structure": cfg.structure, "formula": args.formula or args.formula_file,
              "class": str(classify_prenex(phi)), "k": cfg.k, "enclosure": enc.to_json(),
              "pinned": enc.pinned}
    return report, EXIT_OK, f"enclosure {enc}"


def cmd_diagram(args, cfg):
    M = _structure(cfg)
    phi = _formula(args, M)
    q = _dyadic(args.q)
    verdict = diagrams.diagram_check(M, phi, q, args.mode, cfg.budget)
    report = {"command": "diagram", "structure": cfg.structure, "class": str(classify_prenex(phi)),
              "q": str(q), "mode": args.mode, "verdict": verdict.to_json()}
    code = EXIT_UNKNOWN if verdict.status == diagrams.UNKNOWN else EXIT_OK
    return report, code, f"{args.mode} diagram at {q}: {verdict.status}"


def cmd_encode_check(args, cfg):
    if not args.table:
        raise UsageError("give --table")
    R = RelationTable.load(args.table)
    if R.arity < 2:
        raise UsageError("encode-check needs a table of arity N + 2 >= 2")
    n_max = args.n_max if args.n_max is not None else R.bound + 3
    rows, mismatches = [], 0
    for n in range(n_max):
        fa, ex, least = verify.encode_with_retry(R, n)
        row = {"n": n, "forall_member": fa, "exists_member": ex, "least_range": least}
        if cfg.range is not None:
            r = max(cfg.range, R.bound)
            row["range"] = r
            row["forall_check"] = encode_forall_check(R, n, r)
            row["exists_check"] = encode_exists_check(R, n, r)
            bad = (args.mode in ("forall", "both") and row["forall_check"] != fa) or \
                  (args.mode in ("exists", "both") and row["exists_check"] != ex)
        else:
            bad = least is None
        mismatches += bad
        rows.append(row)
    report = {"command": "encode-check", "mode": args.mode, "arity": R.arity, "bound": R.bound,
              "instances": len(rows), "mismatches": mismatches, "rows": rows}
    return report, EXIT_MISMATCH if mismatches else EXIT_OK, f"{len(rows)} parameters, {mismatches} mismatches"


def cmd_verify_lemmas(args, cfg):
    names = list(verify.LEMMAS) if args.lemma == "all" else [args.lemma]
    results = []
    for name in names:
        if name == "carry":
            results.append(verify.verify_carry(cfg.K, K_min=0 if args.all_K else cfg.K))
        elif name in ("inf-sup", "forall-star", "encode", "swap"):
            kwargs = {"seed": cfg.seed}
            if args.samples is not None:
                kwargs["samples"] = args.samples
            results.append(verify.LEMMAS[name](**kwargs))
        else:
            results.append(verify.LEMMAS[name]())
    failed = sum(r["failure_count"] for r in results)
    for r in results:
        r["status"] = "pass" if r["failure_count"] == 0 else "fail"
    summary = ", ".join(f"{r['lemma']} {r['status']} ({r['instances']})" for r in results)
    return {"command": "verify-lemmas", "seed": cfg.seed, "results": results}, \
        EXIT_MISMATCH if failed else EXIT_OK, summary


def _load_code(args, M):
    if not args.code:
        raise UsageError("give --code")
    with open(args.code) as fh:
        return infinitary.code_from_json(json.load(fh), M.signature)


def cmd_inf_eval(args, cfg):
    M = make_interval_structure(_family(cfg) if cfg.family else None)
    code = _load_code(args, M)
    enc = infinitary.eval_inf(M, code, cfg.truncation, cfg.budget)
    report = {"command": "inf-eval", "truncation": cfg.truncation, "enclosure": enc.to_json(),
              "pinned": enc.pinned}
    return report, EXIT_OK, f"enclosure {enc} at truncation {cfg.truncation}"


def cmd_cut_check(args, cfg):
    M = make_interval_structure(_family(cfg) if cfg.family else None)
    code = _load_code(args, M)
    q = _dyadic(args.q)
    verdict = infinitary.cut_check(M, code, q, args.relation, cfg.truncation, cfg.budget)
    report = {"command": "cut-check", "q": str(q), "relation": args.relation, "verdict": verdict.to_json()}
    code_ = EXIT_UNKNOWN if verdict.status == diagrams.UNKNOWN else EXIT_OK
    return report, code_, f"q {args.relation} value: {verdict.status}"


def cmd_cross_check(args, cfg):
    fam = _family(cfg)
    points = max(cfg.points, 64)
    report = diagrams.cross_check_lower_bounds(fam, args.N_max, args.n_max, diagrams.Budget(points, cfg.k, cfg.steps))
    report["command"] = "cross-check"
    bad = len(report["mismatches"])
    return report, EXIT_MISMATCH if bad else EXIT_OK, f"{report['instances']} instances, {bad} mismatches"


COMMANDS = {
    "eval": cmd_eval,
    "diagram": cmd_diagram,
    "encode-check": cmd_encode_check,
    "verify-lemmas": cmd_verify_lemmas,
    "inf-eval": cmd_inf_eval,
    "cut-check": cmd_cut_check,
    "cross-check": cmd_cross_check,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--structure", default="discrete", choices=("discrete", "interval"))
    common.add_argument("--family", help="relation family JSON (default: the shipped sample family)")
    common.add_argument("--range", type=int, help="quantifier range bound")
    common.add_argument("--K", type=int, default=10, help="series truncation")
    common.add_argument("--k", type=int, default=10, help="precision exponent")
    common.add_argument("--points", type=int, default=16, help="rational points per quantifier")
    common.add_argument("--steps", type=int, default=200_000, help="inner evaluation budget")
    common.add_argument("--T", dest="truncation", type=int, default=8, help="stream truncation")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", help="write the JSON report here instead of stdout")

    parser = _Parser(prog="contlogic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("eval", "diagram"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--formula")
        p.add_argument("--formula-file")
        if name == "diagram":
            p.add_argument("--q", required=True)
            p.add_argument("--mode", choices=("closed", "open"), default="closed")
    p = sub.add_parser("encode-check", parents=[common])
    p.add_argument("--table")
    p.add_argument("--mode", choices=("forall", "exists", "both"), default="both")
    p.add_argument("--n-max", type=int)
    p = sub.add_parser("verify-lemmas", parents=[common])
    p.add_argument("--lemma", default="all", choices=("all", *verify.LEMMAS))
    p.add_argument("--samples", type=int)
    p.add_argument("--all-K", action="store_true", help="carry: check every K up to --K")
    for name in ("inf-eval", "cut-check"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--code")
        if name == "cut-check":
            p.add_argument("--q", required=True)
            p.add_argument("--relation", choices=(">", ">="), default=">")
    p = sub.add_parser("cross-check", parents=[common])
    p.add_argument("--N-max", type=int, default=2)
    p.add_argument("--n-max", type=int, default=8)
    return parser


def sample_family_path() -> str:
    return str(resources.files("contlogic").joinpath("data", "sample_family.json"))


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig(args.structure, args.family, args.range, args.K, args.k, args.points, args.steps,
                        args.truncation, args.seed, args.output)
        report, code, summary = COMMANDS[args.command](args, cfg)
    except (UsageError, ParseError, FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(report, sort_keys=True, indent=2)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    print(summary, file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
