"""Command-line driver: check, run and fuzz over ``.lq`` files.

Exit codes are the machine contract: 0 success, 1 rejection / non-value
outcome / disagreement / fuzz violation, 2 usage or I/O error.
Diagnostics always go to the error stream.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Optional

from .diagnostics import CheckError
from .eval_ordinary import Heap, eval_term
from .eval_pure import eval_pure, initial_state
from .harness import (GenConfig, deep_force_ordinary, deep_force_pure, fuzz,
                      is_ground_type)
from .parser import SourceFile, parse_prelude, parse_program, prelude_source
from .pretty import show_term, show_type
from .runtime import Outcome, OutcomeKind, TraceRecord
from .syntax import OMEGA, Term
from .translate import to_sharing
from .typecheck import TypeEnv, check_program, elaborate_defs

DEFAULT_FUEL = 100_000


def _load_prelude() -> SourceFile:
    override = os.environ.get("LLQ_PRELUDE")
    if override:
        text = open(override, "r", encoding="utf-8").read()
        return parse_program(text, source=override, require_main=False)
    return parse_prelude(prelude_source())


def _load(path: str, no_prelude: bool) -> SourceFile:
    text = open(path, "r", encoding="utf-8").read()
    base = None if no_prelude else _load_prelude()
    return parse_program(text, source=path, base=base)


def _tree_text(tree) -> str:
    match tree:
        case ("int", n):
            return str(n)
        case ("con", name, children):
            if not children:
                return name
            parts = [name]
            for c in children:
                s = _tree_text(c)
                parts.append(f"({s})" if " " in s else s)
            return " ".join(parts)
        case ("opaque", kind):
            return f"<{kind}>"
    return str(tree)


def _json_outcome(outcome: Outcome, semantics: str, value_text: Optional[str],
                  trace: Optional[list[TraceRecord]]) -> dict:
    out: dict = {
        "outcome": outcome.kind.value,
        "steps": outcome.steps,
        "semantics": semantics,
    }
    if value_text is not None:
        out["value"] = value_text
    if trace is not None:
        out["trace"] = [{"rule": r.rule, "redex": r.redex} for r in trace]
    return out


def cmd_check(args: argparse.Namespace) -> int:
    sf = _load(args.file, args.no_prelude)
    try:
        checked = check_program(sf.decls, sf.defs, sf.main)
    except CheckError as exc:
        for d in exc.diagnostics:
            print(f"{sf.source}:{d}", file=sys.stderr)
        return 1
    print(f"main : {show_type(checked.ty)}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    sf = _load(args.file, args.no_prelude)
    semantics = (["ordinary", "pure"] if args.sem == "both" else [args.sem])

    if args.no_typecheck:
        if args.sem != "ordinary":
            print("--no-typecheck supports only --sem=ordinary (the pure "
                  "semantics needs type annotations)", file=sys.stderr)
            return 2
        env = TypeEnv.from_decls(sf.decls)
        program = elaborate_defs(sf.defs, sf.main)
        sharing = to_sharing(program, env, untyped_arrow_mult=OMEGA)
        checked_ty = None
        checked_env = env
    else:
        try:
            checked = check_program(sf.decls, sf.defs, sf.main)
        except CheckError as exc:
            for d in exc.diagnostics:
                print(f"{sf.source}:{d}", file=sys.stderr)
            return 1
        sharing = to_sharing(checked.term, checked.env)
        checked_ty = checked.ty
        checked_env = checked.env

    ground = (checked_ty is not None
              and is_ground_type(checked_ty, checked_env))
    results = []
    for sem in semantics:
        if sem == "ordinary":
            res = eval_term(Heap(), sharing, args.fuel,
                            want_trace=args.trace)
            tree = None
            if res.outcome.is_value and ground:
                tree, ok = deep_force_ordinary(res, res.outcome.value,
                                               args.fuel)
                if not ok:
                    tree = None
            text = (_tree_text(tree) if tree is not None
                    else show_term(res.outcome.value)
                    if res.outcome.is_value else None)
            results.append((sem, res.outcome, tree, text,
                            res.trace if args.trace else None))
        else:
            assert checked_ty is not None
            state = initial_state(sharing, checked_ty, checked_env)
            pres = eval_pure(state, args.fuel, want_trace=args.trace)
            tree = None
            if pres.outcome.is_value and ground:
                tree, ok = deep_force_pure(pres, pres.outcome.value,
                                           checked_env, args.fuel)
                if not ok:
                    tree = None
            text = (_tree_text(tree) if tree is not None
                    else show_term(pres.outcome.value)
                    if pres.outcome.is_value else None)
            results.append((sem, pres.outcome, tree, text,
                            pres.trace if args.trace else None))

    if args.json:
        blobs = [_json_outcome(outcome, sem, text, trace)
                 for sem, outcome, _, text, trace in results]
        print(json.dumps(blobs if len(blobs) > 1 else blobs[0], indent=2))
    else:
        for sem, outcome, _, text, trace in results:
            prefix = f"[{sem}] " if len(results) > 1 else ""
            if trace:
                for r in trace:
                    print(f"{prefix}  {r.rule:<16} {r.redex}")
            if outcome.is_value:
                print(f"{prefix}{text}")
            else:
                print(f"{prefix}{outcome.describe()}")

    if len(results) == 2:
        (_, o1, t1, _, _), (_, o2, t2, _, _) = results
        agree = (o1.kind == o2.kind and t1 == t2) if ground \
            else o1.kind == o2.kind
        if not agree:
            print("semantics disagree", file=sys.stderr)
            return 1
        return 0 if o1.kind is OutcomeKind.VALUE else 1
    return 0 if results[0][1].kind is OutcomeKind.VALUE else 1


def cmd_fuzz(args: argparse.Namespace) -> int:
    cfg = GenConfig(seed=args.seed, max_depth=args.depth,
                    array_prob=args.array_prob)
    summary = fuzz(cfg, args.count, args.fuel, repro_dir=args.repro_dir)
    if args.json:
        print(json.dumps(summary.to_json(), indent=2))
    else:
        print(summary.table())
        for path in summary.reproducers:
            print(f"reproducer: {path}", file=sys.stderr)
    return 0 if summary.clean else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lq", description="Linearity checker and twin evaluators for "
                               ".lq programs")
    sub = ap.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="typecheck a program")
    p_check.add_argument("file")
    p_check.add_argument("--no-prelude", action="store_true")
    p_check.set_defaults(fn=cmd_check)

    p_run = sub.add_parser("run", help="evaluate a program")
    p_run.add_argument("file")
    p_run.add_argument("--sem", choices=["ordinary", "pure", "both"],
                       default="ordinary")
    p_run.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p_run.add_argument("--trace", action="store_true")
    p_run.add_argument("--json", action="store_true")
    p_run.add_argument("--no-prelude", action="store_true")
    p_run.add_argument("--no-typecheck", action="store_true",
                       help="debug: skip the typechecker and run the "
                            "in-place evaluator on an unchecked program")
    p_run.set_defaults(fn=cmd_run)

    p_fuzz = sub.add_parser("fuzz", help="differential fuzzing")
    p_fuzz.add_argument("--count", type=int, default=100)
    p_fuzz.add_argument("--seed", type=int, default=0)
    p_fuzz.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p_fuzz.add_argument("--depth", type=int, default=5)
    p_fuzz.add_argument("--array-prob", type=float, default=0.3)
    p_fuzz.add_argument("--repro-dir", default=None)
    p_fuzz.add_argument("--json", action="store_true")
    p_fuzz.set_defaults(fn=cmd_fuzz)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    sys.setrecursionlimit(20_000)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except CheckError as exc:
        for d in exc.diagnostics:
            print(str(d), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
