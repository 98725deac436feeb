"""Type-directed sharing translation.

Rewrites a typed term so that every application, constructor and primitive
argument is a variable; laziness then amounts to heap bindings.  A
non-variable application argument is let-bound at the arrow multiplicity
recorded on the application node; constructor and primitive arguments are
let-bound at their declared field/argument multiplicities.  Arguments that
are already variables pass through unchanged, which makes the translation
idempotent.
"""

from __future__ import annotations

import dataclasses

from .syntax import (App, Case, Con, Lam, Let, LetBind, MultApp, MultExpr,
                     MultLam, Prim, Term, Var, subterms)
from .typecheck import PRIM_ARG_MULTS, TypeEnv, instantiate_con

FRESH_PREFIX = "%s"  # unutterable in surface syntax


def to_sharing(t: Term, env: TypeEnv,
               untyped_arrow_mult: MultExpr | None = None) -> Term:
    """Translate an annotated term (as produced by ``infer``) into sharing
    form.  Fresh names are drawn deterministically from a reserved
    namespace, so equal inputs give equal outputs.

    ``untyped_arrow_mult`` is a fallback for un-annotated application
    nodes; it is only used when translating deliberately unchecked
    programs for the in-place evaluator, which ignores let multiplicities
    anyway.
    """
    counter = 0

    def fresh() -> str:
        nonlocal counter
        name = f"{FRESH_PREFIX}{counter}"
        counter += 1
        return name

    def saturate(t: Term, args: tuple[Term, ...],
                 mults: list[MultExpr]) -> Term:
        new_args: list[Term] = []
        lets: list[tuple[str, Term, MultExpr]] = []
        for arg, mult in zip(args, mults):
            if isinstance(arg, Var):
                new_args.append(arg)
            else:
                y = fresh()
                lets.append((y, go(arg), mult))
                new_args.append(Var(y, ty=arg.ty))
        core = dataclasses.replace(t, args=tuple(new_args))
        for y, rhs, mult in reversed(lets):
            core = Let(mult=mult, binds=(LetBind(y, rhs.ty, rhs),),
                       body=core, ty=t.ty)
        return core

    def go(t: Term) -> Term:
        match t:
            case Var():
                return t
            case Lam():
                return dataclasses.replace(t, body=go(t.body))
            case MultLam():
                return dataclasses.replace(t, body=go(t.body))
            case MultApp():
                return dataclasses.replace(t, fun=go(t.fun))
            case App(fun, arg):
                fun2 = go(fun)
                if isinstance(arg, Var):
                    return dataclasses.replace(t, fun=fun2)
                mult = t.mult_ann if t.mult_ann is not None \
                    else untyped_arrow_mult
                assert mult is not None, "translation needs a typed term"
                y = fresh()
                rhs = go(arg)
                app = dataclasses.replace(t, fun=fun2, arg=Var(y, ty=arg.ty))
                return Let(mult=mult,
                           binds=(LetBind(y, arg.ty, rhs),),
                           body=app, ty=t.ty)
            case Con(name, targs, margs, args):
                if not args:
                    return t
                fields, _ = instantiate_con(env, name, targs, margs, t.loc)
                return saturate(t, args, [fm for _, fm in fields])
            case Prim(name, args):
                return saturate(t, args, list(PRIM_ARG_MULTS[name]))
            case Case():
                return dataclasses.replace(
                    t, scrut=go(t.scrut),
                    branches=tuple(dataclasses.replace(b, body=go(b.body))
                                   for b in t.branches))
            case Let():
                return dataclasses.replace(
                    t, binds=tuple(dataclasses.replace(b, rhs=go(b.rhs))
                                   for b in t.binds),
                    body=go(t.body))
            case _:
                return t

    return go(t)


def is_sharing(t: Term) -> bool:
    """Every application/constructor/primitive argument is a variable."""
    for s in subterms(t):
        match s:
            case App(_, arg):
                if not isinstance(arg, Var):
                    return False
            case Con(_, _, _, args) | Prim(_, args):
                if not all(isinstance(a, Var) for a in args):
                    return False
            case _:
                pass
    return True
