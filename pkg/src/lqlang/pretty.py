"""Printers for multiplicities, types, terms and whole source files.

The output re-parses to the same AST (modulo annotations), which the test
suite checks on the shipped program corpus.
"""

from __future__ import annotations

from .syntax import (App, ArrName, ArrayLit, Branch, Case, Con, ConDecl,
                     DataDecl, IntLit, Lam, Let, LetBind, MProd, MSum, MVar,
                     MultApp, MultExpr, MultLam, One, Omega, Prim, TArray,
                     TArrow, TData, TForall, TInt, TMArray, TVar, Term, Type,
                     Var)


def show_mult(m: MultExpr, prec: int = 0) -> str:
    # prec 0 = sum position, 1 = product position, 2 = atom position
    match m:
        case One():
            return "1"
        case Omega():
            return "w"
        case MVar(name):
            return name
        case MSum(a, b):
            s = f"{show_mult(a, 0)} + {show_mult(b, 1)}"
            return f"({s})" if prec > 0 else s
        case MProd(a, b):
            s = f"{show_mult(a, 1)} * {show_mult(b, 2)}"
            return f"({s})" if prec > 1 else s
        case _:
            raise AssertionError(m)


def show_type(t: Type, prec: int = 0) -> str:
    # prec 0 = full (forall/arrow), 1 = arrow argument, 2 = atom
    match t:
        case TInt():
            return "Int"
        case TVar(name):
            return name
        case TMArray(elem):
            s = f"MArray {show_type(elem, 2)}"
            return f"({s})" if prec > 1 else s
        case TArray(elem):
            s = f"Array {show_type(elem, 2)}"
            return f"({s})" if prec > 1 else s
        case TData(name, margs, targs):
            if not margs and not targs:
                return name
            parts = [name]
            parts += [show_mult(m, 2) for m in margs]
            parts += [show_type(a, 2) for a in targs]
            s = " ".join(parts)
            return f"({s})" if prec > 1 else s
        case TArrow(dom, m, cod):
            arrow = f"->[{show_mult(m)}]"
            s = f"{show_type(dom, 1)} {arrow} {show_type(cod, 0)}"
            return f"({s})" if prec > 0 else s
        case TForall(p, body):
            s = f"forall {p}. {show_type(body, 0)}"
            return f"({s})" if prec > 0 else s
        case _:
            raise AssertionError(t)


def _insts(type_args: tuple[Type, ...], mult_args: tuple[MultExpr, ...]) -> str:
    out = ""
    if type_args:
        out += " @[" + ", ".join(show_type(a) for a in type_args) + "]"
    if mult_args:
        out += " @[" + ", ".join(show_mult(m) for m in mult_args) + "]"
    return out


def show_term(t: Term, prec: int = 0) -> str:
    # prec 0 = full, 1 = application spine, 2 = atom
    match t:
        case Var(name) | ArrName(name):
            return name
        case IntLit(value):
            return str(value)
        case Lam(m, x, a, body):
            s = f"\\[{show_mult(m)}] {x} : {show_type(a)} . {show_term(body)}"
            return f"({s})" if prec > 0 else s
        case MultLam(p, body):
            s = f"/\\{p} . {show_term(body)}"
            return f"({s})" if prec > 0 else s
        case App(fun, arg):
            s = f"{show_term(fun, 1)} {show_term(arg, 2)}"
            return f"({s})" if prec > 1 else s
        case MultApp(fun, m):
            s = f"{show_term(fun, 1)} @[{show_mult(m)}]"
            return f"({s})" if prec > 1 else s
        case Con(name, targs, margs, args):
            s = name + _insts(targs, margs)
            if args:
                s += " " + " ".join(show_term(a, 2) for a in args)
            return f"({s})" if (prec > 1 and (args or targs or margs)) else s
        case Prim(name, args):
            return f"{name}({', '.join(show_term(a) for a in args)})"
        case Case(m, scrut, branches):
            brs = " ; ".join(_show_branch(b) for b in branches)
            s = f"case[{show_mult(m)}] {show_term(scrut, 1)} of {{ {brs} }}"
            return f"({s})" if prec > 0 else s
        case Let(m, binds, body):
            bs = " , ".join(_show_bind(b) for b in binds)
            s = f"let[{show_mult(m)}] {bs} in {show_term(body)}"
            return f"({s})" if prec > 0 else s
        case ArrayLit(elems, _, frozen_tag):
            tag = "frozen" if frozen_tag else "mutable"
            return f"<{tag} array [{' '.join(elems)}]>"
        case _:
            raise AssertionError(t)


def _show_branch(b: Branch) -> str:
    head = b.con if not b.binders else b.con + " " + " ".join(b.binders)
    return f"{head} -> {show_term(b.body)}"


def _show_bind(b: LetBind) -> str:
    if b.var_ty is None:  # evaluator-internal binding
        return f"{b.var} = {show_term(b.rhs)}"
    return f"{b.var} : {show_type(b.var_ty)} = {show_term(b.rhs)}"


def show_datadecl(d: DataDecl) -> str:
    head = "data " + d.name
    if d.mult_params:
        head += " " + " ".join(d.mult_params)
    if d.type_params:
        head += " (" + " ".join(d.type_params) + ")"
    cons = " ; ".join(_show_condecl(d, c) for c in d.constructors)
    return f"{head} where {{ {cons} }}"


def _show_condecl(d: DataDecl, c: ConDecl) -> str:
    result: Type = TData(d.name,
                         tuple(MVar(p) for p in d.mult_params),
                         tuple(TVar(a) for a in d.type_params))
    sig = result
    for field_ty, field_mult in reversed(c.fields):
        sig = TArrow(field_ty, field_mult, sig)
    return f"{c.name} : {show_type(sig)}"


def show_def(name: str, ty: Type, mult: MultExpr, body: Term) -> str:
    return f"def {name} : {show_type(ty)} =[{show_mult(mult)}] {show_term(body)}"


def show_program(decls: list[DataDecl],
                 defs: list[tuple[str, Type, MultExpr, Term]],
                 main: Term) -> str:
    lines = [show_datadecl(d) for d in decls]
    lines += [show_def(*d) for d in defs]
    lines.append(f"main = {show_term(main)}")
    return "\n".join(lines) + "\n"


def summarize(t: Term, limit: int = 60) -> str:
    """One-line redex summary for traces and error reports."""
    s = show_term(t)
    return s if len(s) <= limit else s[: limit - 3] + "..."
