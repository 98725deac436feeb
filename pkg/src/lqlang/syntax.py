"""Abstract syntax: multiplicity expressions, types, terms, datatype declarations.

All nodes are immutable. Structural equality ignores the annotation slots
(``loc``, ``ty``, ``mult_ann``, ``uid``) so that two terms compare equal
regardless of source position or typechecker output.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator, Optional


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# Multiplicity expressions

class MultExpr:
    """One of: 1, w, a variable, a sum, or a product."""

    __slots__ = ()


@dataclass(frozen=True)
class One(MultExpr):
    pass


@dataclass(frozen=True)
class Omega(MultExpr):
    pass


@dataclass(frozen=True)
class MVar(MultExpr):
    name: str


@dataclass(frozen=True)
class MSum(MultExpr):
    left: MultExpr
    right: MultExpr


@dataclass(frozen=True)
class MProd(MultExpr):
    left: MultExpr
    right: MultExpr


ONE = One()
OMEGA = Omega()


def mult_vars(m: MultExpr) -> frozenset[str]:
    match m:
        case MVar(name):
            return frozenset((name,))
        case MSum(a, b) | MProd(a, b):
            return mult_vars(a) | mult_vars(b)
        case _:
            return frozenset()


def mult_subst(m: MultExpr, var: str, by: MultExpr) -> MultExpr:
    """Substitute ``by`` for the multiplicity variable ``var`` in ``m``."""
    match m:
        case MVar(name) if name == var:
            return by
        case MSum(a, b):
            return MSum(mult_subst(a, var, by), mult_subst(b, var, by))
        case MProd(a, b):
            return MProd(mult_subst(a, var, by), mult_subst(b, var, by))
        case _:
            return m


def _mult_class(m: MultExpr):
    # 1, "w", or None for anything containing a variable.  Sound because
    # no semiring law ever eliminates a variable from an expression.
    match m:
        case One():
            return 1
        case Omega():
            return "w"
        case MVar(_):
            return None
        case MSum(a, b):
            ca, cb = _mult_class(a), _mult_class(b)
            return None if ca is None or cb is None else "w"
        case MProd(a, b):
            ca, cb = _mult_class(a), _mult_class(b)
            if ca == 1:
                return cb
            if cb == 1:
                return ca
            if ca == "w" and cb == "w":
                return "w"
            return None
        case _:
            raise AssertionError(m)


def is_omega_mult(m: MultExpr) -> bool:
    """Does ``m`` normalize to exactly w?  Only w let-groups are
    recursive, so this decides binder scoping inside let right-hand
    sides."""
    return _mult_class(m) == "w"


# ---------------------------------------------------------------------------
# Types

class Type:
    __slots__ = ()


@dataclass(frozen=True)
class TInt(Type):
    pass


@dataclass(frozen=True)
class TVar(Type):
    """A datatype parameter; only legal inside a datatype declaration."""

    name: str


@dataclass(frozen=True)
class TArrow(Type):
    dom: Type
    mult: MultExpr
    cod: Type


@dataclass(frozen=True)
class TForall(Type):
    var: str
    body: Type


@dataclass(frozen=True)
class TData(Type):
    name: str
    mult_args: tuple[MultExpr, ...] = ()
    type_args: tuple[Type, ...] = ()


@dataclass(frozen=True)
class TMArray(Type):
    elem: Type


@dataclass(frozen=True)
class TArray(Type):
    elem: Type


INT = TInt()


def type_mult_vars(t: Type) -> frozenset[str]:
    """Free multiplicity variables of a type (forall binds)."""
    match t:
        case TArrow(dom, m, cod):
            return type_mult_vars(dom) | mult_vars(m) | type_mult_vars(cod)
        case TForall(p, body):
            return type_mult_vars(body) - {p}
        case TData(_, margs, targs):
            out: frozenset[str] = frozenset()
            for m in margs:
                out |= mult_vars(m)
            for a in targs:
                out |= type_mult_vars(a)
            return out
        case TMArray(elem) | TArray(elem):
            return type_mult_vars(elem)
        case _:
            return frozenset()


def type_subst_mult(t: Type, var: str, by: MultExpr) -> Type:
    """Capture-avoiding substitution of a multiplicity into a type."""
    match t:
        case TArrow(dom, m, cod):
            return TArrow(type_subst_mult(dom, var, by),
                          mult_subst(m, var, by),
                          type_subst_mult(cod, var, by))
        case TForall(p, body):
            if p == var:
                return t
            if p in mult_vars(by):
                fresh = _fresh_against(p, mult_vars(by) | type_mult_vars(body))
                body = type_subst_mult(body, p, MVar(fresh))
                return TForall(fresh, type_subst_mult(body, var, by))
            return TForall(p, type_subst_mult(body, var, by))
        case TData(name, margs, targs):
            return TData(name,
                         tuple(mult_subst(m, var, by) for m in margs),
                         tuple(type_subst_mult(a, var, by) for a in targs))
        case TMArray(elem):
            return TMArray(type_subst_mult(elem, var, by))
        case TArray(elem):
            return TArray(type_subst_mult(elem, var, by))
        case _:
            return t


def type_subst_tvars(t: Type, mapping: dict[str, Type]) -> Type:
    """Instantiate datatype parameters; mapping values contain no TVar."""
    match t:
        case TVar(name):
            return mapping.get(name, t)
        case TArrow(dom, m, cod):
            return TArrow(type_subst_tvars(dom, mapping), m,
                          type_subst_tvars(cod, mapping))
        case TForall(p, body):
            return TForall(p, type_subst_tvars(body, mapping))
        case TData(name, margs, targs):
            return TData(name, margs,
                         tuple(type_subst_tvars(a, mapping) for a in targs))
        case TMArray(elem):
            return TMArray(type_subst_tvars(elem, mapping))
        case TArray(elem):
            return TArray(type_subst_tvars(elem, mapping))
        case _:
            return t


def _fresh_against(base: str, taken: frozenset[str]) -> str:
    i = 0
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


# ---------------------------------------------------------------------------
# Terms

_ANN = dict(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Term:
    loc: Optional[Loc] = field(**_ANN)
    ty: Optional[Type] = field(**_ANN)


@dataclass(frozen=True)
class Var(Term):
    name: str = ""


@dataclass(frozen=True)
class IntLit(Term):
    value: int = 0


@dataclass(frozen=True)
class Lam(Term):
    mult: MultExpr = ONE
    var: str = ""
    var_ty: Type = INT
    body: Term = None  # type: ignore[assignment]


@dataclass(frozen=True)
class App(Term):
    fun: Term = None  # type: ignore[assignment]
    arg: Term = None  # type: ignore[assignment]
    # Arrow multiplicity of `fun`, recorded by the typechecker.
    mult_ann: Optional[MultExpr] = field(**_ANN)


@dataclass(frozen=True)
class MultLam(Term):
    param: str = ""
    body: Term = None  # type: ignore[assignment]


@dataclass(frozen=True)
class MultApp(Term):
    fun: Term = None  # type: ignore[assignment]
    mult: MultExpr = ONE


@dataclass(frozen=True)
class Con(Term):
    name: str = ""
    type_args: tuple[Type, ...] = ()
    mult_args: tuple[MultExpr, ...] = ()
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Branch:
    con: str
    binders: tuple[str, ...]
    body: Term
    loc: Optional[Loc] = field(**_ANN)


@dataclass(frozen=True)
class Case(Term):
    mult: MultExpr = ONE
    scrut: Term = None  # type: ignore[assignment]
    branches: tuple[Branch, ...] = ()


@dataclass(frozen=True)
class LetBind:
    var: str
    # None only on evaluator-internal bindings, which are never typechecked.
    var_ty: Optional[Type]
    rhs: Term
    loc: Optional[Loc] = field(**_ANN)


@dataclass(frozen=True)
class Let(Term):
    mult: MultExpr = ONE
    binds: tuple[LetBind, ...] = ()
    body: Term = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Prim(Term):
    name: str = ""
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class ArrName(Term):
    """Reference to a heap array cell; created only by the in-place evaluator."""

    name: str = ""


_array_uid = 0


def _next_uid() -> int:
    global _array_uid
    _array_uid += 1
    return _array_uid


@dataclass(frozen=True)
class ArrayLit(Term):
    """An array value (element variables); created only by the pure evaluator."""

    elems: tuple[str, ...] = ()
    elem_ty: Type = INT
    frozen_tag: bool = False
    uid: int = field(default=0, compare=False, repr=False, kw_only=True)


def array_lit(elems: tuple[str, ...], elem_ty: Type, frozen_tag: bool,
              ty: Optional[Type] = None) -> ArrayLit:
    """Allocate an array value with a fresh identity tag."""
    return ArrayLit(elems=elems, elem_ty=elem_ty, frozen_tag=frozen_tag,
                    uid=_next_uid(), ty=ty)


@dataclass(frozen=True)
class DataDecl:
    name: str
    mult_params: tuple[str, ...]
    type_params: tuple[str, ...]
    constructors: tuple[ConDecl, ...]
    loc: Optional[Loc] = field(**_ANN)


@dataclass(frozen=True)
class ConDecl:
    name: str
    fields: tuple[tuple[Type, MultExpr], ...]
    loc: Optional[Loc] = field(**_ANN)


def is_whnf(t: Term) -> bool:
    """Weak-head forms: the values of both dynamic semantics."""
    match t:
        case Lam() | MultLam() | IntLit() | ArrName() | ArrayLit():
            return True
        case Con(_, _, _, args):
            return all(isinstance(a, Var) for a in args)
        case _:
            return False


def subterms(t: Term) -> Iterator[Term]:
    """The term and all of its descendants, pre-order."""
    yield t
    match t:
        case Lam(_, _, _, body) | MultLam(_, body):
            yield from subterms(body)
        case App(fun, arg):
            yield from subterms(fun)
            yield from subterms(arg)
        case MultApp(fun, _):
            yield from subterms(fun)
        case Con(_, _, _, args) | Prim(_, args):
            for a in args:
                yield from subterms(a)
        case Case(_, scrut, branches):
            yield from subterms(scrut)
            for b in branches:
                yield from subterms(b.body)
        case Let(_, binds, body):
            for b in binds:
                yield from subterms(b.rhs)
            yield from subterms(body)
        case _:
            pass


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(name):
            return frozenset((name,))
        case Lam(_, x, _, body):
            return free_vars(body) - {x}
        case App(fun, arg):
            return free_vars(fun) | free_vars(arg)
        case MultApp(fun, _):
            return free_vars(fun)
        case MultLam(_, body):
            return free_vars(body)
        case Con(_, _, _, args) | Prim(_, args):
            out: frozenset[str] = frozenset()
            for a in args:
                out |= free_vars(a)
            return out
        case Case(_, scrut, branches):
            out = free_vars(scrut)
            for b in branches:
                out |= free_vars(b.body) - frozenset(b.binders)
            return out
        case Let(mult, binds, body):
            bound = frozenset(b.var for b in binds)
            rhs_bound = bound if is_omega_mult(mult) else frozenset()
            out = free_vars(body) - bound
            for b in binds:
                out |= free_vars(b.rhs) - rhs_bound
            return out
        case ArrayLit(elems):
            return frozenset(elems)
        case _:
            return frozenset()


def rename_vars(t: Term, mapping: dict[str, str]) -> Term:
    """Variable-for-variable substitution; binders shadow the mapping.

    Both evaluators only ever substitute variables for variables (beta,
    case selection, let freshening), so no capture check is needed beyond
    shadowing: replacement names are always globally fresh or already bound
    in an enclosing scope.
    """
    if not mapping:
        return t
    match t:
        case Var(name):
            new = mapping.get(name)
            return dataclasses.replace(t, name=new) if new else t
        case Lam(_, x, _, body):
            inner = {k: v for k, v in mapping.items() if k != x}
            return dataclasses.replace(t, body=rename_vars(body, inner))
        case App(fun, arg):
            return dataclasses.replace(t, fun=rename_vars(fun, mapping),
                                       arg=rename_vars(arg, mapping))
        case MultApp(fun, _):
            return dataclasses.replace(t, fun=rename_vars(fun, mapping))
        case MultLam(_, body):
            return dataclasses.replace(t, body=rename_vars(body, mapping))
        case Con(_, _, _, args):
            return dataclasses.replace(
                t, args=tuple(rename_vars(a, mapping) for a in args))
        case Prim(_, args):
            return dataclasses.replace(
                t, args=tuple(rename_vars(a, mapping) for a in args))
        case Case(_, scrut, branches):
            new_branches = []
            for b in branches:
                inner = {k: v for k, v in mapping.items() if k not in b.binders}
                new_branches.append(dataclasses.replace(
                    b, body=rename_vars(b.body, inner)))
            return dataclasses.replace(t, scrut=rename_vars(scrut, mapping),
                                       branches=tuple(new_branches))
        case Let(mult, binds, body):
            bound = frozenset(b.var for b in binds)
            inner = {k: v for k, v in mapping.items() if k not in bound}
            rhs_map = inner if is_omega_mult(mult) else mapping
            new_binds = tuple(dataclasses.replace(b, rhs=rename_vars(b.rhs, rhs_map))
                              for b in binds)
            return dataclasses.replace(t, binds=new_binds,
                                       body=rename_vars(body, inner))
        case ArrayLit(elems):
            return dataclasses.replace(
                t, elems=tuple(mapping.get(e, e) for e in elems))
        case _:
            return t


def term_subst_mult(t: Term, var: str, by: MultExpr) -> Term:
    """Substitute a multiplicity throughout a term, annotations included."""

    def sm(m: Optional[MultExpr]) -> Optional[MultExpr]:
        return mult_subst(m, var, by) if m is not None else None

    def st(a: Optional[Type]) -> Optional[Type]:
        return type_subst_mult(a, var, by) if a is not None else None

    def go(t: Term) -> Term:
        t = dataclasses.replace(t, ty=st(t.ty))
        match t:
            case Var() | IntLit() | ArrName():
                return t
            case Lam(m, _, a, body):
                return dataclasses.replace(t, mult=sm(m), var_ty=st(a),
                                           body=go(body))
            case App(fun, arg):
                return dataclasses.replace(t, fun=go(fun), arg=go(arg),
                                           mult_ann=sm(t.mult_ann))
            case MultLam(p, body):
                if p == var:
                    return t
                # Runtime substitutions are closed, so `by` cannot capture p.
                return dataclasses.replace(t, body=go(body))
            case MultApp(fun, m):
                return dataclasses.replace(t, fun=go(fun), mult=sm(m))
            case Con(_, targs, margs, args):
                return dataclasses.replace(
                    t, type_args=tuple(st(a) for a in targs),
                    mult_args=tuple(sm(m) for m in margs),
                    args=tuple(go(a) for a in args))
            case Prim(_, args):
                return dataclasses.replace(t, args=tuple(go(a) for a in args))
            case Case(m, scrut, branches):
                return dataclasses.replace(
                    t, mult=sm(m), scrut=go(scrut),
                    branches=tuple(dataclasses.replace(b, body=go(b.body))
                                   for b in branches))
            case Let(m, binds, body):
                new_binds = tuple(
                    dataclasses.replace(b, var_ty=st(b.var_ty), rhs=go(b.rhs))
                    for b in binds)
                return dataclasses.replace(t, mult=sm(m), binds=new_binds,
                                           body=go(body))
            case ArrayLit():
                return dataclasses.replace(t, elem_ty=st(t.elem_ty))
            case _:
                raise AssertionError(f"unknown term {t!r}")

    return go(t)
