"""The multiplicity semiring and the usage algebra built on it.

Multiplicity expressions are quotiented by: associativity/commutativity of
+ and *, unit 1 for *, distributivity of * over +, w*w = w, and
1+1 = 1+w = w+w = w.  The canonical form is a nonempty map from monomials
(multisets of variables) to coefficients in {1, w}; two expressions are
equivalent exactly when their canonical forms are equal.  There is no zero
in the semiring itself; usage bookkeeping uses a separate ``ZERO`` marker
meaning "variable not used at all", which is never substituted for a
multiplicity variable and never appears inside a normal form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .syntax import (MSum, MProd, MVar, MultExpr, ONE, OMEGA, One, Omega,
                     mult_subst)

# A monomial is a sorted tuple of variable names (a multiset).
Monomial = tuple[str, ...]

# Coefficients: False = 1, True = w.
_W = True
_1 = False


@dataclass(frozen=True)
class MultNF:
    """Canonical form: sorted ((monomial, is_omega), ...), never empty."""

    terms: tuple[tuple[Monomial, bool], ...]

    def __post_init__(self) -> None:
        assert self.terms, "the multiplicity semiring has no zero"

    def is_concrete(self) -> bool:
        return all(not mono for mono, _ in self.terms)

    def variables(self) -> frozenset[str]:
        out: set[str] = set()
        for mono, _ in self.terms:
            out.update(mono)
        return frozenset(out)


NF_ONE = MultNF((((), _1),))
NF_OMEGA = MultNF((((), _W),))


class _Zero:
    """Bookkeeping zero: "unused".  Not a multiplicity; lives only in usages."""

    _instance: "_Zero | None" = None

    def __new__(cls) -> "_Zero":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ZERO"


ZERO = _Zero()

UsageMult = Union[MultNF, _Zero]
Usage = dict[str, UsageMult]


def _make_nf(acc: dict[Monomial, bool]) -> MultNF:
    return MultNF(tuple(sorted(acc.items())))


def nf_add(a: MultNF, b: MultNF) -> MultNF:
    """Sum of normal forms; colliding monomials get coefficient w (1+1=w)."""
    acc = dict(a.terms)
    for mono, coeff in b.terms:
        acc[mono] = _W if mono in acc else coeff
    return _make_nf(acc)


def nf_mul(a: MultNF, b: MultNF) -> MultNF:
    acc: dict[Monomial, bool] = {}
    for mono_a, ca in a.terms:
        for mono_b, cb in b.terms:
            mono = tuple(sorted(mono_a + mono_b))
            coeff = ca or cb
            acc[mono] = _W if mono in acc else coeff
    return _make_nf(acc)


def mult_normalize(m: MultExpr) -> MultNF:
    match m:
        case One():
            return NF_ONE
        case Omega():
            return NF_OMEGA
        case MVar(name):
            return MultNF((((name,), _1),))
        case MSum(a, b):
            return nf_add(mult_normalize(a), mult_normalize(b))
        case MProd(a, b):
            return nf_mul(mult_normalize(a), mult_normalize(b))
        case _:
            raise AssertionError(f"unknown multiplicity {m!r}")


def mult_equiv(a: MultExpr, b: MultExpr) -> bool:
    return mult_normalize(a) == mult_normalize(b)


def nf_render(nf: MultNF) -> MultExpr:
    """Turn a normal form back into an expression; normalizing the result
    gives back the same normal form."""
    parts: list[MultExpr] = []
    for mono, coeff in nf.terms:
        factors: list[MultExpr] = [OMEGA] if coeff else []
        factors.extend(MVar(v) for v in mono)
        if not factors:
            part: MultExpr = ONE
        else:
            part = factors[0]
            for f in factors[1:]:
                part = MProd(part, f)
        parts.append(part)
    out = parts[0]
    for p in parts[1:]:
        out = MSum(out, p)
    return out


def is_omega(u: UsageMult) -> bool:
    return isinstance(u, MultNF) and u == NF_OMEGA


def mult_add(a: UsageMult, b: UsageMult) -> UsageMult:
    if a is ZERO:
        return b
    if b is ZERO:
        return a
    return nf_add(a, b)


def mult_mul(a: UsageMult, b: UsageMult) -> UsageMult:
    if a is ZERO or b is ZERO:
        return ZERO
    return nf_mul(a, b)


def usage_add(u1: Usage, u2: Usage) -> Usage:
    """Pointwise addition; missing entries read as ZERO."""
    out: Usage = dict(u1)
    for x, m in u2.items():
        out[x] = mult_add(out.get(x, ZERO), m)
    return out


def usage_scale(pi: MultExpr, u: Usage) -> Usage:
    nf = mult_normalize(pi)
    return {x: mult_mul(nf, m) for x, m in u.items()}


class UnjoinableUsage(Exception):
    """Two case branches use a variable at incompatible polymorphic mults."""

    def __init__(self, var: str, m1: UsageMult, m2: UsageMult) -> None:
        super().__init__(var, m1, m2)
        self.var = var
        self.m1 = m1
        self.m2 = m2


def join_mult(var: str, a: UsageMult, b: UsageMult) -> UsageMult:
    """Branch join.  Equal usages join to themselves; among the concrete
    usages Zero/1/w any disagreement joins to w; anything else involving a
    multiplicity variable is rejected rather than silently widened."""
    if a is ZERO and b is ZERO:
        return ZERO
    if isinstance(a, MultNF) and isinstance(b, MultNF) and a == b:
        return a
    concrete = {ZERO, NF_ONE, NF_OMEGA}
    if (a in concrete) and (b in concrete):
        return NF_OMEGA
    raise UnjoinableUsage(var, a, b)


def usage_join(u1: Usage, u2: Usage) -> Usage:
    out: Usage = {}
    for x in set(u1) | set(u2):
        joined = join_mult(x, u1.get(x, ZERO), u2.get(x, ZERO))
        if joined is not ZERO:
            out[x] = joined
    return out


def sub_usage(u: UsageMult, pi: MultExpr) -> bool:
    """May a computed usage ``u`` be discharged against a declared
    multiplicity ``pi``?  A w binder accepts any usage (weakening);
    otherwise the usage must be present and equivalent to ``pi``."""
    nf = mult_normalize(pi)
    if nf == NF_OMEGA:
        return True
    return isinstance(u, MultNF) and u == nf


def usage_subst(u: Usage, var: str, by: MultExpr) -> Usage:
    """Substitute a multiplicity variable inside every usage entry."""
    out: Usage = {}
    for x, m in u.items():
        if m is ZERO:
            out[x] = ZERO
        else:
            out[x] = mult_normalize(mult_subst(nf_render(m), var, by))
    return out
