"""The pure big-step semantics over annotated states.

States carry full type information: an ambient context (types for
variables whose bindings are currently, or were, under evaluation), an
ordered typed environment, a focused term with the demand (1 or w) at
which it is being consumed, and a stack describing the rest of the
computation.  Arrays are plain values here: ``write`` returns a fresh
copy, ``freeze`` retags, and nothing is mutated in place.

Linear bindings are removed from the environment when forced and forcing
them at demand w blocks; on well-typed programs neither a removed binding
nor a w-demanded linear binding is ever encountered, which is exactly what
the progress suite checks.

``state_welltyped`` renders a state as one closed term: the environment
becomes nested lets at the binding multiplicities, and the focus plus the
stack become a chain of left-weighted pairs whose constructor consumes its
left component at the entry's demand.  The state is well-typed when that
term typechecks at the corresponding chain of weighted-pair types.
``instrumented_eval`` re-runs this check at the conclusion of every rule
application; in a tail chain of rules the conclusion states coincide, so
one check covers the chain.

Two readings of the array rules are fixed here and documented in the
README: the continuation of ``newMArray`` is run at demand 1 expecting an
Unrestricted result, and ``freeze`` binds the frozen array as an
unrestricted binding (frozen arrays are shareable; a linear binding would
make repeated indexing block and would leave an unconsumable binding
behind).  The stack entry pushed while a case scrutinee is evaluated is a
one-argument function wrapping the branches, so that the pending branches
are accounted for without guessing which branch will be taken.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import CheckError
from .multiplicity import NF_OMEGA, NF_ONE, mult_normalize
from .pretty import show_term, summarize
from .runtime import (BlockReason, EvalAbort, Outcome, OutcomeKind, Trace,
                      TraceRecord)
from .syntax import (App, ArrayLit, Case, Con, ConDecl, DataDecl, IntLit,
                     Lam, Let, LetBind, MProd, MVar, MultApp, MultExpr,
                     MultLam, OMEGA, ONE, Prim, TArray, TArrow, TData, TInt,
                     TMArray, TVar, Term, Type, Var, array_lit,
                     is_omega_mult, rename_vars, term_subst_mult)
from .typecheck import TypeEnv, infer, type_equiv

FRESH_PREFIX = "%p"

# Internal datatypes for the state encoding: a unit type and left-weighted
# pairs, whose constructor consumes the left component at multiplicity p
# and the right component exactly once.
UNIT_DECL = DataDecl("%Unit", (), (), (ConDecl("%MkUnit", ()),))
WPAIR_DECL = DataDecl(
    "%WPair", ("p",), ("a", "b"),
    (ConDecl("%MkWPair", ((TVar("a"), MVar("p")), (TVar("b"), ONE))),))

UNIT_TY = TData("%Unit", (), ())
UNIT_VAL = Con("%MkUnit", (), (), (), ty=UNIT_TY)


@dataclass
class SEntry:
    term: Term
    demand: MultExpr  # ONE or OMEGA
    ty: Type


@dataclass
class EnvBind:
    name: str
    linear: bool
    ty: Type
    term: Term
    group: int
    forcing: bool = False


@dataclass
class AnnState:
    xi: TypeEnv
    env: tuple[EnvBind, ...]
    focus: Term
    demand: MultExpr
    focus_ty: Type
    stack: tuple[SEntry, ...] = ()


class PreservationViolation(Exception):
    """A rule application produced an ill-typed state: an evaluator bug."""

    def __init__(self, rule: str, summary: str) -> None:
        super().__init__(f"after rule '{rule}': {summary}")
        self.rule = rule
        self.summary = summary


def with_internal_decls(env: TypeEnv) -> TypeEnv:
    decls = dict(env.decls)
    cons = dict(env.cons)
    for d in (UNIT_DECL, WPAIR_DECL):
        decls[d.name] = d
        for c in d.constructors:
            cons[c.name] = (d, c)
    return dataclasses.replace(env, decls=decls, cons=cons)


def initial_state(term: Term, ty: Type, env: TypeEnv) -> AnnState:
    """Whole-program state: the result of a run is consumed once."""
    xi = dataclasses.replace(with_internal_decls(env), vars={})
    return AnnState(xi=xi, env=(), focus=term, demand=ONE, focus_ty=ty)


# ---------------------------------------------------------------------------
# State encoding and the well-typedness check

def _wrap(entry_term: Term, entry_demand: MultExpr, entry_ty: Type,
          rest: Term, rest_ty: Type) -> tuple[Term, Type]:
    ty = TData("%WPair", (entry_demand,), (entry_ty, rest_ty))
    term = Con("%MkWPair", (entry_ty, rest_ty), (entry_demand,),
               (entry_term, rest), ty=ty)
    return term, ty


def encode_state(s: AnnState) -> tuple[Term, Type]:
    """The state as a closed term and its expected type."""
    payload: Term = UNIT_VAL
    payload_ty: Type = UNIT_TY
    for entry in s.stack:  # oldest first; newest ends up outermost
        payload, payload_ty = _wrap(entry.term, entry.demand, entry.ty,
                                    payload, payload_ty)
    term, ty = _wrap(s.focus, s.demand, s.focus_ty, payload, payload_ty)

    live = [b for b in s.env if not b.forcing]
    for group_start in reversed(_group_runs(live)):
        mult = ONE if group_start[0].linear else OMEGA
        binds = tuple(LetBind(b.name, b.ty, b.term) for b in group_start)
        term = Let(mult=mult, binds=binds, body=term, ty=ty)
    return term, ty


def _group_runs(binds: list[EnvBind]) -> list[list[EnvBind]]:
    runs: list[list[EnvBind]] = []
    for b in binds:
        if runs and runs[-1][0].group == b.group:
            runs[-1].append(b)
        else:
            runs.append([b])
    return runs


def state_welltyped(s: AnnState) -> bool:
    term, expected = encode_state(s)
    try:
        result = infer(s.xi, term)
    except CheckError:
        return False
    return type_equiv(result.ty, expected)


# ---------------------------------------------------------------------------
# The machine

@dataclass
class _PState:
    base: TypeEnv  # declarations only; term bindings live in xi/env
    fuel: int
    xi: dict[str, Type] = field(default_factory=dict)
    env: list[EnvBind] = field(default_factory=list)
    by_name: dict[str, EnvBind] = field(default_factory=dict)
    anchors: list[EnvBind] = field(default_factory=list)
    steps: int = 0
    fresh_counter: int = 0
    group_counter: int = 0
    array_allocs: int = 0
    array_copies: int = 0
    check: bool = False
    check_count: int = 0
    trace: Optional[Trace] = None

    def fresh(self) -> str:
        name = f"{FRESH_PREFIX}{self.fresh_counter}"
        self.fresh_counter += 1
        return name

    def new_group(self) -> int:
        self.group_counter += 1
        return self.group_counter

    def tick(self, rule: str, redex: Term) -> None:
        if self.fuel <= 0:
            raise EvalAbort(Outcome(OutcomeKind.OUT_OF_FUEL,
                                    detail=summarize(redex),
                                    steps=self.steps))
        self.fuel -= 1
        self.steps += 1
        if self.trace is not None:
            self.trace.add(rule, summarize(redex))

    def blocked(self, reason: BlockReason, rule: str, location: str,
                detail: str) -> EvalAbort:
        return EvalAbort(Outcome(OutcomeKind.BLOCKED, reason=reason,
                                 rule=rule, location=location, detail=detail,
                                 steps=self.steps))

    def insert(self, bind: EnvBind) -> None:
        """New bindings go just before the innermost binding being forced,
        so that the updated binding can refer to them."""
        if self.anchors:
            self.env.insert(self.env.index(self.anchors[-1]), bind)
        else:
            self.env.append(bind)
        self.by_name[bind.name] = bind

    def remove(self, bind: EnvBind) -> None:
        self.env.remove(bind)
        del self.by_name[bind.name]

    def snapshot(self, focus: Term, demand: MultExpr, ty: Type,
                 stack: tuple[SEntry, ...]) -> AnnState:
        xi = dataclasses.replace(
            self.base, vars={x: (t, OMEGA) for x, t in self.xi.items()})
        return AnnState(xi=xi, env=tuple(self.env), focus=focus,
                        demand=demand, focus_ty=ty, stack=stack)


@dataclass
class PureResult:
    outcome: Outcome
    steps: int
    array_allocs: int
    array_copies: int
    check_count: int
    trace: list[TraceRecord] = field(default_factory=list)
    state: "_PState" = field(repr=False, default=None)  # type: ignore[assignment]

    def linear_bindings(self) -> list[str]:
        return [b.name for b in self.state.env if b.linear]


def _load(s: AnnState, fuel: int, check: bool,
          want_trace: bool) -> _PState:
    base = dataclasses.replace(with_internal_decls(s.xi), vars={})
    st = _PState(base=base, fuel=fuel, check=check,
                 trace=Trace() if want_trace else None)
    st.xi = {x: ty for x, (ty, _) in s.xi.vars.items()}
    for b in s.env:
        copy = dataclasses.replace(b)
        st.env.append(copy)
        st.by_name[copy.name] = copy
        st.group_counter = max(st.group_counter, copy.group)
    return st


def _finish(st: _PState, run) -> PureResult:
    try:
        value = run()
        outcome = Outcome(OutcomeKind.VALUE, value=value, steps=st.steps)
    except EvalAbort as abort:
        outcome = abort.outcome
    records = st.trace.records if st.trace is not None else []
    return PureResult(outcome, st.steps, st.array_allocs, st.array_copies,
                      st.check_count, records, st)


def eval_pure(s: AnnState, fuel: int, want_trace: bool = False) -> PureResult:
    st = _load(s, fuel, check=False, want_trace=want_trace)
    return _finish(st, lambda: _eval(st, s.focus, s.demand, s.focus_ty,
                                     s.stack))


def instrumented_eval(s: AnnState, fuel: int) -> PureResult:
    """As ``eval_pure`` but re-checks state well-typedness at the
    conclusion of every rule application.  Raises PreservationViolation on
    the first ill-typed state; requires a well-typed initial state."""
    if not state_welltyped(s):
        raise ValueError("instrumented_eval requires a well-typed "
                         "initial state")
    st = _load(s, fuel, check=True, want_trace=False)
    return _finish(st, lambda: _eval(st, s.focus, s.demand, s.focus_ty,
                                     s.stack))


def force_pure_variable(prev: PureResult, name: str, demand: MultExpr,
                        fuel: int) -> PureResult:
    """Force one more variable in a finished state (reads constructor
    fields out of a result).  Counters keep accumulating."""
    st = prev.state
    st.fuel = fuel
    b = st.by_name.get(name)
    ty = b.ty if b is not None else TInt()
    return _finish(st, lambda: _eval(st, Var(name, ty=ty), demand, ty, ()))


# ---------------------------------------------------------------------------
# Rules

def _concrete(st: _PState, m: MultExpr) -> MultExpr:
    nf = mult_normalize(m)
    if nf == NF_ONE:
        return ONE
    if nf == NF_OMEGA:
        return OMEGA
    raise st.blocked(BlockReason.PRIMITIVE_MISUSE, "demand", "",
                     "non-concrete multiplicity reached at runtime")


def _dmul(st: _PState, a: MultExpr, b: MultExpr) -> MultExpr:
    return _concrete(st, MProd(a, b))


def _ret(st: _PState, rule: str, value: Term, demand: MultExpr, ty: Type,
         stack: tuple[SEntry, ...]) -> Term:
    if st.check:
        st.check_count += 1
        ann = st.snapshot(value, demand, ty, stack)
        if not state_welltyped(ann):
            raise PreservationViolation(
                rule, f"value {summarize(value)} at demand "
                      f"{'1' if demand == ONE else 'w'} with "
                      f"{len(st.env)} bindings")
    return value


def _eval(st: _PState, t: Term, demand: MultExpr, ty: Type,
          stack: tuple[SEntry, ...]) -> Term:
    while True:
        match t:
            case Lam():
                st.tick("abs", t)
                return _ret(st, "abs", t, demand, ty, stack)
            case MultLam():
                st.tick("m.abs", t)
                return _ret(st, "m.abs", t, demand, ty, stack)
            case IntLit():
                st.tick("int", t)
                return _ret(st, "int", t, demand, ty, stack)
            case Con():
                st.tick("constructor", t)
                return _ret(st, "constructor", t, demand, ty, stack)
            case ArrayLit():
                st.tick("array value", t)
                return _ret(st, "array value", t, demand, ty, stack)

            case Var(x):
                b = st.by_name.get(x)
                if b is None or b.forcing:
                    if b is not None and b.forcing:
                        raise EvalAbort(Outcome(
                            OutcomeKind.BLACKHOLE, location=x,
                            detail=f"'{x}' was forced during its own "
                                   f"evaluation", steps=st.steps))
                    raise st.blocked(
                        BlockReason.MISSING_LINEAR_BINDING,
                        "linear variable", x,
                        f"no binding for '{x}' (already consumed?)")
                if b.linear:
                    if _concrete(st, demand) != ONE:
                        raise st.blocked(
                            BlockReason.MISSING_LINEAR_BINDING,
                            "linear variable", x,
                            f"linear binding '{x}' demanded non-linearly")
                    st.tick("linear variable", t)
                    st.remove(b)
                    t = b.term
                    continue  # single tail premise at demand 1
                st.tick("shared variable", t)
                b.forcing = True
                st.xi[x] = b.ty  # ambient context grows, never pruned
                st.anchors.append(b)
                try:
                    z = _eval(st, b.term, demand, ty, stack)
                finally:
                    st.anchors.pop()
                    b.forcing = False
                b.term = z
                return _ret(st, "shared variable", z, demand, ty, stack)

            case App(fun, arg):
                assert isinstance(arg, Var), "term must be in sharing form"
                st.tick("app", t)
                fun_ty = fun.ty
                assert isinstance(fun_ty, TArrow), \
                    "pure evaluation needs annotated terms"
                pi = t.mult_ann if t.mult_ann is not None else fun_ty.mult
                entry = SEntry(arg, _dmul(st, pi, demand), fun_ty.dom)
                fv = _eval(st, fun, demand, fun_ty, stack + (entry,))
                if not isinstance(fv, Lam):
                    raise st.blocked(BlockReason.PRIMITIVE_MISUSE, "app", "",
                                     "application head is not a function")
                t = rename_vars(fv.body, {fv.var: arg.name})
                continue

            case MultApp(fun, m):
                st.tick("m.app", t)
                fun_ty = fun.ty
                assert fun_ty is not None, \
                    "pure evaluation needs annotated terms"
                fv = _eval(st, fun, demand, fun_ty, stack)
                if not isinstance(fv, MultLam):
                    raise st.blocked(BlockReason.PRIMITIVE_MISUSE, "m.app",
                                     "", "multiplicity application head is "
                                         "not a multiplicity abstraction")
                t = term_subst_mult(fv.body, fv.param, m)
                continue

            case Let(m, binds, body):
                st.tick("let", t)
                bind_mult = _dmul(st, demand, m)
                group = st.new_group()
                ren = {b.var: st.fresh() for b in binds}
                # only w-groups are recursive (see the ordinary let rule)
                rhs_ren = ren if is_omega_mult(m) else {}
                for b in binds:
                    assert b.var_ty is not None
                    st.insert(EnvBind(ren[b.var], bind_mult == ONE,
                                      b.var_ty, rename_vars(b.rhs, rhs_ren),
                                      group))
                t = rename_vars(body, ren)
                continue

            case Case(m, scrut, branches):
                st.tick("case", t)
                scrut_ty = scrut.ty
                assert scrut_ty is not None, \
                    "pure evaluation needs annotated terms"
                frame_ty = TArrow(scrut_ty, m, ty)
                hole = st.fresh()
                frame = Lam(m, hole, scrut_ty,
                            dataclasses.replace(t, scrut=Var(hole,
                                                             ty=scrut_ty)),
                            ty=frame_ty)
                entry = SEntry(frame, demand, frame_ty)
                sv = _eval(st, scrut, _dmul(st, m, demand), scrut_ty,
                           stack + (entry,))
                if not isinstance(sv, Con):
                    raise st.blocked(BlockReason.PRIMITIVE_MISUSE, "case", "",
                                     "case scrutinee is not a constructor")
                branch = next((b for b in branches if b.con == sv.name), None)
                if branch is None:
                    raise st.blocked(BlockReason.MISSING_BRANCH, "case",
                                     sv.name,
                                     f"no branch for constructor '{sv.name}'")
                if len(branch.binders) != len(sv.args):
                    raise st.blocked(BlockReason.PRIMITIVE_MISUSE, "case",
                                     sv.name, "branch arity mismatch")
                mapping = {y: a.name  # type: ignore[union-attr]
                           for y, a in zip(branch.binders, sv.args)}
                t = rename_vars(branch.body, mapping)
                continue

            case Prim(name, args):
                result = _eval_prim(st, t, name, args, demand, ty, stack)
                if isinstance(result, _Continue):
                    t, demand, ty = result.term, result.demand, result.ty
                    continue
                return result

            case _:
                raise AssertionError(f"cannot evaluate {t!r}")


@dataclass
class _Continue:
    term: Term
    demand: MultExpr
    ty: Type


# Premise evaluation order per primitive (indices into the argument list),
# mirroring the ordinary semantics; the remaining indices are arguments
# consumed without their own premise.
_PRIM_ORDER: dict[str, list[int]] = {
    "newMArray": [0],
    "write": [1, 0],
    "freeze": [0],
    "index": [1, 0],
    "add": [0, 1],
    "sub": [0, 1],
    "mul": [0, 1],
    "eq": [0, 1],
    "lt": [0, 1],
}


def _pending_entries(st: _PState, name: str, args: tuple[Term, ...],
                     stage: int, demand: MultExpr) -> tuple[SEntry, ...]:
    """Stack entries for arguments still unconsumed while premise ``stage``
    runs: each pending argument variable at its signature multiplicity
    scaled by the demand."""
    from .typecheck import PRIM_ARG_MULTS
    order = _PRIM_ORDER[name]
    pending = set(order[stage + 1:]) | (set(range(len(args))) - set(order))
    entries = []
    for j in sorted(pending):
        arg = args[j]
        assert isinstance(arg, Var) and arg.ty is not None
        entries.append(SEntry(arg, _dmul(st, PRIM_ARG_MULTS[name][j], demand),
                              arg.ty))
    return tuple(entries)


def _prim_arg(st: _PState, name: str, args: tuple[Term, ...], stage: int,
              demand: MultExpr, stack: tuple[SEntry, ...]) -> Term:
    from .typecheck import PRIM_ARG_MULTS
    order = _PRIM_ORDER[name]
    i = order[stage]
    arg = args[i]
    assert isinstance(arg, Var) and arg.ty is not None
    arg_demand = _dmul(st, PRIM_ARG_MULTS[name][i], demand)
    entries = _pending_entries(st, name, args, stage, demand)
    return _eval(st, arg, arg_demand, arg.ty, stack + entries)


def _want_int(st: _PState, name: str, v: Term) -> int:
    if not isinstance(v, IntLit):
        raise st.blocked(BlockReason.PRIMITIVE_MISUSE, name, "",
                         f"'{name}' needs an integer, got {summarize(v)}")
    return v.value


def _want_array(st: _PState, name: str, v: Term,
                want_frozen: bool) -> ArrayLit:
    if not isinstance(v, ArrayLit):
        raise st.blocked(BlockReason.PRIMITIVE_MISUSE, name, "",
                         f"'{name}' needs an array, got {summarize(v)}")
    if v.frozen_tag != want_frozen:
        state = "frozen" if v.frozen_tag else "mutable"
        raise st.blocked(BlockReason.TYPESTATE_VIOLATION, name, "",
                         f"'{name}' applied to a {state} array")
    return v


def _eval_prim(st: _PState, t: Prim, name: str, args: tuple[Term, ...],
               demand: MultExpr, ty: Type,
               stack: tuple[SEntry, ...]) -> Term | _Continue:
    match name:
        case "newMArray":
            st.tick("newMArray", t)
            size = _want_int(st, name,
                             _prim_arg(st, name, args, 0, demand, stack))
            if size < 0:
                raise st.blocked(BlockReason.PRIMITIVE_MISUSE, name, "",
                                 f"negative array size {size}")
            elem_var, cont = args[1], args[2]
            assert isinstance(elem_var, Var) and isinstance(cont, Var)
            elem_ty = elem_var.ty
            cont_ty = cont.ty
            assert elem_ty is not None and isinstance(cont_ty, TArrow)
            st.array_allocs += 1
            arr_ty = TMArray(elem_ty)
            lit = array_lit((elem_var.name,) * size, elem_ty, False,
                            ty=arr_ty)
            x = st.fresh()
            inner: Term = Let(
                mult=ONE,
                binds=(LetBind(x, arr_ty, lit),),
                body=App(cont, Var(x, ty=arr_ty), mult_ann=ONE,
                         ty=cont_ty.cod),
                ty=cont_ty.cod)
            z = _eval(st, inner, ONE, cont_ty.cod, stack)
            if not (isinstance(z, Con) and z.name == "Unrestricted"
                    and len(z.args) == 1):
                raise st.blocked(BlockReason.PRIMITIVE_MISUSE, name, "",
                                 "array continuation did not return an "
                                 "Unrestricted value")
            return _ret(st, "newMArray", z, demand, ty, stack)

        case "write":
            st.tick("write", t)
            i = _want_int(st, name,
                          _prim_arg(st, name, args, 0, demand, stack))
            arr = _want_array(st, name,
                              _prim_arg(st, name, args, 1, demand, stack),
                              want_frozen=False)
            if not 0 <= i < len(arr.elems):
                raise st.blocked(BlockReason.PRIMITIVE_MISUSE, name, "",
                                 f"index {i} out of bounds for array of "
                                 f"size {len(arr.elems)}")
            elem = args[2]
            assert isinstance(elem, Var)
            elems = arr.elems[:i] + (elem.name,) + arr.elems[i + 1:]
            st.array_copies += 1  # a structurally fresh array every write
            fresh_arr = array_lit(elems, arr.elem_ty, False, ty=arr.ty)
            return _ret(st, "write", fresh_arr, demand, ty, stack)

        case "freeze":
            st.tick("freeze", t)
            arr = _want_array(st, name,
                              _prim_arg(st, name, args, 0, demand, stack),
                              want_frozen=False)
            frozen = array_lit(arr.elems, arr.elem_ty, True,
                               ty=TArray(arr.elem_ty))
            x = st.fresh()
            st.insert(EnvBind(x, False, TArray(arr.elem_ty), frozen,
                              st.new_group()))
            value = Con("Unrestricted", (TArray(arr.elem_ty),), (),
                        (Var(x, ty=TArray(arr.elem_ty)),), ty=ty)
            return _ret(st, "freeze", value, demand, ty, stack)

        case "index":
            st.tick("index", t)
            i = _want_int(st, name,
                          _prim_arg(st, name, args, 0, demand, stack))
            arr = _want_array(st, name,
                              _prim_arg(st, name, args, 1, demand, stack),
                              want_frozen=True)
            if not 0 <= i < len(arr.elems):
                raise st.blocked(BlockReason.PRIMITIVE_MISUSE, name, "",
                                 f"index {i} out of bounds for array of "
                                 f"size {len(arr.elems)}")
            elem_name = arr.elems[i]
            b = st.by_name.get(elem_name)
            elem_ty = b.ty if b is not None else arr.elem_ty
            return _Continue(Var(elem_name, ty=elem_ty), demand, elem_ty)

        case "add" | "sub" | "mul" | "eq" | "lt":
            st.tick("prim", t)
            a = _want_int(st, name,
                          _prim_arg(st, name, args, 0, demand, stack))
            b = _want_int(st, name,
                          _prim_arg(st, name, args, 1, demand, stack))
            match name:
                case "add":
                    value: Term = IntLit(a + b, ty=TInt())
                case "sub":
                    value = IntLit(a - b, ty=TInt())
                case "mul":
                    value = IntLit(a * b, ty=TInt())
                case "eq":
                    value = Con("True" if a == b else "False", (), (), (),
                                ty=TData("Bool"))
                case "lt":
                    value = Con("True" if a < b else "False", (), (), (),
                                ty=TData("Bool"))
                case _:
                    raise AssertionError(name)
            return _ret(st, "prim", value, demand, ty, stack)

        case _:
            raise st.blocked(BlockReason.PRIMITIVE_MISUSE, "prim", "",
                             f"unknown primitive '{name}'")
