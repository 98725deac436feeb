"""The pure semantics: linear-binding removal, copy-on-write arrays, state
well-typedness, and the instrumented preservation checker."""

import pytest

from lqlang.eval_pure import (AnnState, EnvBind, PreservationViolation,
                              SEntry, encode_state, eval_pure,
                              initial_state, instrumented_eval,
                              state_welltyped)
from lqlang.runtime import BlockReason, OutcomeKind
from lqlang.syntax import (App, ArrayLit, Branch, Case, Con, INT, IntLit,
                           Lam, Let, LetBind, OMEGA, ONE, Prim, TArray,
                           TData, TMArray, Var, array_lit)
from lqlang.translate import to_sharing
from lqlang.typecheck import infer

from conftest import check_corpus, corpus_files


def prepare(env, term):
    r = infer(env, term)
    sh = to_sharing(r.term, env)
    return initial_state(sh, r.ty, env)


ARRAY7 = Case(ONE, Prim("newMArray",
                        (IntLit(2), IntLit(0),
                         Lam(ONE, "ma", TMArray(INT),
                             Prim("freeze",
                                  (Prim("write",
                                        (Var("ma"), IntLit(0), IntLit(7))),))))),
              (Branch("Unrestricted", ("arr",),
                      Prim("index", (Var("arr"), IntLit(0)))),))


def test_array_roundtrip_matches_ordinary(prelude_env):
    res = eval_pure(prepare(prelude_env, ARRAY7), 100_000)
    assert res.outcome.kind is OutcomeKind.VALUE
    assert res.outcome.value == IntLit(7)
    assert res.array_allocs == 1
    assert res.array_copies == 1  # one write, one fresh array value


def test_write_produces_fresh_array_value(prelude_env):
    """Identity-tag accounting: a write's result is a new array node."""
    t = Case(ONE, Prim("newMArray",
                       (IntLit(1), IntLit(0),
                        Lam(ONE, "ma", TMArray(INT),
                            Prim("freeze",
                                 (Prim("write",
                                       (Prim("write",
                                             (Var("ma"), IntLit(0),
                                              IntLit(1))),
                                        IntLit(0), IntLit(2))),))))),
             (Branch("Unrestricted", ("arr",),
                     Prim("index", (Var("arr"), IntLit(0)))),))
    res = eval_pure(prepare(prelude_env, t), 100_000)
    assert res.outcome.value == IntLit(2)
    assert res.array_copies == 2
    uids = {b.term.uid for b in res.state.env
            if isinstance(b.term, ArrayLit)}
    assert len(uids) == len([b for b in res.state.env
                             if isinstance(b.term, ArrayLit)])


def test_forcing_consumed_linear_binding_blocks(prelude_env):
    b = EnvBind("x", True, INT, IntLit(5, ty=INT), 1)
    state = AnnState(xi=prepare(prelude_env, IntLit(0)).xi, env=(b,),
                     focus=Prim("add", (Var("x", ty=INT), Var("x", ty=INT)),
                                ty=INT),
                     demand=ONE, focus_ty=INT)
    res = eval_pure(state, 1000)
    assert res.outcome.kind is OutcomeKind.BLOCKED
    assert res.outcome.reason is BlockReason.MISSING_LINEAR_BINDING
    assert res.outcome.location == "x"


def test_omega_demand_of_linear_binding_blocks(prelude_env):
    b = EnvBind("x", True, INT, IntLit(5, ty=INT), 1)
    state = AnnState(xi=prepare(prelude_env, IntLit(0)).xi, env=(b,),
                     focus=Var("x", ty=INT), demand=OMEGA, focus_ty=INT)
    res = eval_pure(state, 1000)
    assert res.outcome.kind is OutcomeKind.BLOCKED
    assert res.outcome.reason is BlockReason.MISSING_LINEAR_BINDING


def test_closed_ground_program_leaves_no_linear_bindings(prelude):
    for path in corpus_files():
        checked = check_corpus(path, prelude)
        if checked.ty not in (INT, TData("Bool")):
            continue
        sh = to_sharing(checked.term, checked.env)
        res = eval_pure(initial_state(sh, checked.ty, checked.env), 100_000)
        assert res.outcome.kind is OutcomeKind.VALUE, path.name
        assert res.linear_bindings() == [], path.name


def test_blackhole_on_ill_founded_recursion(prelude_env):
    t = Let(OMEGA, (LetBind("x", INT, Var("x")),), Var("x"))
    res = eval_pure(prepare(prelude_env, t), 1000)
    assert res.outcome.kind is OutcomeKind.BLACKHOLE


def test_out_of_fuel(prelude_env):
    res = eval_pure(prepare(prelude_env, ARRAY7), 3)
    assert res.outcome.kind is OutcomeKind.OUT_OF_FUEL


# --- state well-typedness -----------------------------------------------------

def test_initial_state_welltyped_for_corpus(prelude):
    for path in corpus_files():
        checked = check_corpus(path, prelude)
        sh = to_sharing(checked.term, checked.env)
        assert state_welltyped(initial_state(sh, checked.ty, checked.env)), \
            path.name


def test_omega_demand_of_linear_binding_is_ill_typed(prelude_env):
    xi = prepare(prelude_env, IntLit(0)).xi
    b = EnvBind("x", True, INT, IntLit(5, ty=INT), 1)
    bad = AnnState(xi=xi, env=(b,), focus=Var("x", ty=INT), demand=OMEGA,
                   focus_ty=INT)
    assert not state_welltyped(bad)
    ok = AnnState(xi=xi, env=(b,), focus=Var("x", ty=INT), demand=ONE,
                  focus_ty=INT)
    assert state_welltyped(ok)


def test_unbound_linear_focus_is_ill_typed(prelude_env):
    xi = prepare(prelude_env, IntLit(0)).xi
    bad = AnnState(xi=xi, env=(), focus=Var("x", ty=INT), demand=ONE,
                   focus_ty=INT)
    assert not state_welltyped(bad)


def test_stack_entries_count_in_encoding(prelude_env):
    xi = prepare(prelude_env, IntLit(0)).xi
    b = EnvBind("x", True, INT, IntLit(5, ty=INT), 1)
    # x pending on the stack at demand 1: consumed exactly once in total
    st = AnnState(xi=xi, env=(b,), focus=IntLit(3, ty=INT), demand=ONE,
                  focus_ty=INT,
                  stack=(SEntry(Var("x", ty=INT), ONE, INT),))
    assert state_welltyped(st)
    # but x duplicated on the stack is consumed twice
    st2 = AnnState(xi=xi, env=(b,), focus=IntLit(3, ty=INT), demand=ONE,
                   focus_ty=INT,
                   stack=(SEntry(Var("x", ty=INT), ONE, INT),
                          SEntry(Var("x", ty=INT), ONE, INT)))
    assert not state_welltyped(st2)


def test_encoding_length(prelude_env):
    xi = prepare(prelude_env, IntLit(0)).xi
    st = AnnState(xi=xi, env=(), focus=IntLit(3, ty=INT), demand=ONE,
                  focus_ty=INT,
                  stack=(SEntry(IntLit(1, ty=INT), ONE, INT),
                         SEntry(IntLit(2, ty=INT), OMEGA, INT)))
    term, ty = encode_state(st)
    # one weighted pair per stack entry plus one for the focus
    depth = 0
    probe = term
    while isinstance(probe, Con) and probe.name == "%MkWPair":
        depth += 1
        probe = probe.args[1]
    assert depth == len(st.stack) + 1


# --- instrumentation -----------------------------------------------------------

def test_instrumented_corpus_program(prelude_env):
    res = instrumented_eval(prepare(prelude_env, ARRAY7), 100_000)
    assert res.outcome.kind is OutcomeKind.VALUE
    assert res.check_count > 0


def test_instrumented_requires_welltyped_initial_state(prelude_env):
    xi = prepare(prelude_env, IntLit(0)).xi
    bad = AnnState(xi=xi, env=(), focus=Var("x", ty=INT), demand=ONE,
                   focus_ty=INT)
    with pytest.raises(ValueError):
        instrumented_eval(bad, 100)


def test_linear_variable_rule_removes_binding_and_preserves(prelude_env):
    t = Let(ONE, (LetBind("x", INT, IntLit(5)),),
            Prim("add", (Var("x"), IntLit(1))))
    res = instrumented_eval(prepare(prelude_env, t), 1000)
    assert res.outcome.value == IntLit(6)
    assert res.linear_bindings() == []


def test_preservation_violation_reported_on_broken_state(prelude_env):
    """A hand-corrupted environment (linear binding consumed twice by the
    focus) fails the precondition rather than slipping through."""
    xi = prepare(prelude_env, IntLit(0)).xi
    b = EnvBind("x", True, INT, IntLit(5, ty=INT), 1)
    dup = Prim("add", (Var("x", ty=INT), Var("x", ty=INT)), ty=INT)
    bad = AnnState(xi=xi, env=(b,), focus=dup, demand=ONE, focus_ty=INT)
    assert not state_welltyped(bad)
    with pytest.raises(ValueError):
        instrumented_eval(bad, 100)


def test_purity_ordinary_mutates_pure_does_not(prelude_env):
    """Same program; the ordinary heap cell is observably overwritten while
    the pure evaluator's original array value survives."""
    from lqlang.eval_ordinary import Heap, eval_term
    r = infer(prelude_env, ARRAY7)
    sh = to_sharing(r.term, prelude_env)
    ores = eval_term(Heap(), sh, 100_000)
    assert ores.cell_allocs == 1 and ores.write_count == 1
    pres = eval_pure(initial_state(sh, r.ty, prelude_env), 100_000)
    assert pres.array_allocs == 1 and pres.array_copies == 1


def test_determinism(prelude_env):
    r1 = eval_pure(prepare(prelude_env, ARRAY7), 100_000, want_trace=True)
    r2 = eval_pure(prepare(prelude_env, ARRAY7), 100_000, want_trace=True)
    assert r1.outcome.value == r2.outcome.value
    assert [t.rule for t in r1.trace] == [t.rule for t in r2.trace]


def test_trace_rule_names_match_rule_set(prelude_env):
    res = eval_pure(prepare(prelude_env, ARRAY7), 100_000, want_trace=True)
    names = {t.rule for t in res.trace}
    allowed = {"abs", "m.abs", "app", "m.app", "shared variable",
               "linear variable", "let", "constructor", "case",
               "newMArray", "write", "freeze", "index", "int",
               "array value", "prim"}
    assert names <= allowed
    assert {"newMArray", "write", "freeze", "index",
            "linear variable"} <= names
