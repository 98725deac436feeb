"""The typing rules, their verdicts on the canonical examples, and the
algorithmic contracts (usages as outputs, checked at binders)."""

import pytest

from lqlang.diagnostics import CheckError, Kind
from lqlang.multiplicity import NF_OMEGA, NF_ONE, mult_normalize
from lqlang.parser import parse_program
from lqlang.syntax import (App, Branch, Case, Con, ConDecl, DataDecl, INT,
                           IntLit, Lam, Let, LetBind, MProd, MVar, MultApp,
                           MultLam, OMEGA, ONE, Prim, TArray, TArrow, TData,
                           TForall, TMArray, TVar, Var)
from lqlang.typecheck import (TypeEnv, annotations_equal, check_datadecl,
                              check_program, infer, strip_annotations,
                              type_equiv)

P11 = TData("Pair", (ONE, ONE), (INT, INT))


def mkpair(a, b, tys=(INT, INT), ms=(ONE, ONE)):
    return Con("MkPair", tys, ms, (a, b))


def kind_of(exc: CheckError) -> Kind:
    return exc.diagnostics[0].kind


def reject(env, term) -> Kind:
    with pytest.raises(CheckError) as e:
        infer(env, term)
    return kind_of(e.value)


# --- the verdict table -------------------------------------------------------

def test_swap_accepted_linear(prelude_env):
    swap = Lam(ONE, "x", P11,
               Case(ONE, Var("x"),
                    (Branch("MkPair", ("a", "b"),
                            mkpair(Var("b"), Var("a"))),)))
    r = infer(prelude_env, swap)
    assert type_equiv(r.ty, TArrow(P11, ONE, P11))


def test_fst_rejected_under_case1(prelude_env):
    fst1 = Lam(ONE, "x", P11,
               Case(ONE, Var("x"), (Branch("MkPair", ("a", "b"), Var("a")),)))
    assert reject(prelude_env, fst1) is Kind.LINEARITY_MISMATCH


def test_fst_accepted_under_casew(prelude_env):
    fstw = Lam(OMEGA, "x", P11,
               Case(OMEGA, Var("x"), (Branch("MkPair", ("a", "b"), Var("a")),)))
    r = infer(prelude_env, fstw)
    assert type_equiv(r.ty, TArrow(P11, OMEGA, INT))


def test_f1_reuses_component_needs_omega(prelude_env):
    # f1 x = case x of (a, b) -> (a, a): no linear type
    body = Case(ONE, Var("x"),
                (Branch("MkPair", ("a", "b"), mkpair(Var("a"), Var("a"))),))
    assert reject(prelude_env, Lam(ONE, "x", P11, body)) \
        is Kind.LINEARITY_MISMATCH
    body_w = Case(OMEGA, Var("x"),
                  (Branch("MkPair", ("a", "b"), mkpair(Var("a"), Var("a"))),))
    r = infer(prelude_env, Lam(OMEGA, "x", P11, body_w))
    assert type_equiv(r.ty, TArrow(P11, OMEGA, P11))


def test_f2_swap_has_linear_type(prelude_env):
    body = Case(ONE, Var("x"),
                (Branch("MkPair", ("a", "b"), mkpair(Var("b"), Var("a"))),))
    r = infer(prelude_env, Lam(ONE, "x", P11, body))
    assert type_equiv(r.ty, TArrow(P11, ONE, P11))


def test_dup_rejected_at_linear_arrow(prelude_env):
    dup = Lam(ONE, "x", INT, mkpair(Var("x"), Var("x")))
    assert reject(prelude_env, dup) is Kind.LINEARITY_MISMATCH


def test_poly_id_rejected(prelude_env):
    pid = MultLam("p", Lam(MVar("p"), "x", INT, Var("x")))
    assert reject(prelude_env, pid) is Kind.LINEARITY_MISMATCH


def test_omega_wrapper_around_linear_function(prelude_env):
    env = prelude_env.bind_var("f", TArrow(INT, ONE, INT), OMEGA)
    g = Lam(OMEGA, "x", INT, App(Var("f"), Var("x")))
    r = infer(env, g)
    assert type_equiv(r.ty, TArrow(INT, OMEGA, INT))


def test_weakening_judgement(prelude_env):
    env = prelude_env.bind_var("x", INT, ONE).bind_var("y", TData("Bool"),
                                                       OMEGA)
    r = infer(env, Var("x"))
    assert r.ty == INT
    assert r.usage == {"x": NF_ONE}


# --- per-rule contracts -------------------------------------------------------

def test_var_usage_is_one(prelude_env):
    env = prelude_env.bind_var("x", INT, OMEGA)
    assert infer(env, Var("x")).usage == {"x": NF_ONE}


def test_app_scales_argument_usage(prelude_env):
    env = (prelude_env
           .bind_var("f", TArrow(INT, OMEGA, INT), OMEGA)
           .bind_var("u", INT, OMEGA))
    r = infer(env, App(Var("f"), Var("u")))
    assert r.usage == {"f": NF_ONE, "u": NF_OMEGA}


def test_app_requires_equivalent_arrow_mult(prelude_env):
    # 1*p and p unify on the arrow
    env = (prelude_env
           .bind_mult("p")
           .bind_var("f", TArrow(INT, MProd(ONE, MVar("p")), INT), OMEGA)
           .bind_var("u", INT, OMEGA))
    r = infer(env, App(Var("f"), Var("u")))
    assert r.usage["u"] == mult_normalize(MVar("p"))


def test_con_is_an_application(prelude_env):
    env = prelude_env.bind_var("a", INT, ONE).bind_var("b", INT, ONE)
    r = infer(env, mkpair(Var("a"), Var("b")))
    assert r.usage == {"a": NF_ONE, "b": NF_ONE}
    assert type_equiv(r.ty, P11)


def test_con_unrestricted_field_scales(prelude_env):
    env = prelude_env.bind_var("a", INT, OMEGA)
    r = infer(env, Con("Unrestricted", (INT,), (), (Var("a"),)))
    assert r.usage == {"a": NF_OMEGA}


def test_case_scrutinee_scaled_and_branches_joined(prelude_env):
    env = (prelude_env
           .bind_var("s", TData("Bool"), OMEGA)
           .bind_var("z", INT, OMEGA))
    t = Case(OMEGA, Var("s"), (Branch("True", (), Var("z")),
                               Branch("False", (), IntLit(0))))
    r = infer(env, t)
    assert r.usage["s"] == NF_OMEGA       # scaled by the case multiplicity
    assert r.usage["z"] == NF_OMEGA       # used in one branch only -> w


def test_case_branch_type_mismatch(prelude_env):
    t = Case(ONE, Con("True", (), (), ()),
             (Branch("True", (), IntLit(1)),
              Branch("False", (), Con("False", (), (), ()))))
    assert reject(prelude_env, t) is Kind.TYPE_MISMATCH


def test_case_branch_from_wrong_datatype(prelude_env):
    t = Case(ONE, Con("True", (), (), ()),
             (Branch("Nil", (), IntLit(1)),))
    assert reject(prelude_env, t) is Kind.TYPE_MISMATCH


def test_let_body_binder_checked(prelude_env):
    t = Let(ONE, (LetBind("x", INT, IntLit(1)),), IntLit(2))  # x unused
    assert reject(prelude_env, t) is Kind.LINEARITY_MISMATCH


def test_let_omega_group_is_recursive(prelude_env):
    t = Let(OMEGA,
            (LetBind("f", TArrow(INT, OMEGA, INT),
                     Lam(OMEGA, "n", INT,
                         Case(ONE, Prim("eq", (Var("n"), IntLit(0))),
                              (Branch("True", (), IntLit(0)),
                               Branch("False", (),
                                      App(Var("f"),
                                          Prim("sub", (Var("n"),
                                                       IntLit(1))))))))),),
            App(Var("f"), IntLit(3)))
    r = infer(prelude_env, t)
    assert r.ty == INT


def test_let_one_group_not_recursive(prelude_env):
    t = Let(ONE, (LetBind("x", INT, Var("x")),), Var("x"))
    assert reject(prelude_env, t) is Kind.UNBOUND_VARIABLE


def test_mult_lam_freshness(prelude_env):
    env = prelude_env.bind_mult("p").bind_var(
        "f", TArrow(INT, MVar("p"), INT), OMEGA)
    t = MultLam("p", Lam(ONE, "x", INT, Var("x")))
    assert reject(env, t) is Kind.FRESHNESS_VIOLATION


def test_mult_app_substitutes(prelude_env):
    ap = MultLam("p", Lam(ONE, "f", TArrow(INT, MVar("p"), INT),
                          Lam(MVar("p"), "x", INT,
                              App(Var("f"), Var("x")))))
    r = infer(prelude_env, MultApp(ap, OMEGA))
    want = TArrow(TArrow(INT, OMEGA, INT), ONE, TArrow(INT, OMEGA, INT))
    assert type_equiv(r.ty, want)


def test_mult_app_substitution_coherence(prelude_env):
    """Instantiating after inference equals inferring the instantiated term."""
    ap = MultLam("p", Lam(ONE, "f", TArrow(INT, MVar("p"), INT),
                          Lam(MVar("p"), "x", INT, App(Var("f"), Var("x")))))
    from lqlang.syntax import term_subst_mult
    for m in (ONE, OMEGA):
        via_app = infer(prelude_env, MultApp(ap, m))
        direct = infer(prelude_env, term_subst_mult(ap.body, "p", m))
        assert type_equiv(via_app.ty, direct.ty)
        assert via_app.usage == direct.usage


def test_shadowing_respects_innermost(prelude_env):
    t = Let(ONE, (LetBind("x", INT, IntLit(1)),),
            Let(ONE, (LetBind("x", INT, Prim("add", (Var("x"), IntLit(1)))),),
                Var("x")))
    r = infer(prelude_env, t)
    assert r.ty == INT and r.usage == {}


def test_determinism(prelude_env):
    t = Lam(ONE, "x", P11,
            Case(ONE, Var("x"),
                 (Branch("MkPair", ("a", "b"), mkpair(Var("b"), Var("a"))),)))
    r1, r2 = infer(prelude_env, t), infer(prelude_env, t)
    assert r1.ty == r2.ty and r1.usage == r2.usage and r1.term == r2.term


def test_recheck_reproduces_annotations(prelude_env):
    t = Lam(ONE, "x", P11,
            Case(ONE, Var("x"),
                 (Branch("MkPair", ("a", "b"), mkpair(Var("b"), Var("a"))),)))
    typed = infer(prelude_env, t).term
    again = infer(prelude_env, strip_annotations(typed)).term
    assert annotations_equal(typed, again)


def test_zero_fits_omega_binder(prelude_env):
    """If a binding is w, the variable may be dropped entirely."""
    used = Lam(OMEGA, "x", INT, Var("x"))
    unused = Lam(OMEGA, "x", INT, IntLit(3))
    assert infer(prelude_env, used).ty == infer(prelude_env, unused).ty


# --- datatype declarations ----------------------------------------------------

def test_unrestricted_decl_accepted():
    d = DataDecl("Unrestricted", (), ("a",),
                 (ConDecl("Unrestricted", ((TVar("a"), OMEGA),)),))
    check_datadecl(d)


def test_out_of_scope_mult_param_rejected():
    d = DataDecl("Box", ("p",), ("a",),
                 (ConDecl("MkBox", ((TVar("a"), MVar("q")),)),))
    with pytest.raises(CheckError) as e:
        check_datadecl(d)
    assert kind_of(e.value) is Kind.MALFORMED_DECL


def test_out_of_scope_type_var_rejected():
    d = DataDecl("Box", (), ("a",), (ConDecl("MkBox", ((TVar("b"), ONE),)),))
    with pytest.raises(CheckError) as e:
        check_datadecl(d)
    assert kind_of(e.value) is Kind.MALFORMED_DECL


def test_linear_list_decl_accepted():
    d = DataDecl("List", (), ("a",),
                 (ConDecl("Nil", ()),
                  ConDecl("Cons", ((TVar("a"), ONE),
                                   (TData("List", (), (TVar("a"),)), ONE)))))
    check_datadecl(d)


# --- whole programs -----------------------------------------------------------

def test_array_program_accepted(prelude):
    src = """
    main = case[1] newMArray(2, 0, \\[1] ma : MArray Int .
             freeze(write(ma, 0, 7))) of
      { Unrestricted arr -> index(arr, 0) }
    """
    sf = parse_program(src, base=prelude)
    checked = check_program(sf.decls, sf.defs, sf.main)
    assert checked.ty == INT


def test_write_to_frozen_array_type_rejected(prelude):
    src = """
    main = case[1] newMArray(1, 0, \\[1] ma : MArray Int . freeze(ma)) of
      { Unrestricted arr ->
          case[1] write(arr, 0, 5) of { Unrestricted x -> x } }
    """
    sf = parse_program(src, base=prelude)
    with pytest.raises(CheckError) as e:
        check_program(sf.decls, sf.defs, sf.main)
    assert kind_of(e.value) is Kind.TYPE_MISMATCH


def test_empty_program(prelude_env):
    checked = check_program([], [], IntLit(5))
    assert checked.ty == INT


def test_duplicate_def_rejected():
    with pytest.raises(CheckError) as e:
        check_program([], [("f", INT, OMEGA, IntLit(1)),
                           ("f", INT, OMEGA, IntLit(2))], IntLit(0))
    assert kind_of(e.value) is Kind.MALFORMED_DECL


def test_def_type_mismatch_aggregates(prelude):
    src = """
    def a : Int =[w] True
    def b : Bool =[w] 3
    main = 0
    """
    sf = parse_program(src, base=prelude)
    with pytest.raises(CheckError) as e:
        check_program(sf.decls, sf.defs, sf.main)
    kinds = [d.kind for d in e.value.diagnostics]
    assert kinds.count(Kind.TYPE_MISMATCH) >= 2


def test_diagnostics_carry_locations(prelude):
    sf = parse_program("main = y", base=prelude)
    with pytest.raises(CheckError) as e:
        check_program(sf.decls, sf.defs, sf.main)
    assert all(d.loc is not None for d in e.value.diagnostics)
