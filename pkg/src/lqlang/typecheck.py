"""Algorithmic typechecker.

The declarative rules split contexts nondeterministically; here usages are
synthesized bottom-up instead (multiplicities as outputs) and checked at
binders with ``sub_usage``.  ``infer`` returns the fully annotated term,
its type, and the usage of every free variable; ``check_program``
elaborates top-level definitions into nested lets around ``main`` and
checks the whole program.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .diagnostics import CheckError, Diagnostic, Kind
from .multiplicity import (NF_OMEGA, NF_ONE, ZERO, Usage, UsageMult,
                           UnjoinableUsage, mult_equiv, mult_normalize,
                           sub_usage, usage_add, usage_join, usage_scale,
                           usage_subst)
from .pretty import show_mult, show_type
from .syntax import (App, ArrName, ArrayLit, Case, Con, DataDecl, INT,
                     IntLit, Lam, Let, LetBind, Loc, MProd, MultApp,
                     MultExpr, MultLam, OMEGA, ONE, Prim, TArray, TArrow,
                     TData, TForall, TInt, TMArray, TVar, Term, Type, Var,
                     mult_subst, mult_vars, type_mult_vars, type_subst_mult,
                     type_subst_tvars)

BUILTIN_TYPE_NAMES = frozenset({"Int", "MArray", "Array"})

PRIM_ARG_MULTS: dict[str, tuple[MultExpr, ...]] = {
    "newMArray": (ONE, OMEGA, ONE),
    "write": (ONE, ONE, OMEGA),
    "freeze": (ONE,),
    "index": (OMEGA, ONE),
    "add": (ONE, ONE),
    "sub": (ONE, ONE),
    "mul": (ONE, ONE),
    "eq": (ONE, ONE),
    "lt": (ONE, ONE),
}

PRIM_NAMES = frozenset(PRIM_ARG_MULTS)


@dataclass(frozen=True)
class TypeEnv:
    decls: dict[str, DataDecl]
    cons: dict[str, tuple[DataDecl, ConDecl]]
    vars: dict[str, tuple[Type, MultExpr]]
    mult_vars: frozenset[str]

    @staticmethod
    def from_decls(decls: list[DataDecl]) -> "TypeEnv":
        table = {d.name: d for d in decls}
        cons = {c.name: (d, c) for d in decls for c in d.constructors}
        return TypeEnv(table, cons, {}, frozenset())

    def bind_var(self, x: str, ty: Type, mult: MultExpr) -> "TypeEnv":
        new_vars = dict(self.vars)
        new_vars[x] = (ty, mult)
        return dataclasses.replace(self, vars=new_vars)

    def bind_vars(self, binds: list[tuple[str, Type, MultExpr]]) -> "TypeEnv":
        new_vars = dict(self.vars)
        for x, ty, m in binds:
            new_vars[x] = (ty, m)
        return dataclasses.replace(self, vars=new_vars)

    def bind_mult(self, p: str) -> "TypeEnv":
        return dataclasses.replace(self, mult_vars=self.mult_vars | {p})


@dataclass
class InferResult:
    term: Term  # fully annotated
    ty: Type
    usage: Usage


def _fail(kind: Kind, msg: str, loc: Loc | None) -> CheckError:
    return CheckError.single(kind, msg, loc)


# ---------------------------------------------------------------------------
# Type equality (alpha-equivalence on forall binders, multiplicities up to
# semiring equivalence)

def _nf_key(m: MultExpr, ren: dict[str, str]):
    nf = mult_normalize(m)
    return tuple(sorted((tuple(sorted(ren.get(v, v) for v in mono)), c)
                        for mono, c in nf.terms))


def _type_eq(a: Type, b: Type, ra: dict[str, str], rb: dict[str, str],
             depth: int) -> bool:
    match (a, b):
        case (TInt(), TInt()):
            return True
        case (TVar(x), TVar(y)):
            return x == y
        case (TMArray(e1), TMArray(e2)) | (TArray(e1), TArray(e2)):
            return _type_eq(e1, e2, ra, rb, depth)
        case (TArrow(d1, m1, c1), TArrow(d2, m2, c2)):
            return (_nf_key(m1, ra) == _nf_key(m2, rb)
                    and _type_eq(d1, d2, ra, rb, depth)
                    and _type_eq(c1, c2, ra, rb, depth))
        case (TForall(p1, b1), TForall(p2, b2)):
            tag = f"\x00{depth}"
            return _type_eq(b1, b2, {**ra, p1: tag}, {**rb, p2: tag},
                            depth + 1)
        case (TData(n1, ms1, ts1), TData(n2, ms2, ts2)):
            return (n1 == n2 and len(ms1) == len(ms2) and len(ts1) == len(ts2)
                    and all(_nf_key(m1, ra) == _nf_key(m2, rb)
                            for m1, m2 in zip(ms1, ms2))
                    and all(_type_eq(t1, t2, ra, rb, depth)
                            for t1, t2 in zip(ts1, ts2)))
        case _:
            return False


def type_equiv(a: Type, b: Type) -> bool:
    return _type_eq(a, b, {}, {}, 0)


# ---------------------------------------------------------------------------
# Well-formedness

def check_type(env: TypeEnv, ty: Type, tvars: frozenset[str] = frozenset(),
               mvars: frozenset[str] | None = None,
               loc: Loc | None = None) -> None:
    """Reject types with unknown datatypes, wrong arities, or out-of-scope
    variables.  ``tvars`` is nonempty only inside datatype declarations."""
    scope = env.mult_vars if mvars is None else mvars

    def go_mult(m: MultExpr) -> None:
        for v in mult_vars(m):
            if v not in scope:
                raise _fail(Kind.MALFORMED_DECL if tvars else Kind.UNBOUND_VARIABLE,
                            f"multiplicity variable '{v}' is not in scope", loc)

    def go(ty: Type, scope_mvars: frozenset[str]) -> None:
        nonlocal scope
        saved, scope = scope, scope_mvars
        try:
            match ty:
                case TInt():
                    pass
                case TVar(name):
                    if name not in tvars:
                        raise _fail(Kind.MALFORMED_DECL,
                                    f"type variable '{name}' is not in scope", loc)
                case TMArray(elem) | TArray(elem):
                    go(elem, scope_mvars)
                case TArrow(dom, m, cod):
                    go_mult(m)
                    go(dom, scope_mvars)
                    go(cod, scope_mvars)
                case TForall(p, body):
                    go(body, scope_mvars | {p})
                case TData(name, margs, targs):
                    decl = env.decls.get(name)
                    if decl is None:
                        raise _fail(Kind.UNBOUND_VARIABLE,
                                    f"unknown datatype '{name}'", loc)
                    if (len(margs) != len(decl.mult_params)
                            or len(targs) != len(decl.type_params)):
                        raise _fail(
                            Kind.ARITY_MISMATCH,
                            f"datatype '{name}' expects {len(decl.mult_params)} "
                            f"multiplicity and {len(decl.type_params)} type "
                            f"arguments, got {len(margs)} and {len(targs)}", loc)
                    for m in margs:
                        go_mult(m)
                    for a in targs:
                        go(a, scope_mvars)
                case _:
                    raise AssertionError(ty)
        finally:
            scope = saved

    go(ty, scope)


def instantiate_con(env: TypeEnv, con_name: str, type_args: tuple[Type, ...],
                    mult_args: tuple[MultExpr, ...],
                    loc: Loc | None = None
                    ) -> tuple[list[tuple[Type, MultExpr]], Type]:
    """Instantiated field signature and result type of a constructor."""
    entry = env.cons.get(con_name)
    if entry is None:
        raise _fail(Kind.UNBOUND_VARIABLE,
                    f"unknown constructor '{con_name}'", loc)
    decl, con = entry
    if len(mult_args) != len(decl.mult_params):
        raise _fail(Kind.ARITY_MISMATCH,
                    f"constructor '{con_name}' expects "
                    f"{len(decl.mult_params)} multiplicity arguments, "
                    f"got {len(mult_args)}", loc)
    if len(type_args) != len(decl.type_params):
        raise _fail(Kind.ARITY_MISMATCH,
                    f"constructor '{con_name}' expects "
                    f"{len(decl.type_params)} type arguments, "
                    f"got {len(type_args)}", loc)
    tmap = dict(zip(decl.type_params, type_args))
    fields = []
    for fty, fmult in con.fields:
        ity = type_subst_tvars(fty, tmap)
        for p, m in zip(decl.mult_params, mult_args):
            ity = type_subst_mult(ity, p, m)
        imult = fmult
        for p, m in zip(decl.mult_params, mult_args):
            imult = mult_subst(imult, p, m)
        fields.append((ity, imult))
    result = TData(decl.name, mult_args, type_args)
    return fields, result


# ---------------------------------------------------------------------------
# Inference

def infer(env: TypeEnv, t: Term) -> InferResult:
    match t:
        case Var(name):
            binding = env.vars.get(name)
            if binding is None:
                raise _fail(Kind.UNBOUND_VARIABLE,
                            f"variable '{name}' is not in scope", t.loc)
            ty = binding[0]
            return InferResult(dataclasses.replace(t, ty=ty), ty,
                               {name: NF_ONE})

        case IntLit():
            return InferResult(dataclasses.replace(t, ty=INT), INT, {})

        case Lam(m, x, a, body):
            check_type(env, a, loc=t.loc)
            _check_mult_scope(env, m, t.loc)
            r = infer(env.bind_var(x, a, m), body)
            usage = dict(r.usage)
            ux = usage.pop(x, ZERO)
            _require_usage(x, ux, m, t.loc)
            ty = TArrow(a, m, r.ty)
            return InferResult(
                dataclasses.replace(t, body=r.term, ty=ty), ty, usage)

        case App(fun, arg):
            rf = infer(env, fun)
            if not isinstance(rf.ty, TArrow):
                raise _fail(Kind.TYPE_MISMATCH,
                            f"applied a non-function of type "
                            f"'{show_type(rf.ty)}'", t.loc)
            ra = infer(env, arg)
            if not type_equiv(ra.ty, rf.ty.dom):
                raise _fail(Kind.TYPE_MISMATCH,
                            f"argument has type '{show_type(ra.ty)}' but the "
                            f"function expects '{show_type(rf.ty.dom)}'",
                            t.loc)
            pi = rf.ty.mult
            usage = usage_add(rf.usage, usage_scale(pi, ra.usage))
            ty = rf.ty.cod
            return InferResult(
                dataclasses.replace(t, fun=rf.term, arg=ra.term, ty=ty,
                                    mult_ann=pi), ty, usage)

        case MultLam(p, body):
            _check_fresh(env, p, t.loc)
            r = infer(env.bind_mult(p), body)
            ty = TForall(p, r.ty)
            return InferResult(
                dataclasses.replace(t, body=r.term, ty=ty), ty, r.usage)

        case MultApp(fun, m):
            _check_mult_scope(env, m, t.loc)
            rf = infer(env, fun)
            if not isinstance(rf.ty, TForall):
                raise _fail(Kind.TYPE_MISMATCH,
                            f"multiplicity application to non-polymorphic "
                            f"type '{show_type(rf.ty)}'", t.loc)
            ty = type_subst_mult(rf.ty.body, rf.ty.var, m)
            usage = usage_subst(rf.usage, rf.ty.var, m)
            return InferResult(
                dataclasses.replace(t, fun=rf.term, ty=ty), ty, usage)

        case Con(name, targs, margs, args):
            for a in targs:
                check_type(env, a, loc=t.loc)
            for m in margs:
                _check_mult_scope(env, m, t.loc)
            fields, result = instantiate_con(env, name, targs, margs, t.loc)
            if len(args) != len(fields):
                raise _fail(Kind.ARITY_MISMATCH,
                            f"constructor '{name}' expects {len(fields)} "
                            f"arguments, got {len(args)}", t.loc)
            usage: Usage = {}
            new_args = []
            for (fty, fmult), arg in zip(fields, args):
                ra = infer(env, arg)
                if not type_equiv(ra.ty, fty):
                    raise _fail(Kind.TYPE_MISMATCH,
                                f"field of '{name}' has type "
                                f"'{show_type(ra.ty)}' but the signature "
                                f"declares '{show_type(fty)}'", t.loc)
                usage = usage_add(usage, usage_scale(fmult, ra.usage))
                new_args.append(ra.term)
            return InferResult(
                dataclasses.replace(t, args=tuple(new_args), ty=result),
                result, usage)

        case Case(m, scrut, branches):
            _check_mult_scope(env, m, t.loc)
            rs = infer(env, scrut)
            if not isinstance(rs.ty, TData):
                raise _fail(Kind.TYPE_MISMATCH,
                            f"case scrutinee has non-datatype type "
                            f"'{show_type(rs.ty)}'", t.loc)
            decl = env.decls[rs.ty.name]
            seen: set[str] = set()
            joined: Usage | None = None
            result_ty: Type | None = None
            new_branches = []
            for br in branches:
                if br.con in seen:
                    raise _fail(Kind.MALFORMED_DECL,
                                f"duplicate case branch for '{br.con}'",
                                br.loc or t.loc)
                seen.add(br.con)
                entry = env.cons.get(br.con)
                if entry is None or entry[0].name != decl.name:
                    raise _fail(Kind.TYPE_MISMATCH,
                                f"branch constructor '{br.con}' does not "
                                f"belong to datatype '{decl.name}'",
                                br.loc or t.loc)
                fields, _ = instantiate_con(env, br.con, rs.ty.type_args,
                                            rs.ty.mult_args, br.loc)
                if len(br.binders) != len(fields):
                    raise _fail(Kind.ARITY_MISMATCH,
                                f"branch '{br.con}' binds {len(br.binders)} "
                                f"variables but the constructor has "
                                f"{len(fields)} fields", br.loc or t.loc)
                binder_mults = [MProd(m, fmult) for _, fmult in fields]
                benv = env.bind_vars([
                    (x, fty, bm) for x, (fty, _), bm
                    in zip(br.binders, fields, binder_mults)])
                rb = infer(benv, br.body)
                busage = dict(rb.usage)
                for x, bm in zip(br.binders, binder_mults):
                    ux = busage.pop(x, ZERO)
                    _require_usage(x, ux, bm, br.loc or t.loc)
                if result_ty is None:
                    result_ty = rb.ty
                elif not type_equiv(result_ty, rb.ty):
                    raise _fail(Kind.TYPE_MISMATCH,
                                f"branch '{br.con}' returns "
                                f"'{show_type(rb.ty)}' but an earlier branch "
                                f"returned '{show_type(result_ty)}'",
                                br.loc or t.loc)
                try:
                    joined = busage if joined is None else usage_join(joined, busage)
                except UnjoinableUsage as exc:
                    raise _fail(Kind.UNJOINABLE_USAGE,
                                f"variable '{exc.var}' is used at "
                                f"incompatible multiplicities across case "
                                f"branches", br.loc or t.loc) from None
                new_branches.append(dataclasses.replace(br, body=rb.term))
            assert result_ty is not None and joined is not None
            usage = usage_add(usage_scale(m, rs.usage), joined)
            return InferResult(
                dataclasses.replace(t, scrut=rs.term,
                                    branches=tuple(new_branches),
                                    ty=result_ty),
                result_ty, usage)

        case Let(m, binds, body):
            _check_mult_scope(env, m, t.loc)
            for b in binds:
                check_type(env, b.var_ty, loc=b.loc or t.loc)
            names = [b.var for b in binds]
            if len(set(names)) != len(names):
                raise _fail(Kind.MALFORMED_DECL,
                            "duplicate binder in let group", t.loc)
            recursive = mult_normalize(m) == NF_OMEGA
            rhs_env = env
            if recursive:
                rhs_env = env.bind_vars([(b.var, b.var_ty, OMEGA)
                                         for b in binds])
            rhs_usage: Usage = {}
            new_binds = []
            for b in binds:
                rb = infer(rhs_env, b.rhs)
                if not type_equiv(rb.ty, b.var_ty):
                    raise _fail(Kind.TYPE_MISMATCH,
                                f"binding '{b.var}' declares type "
                                f"'{show_type(b.var_ty)}' but its definition "
                                f"has type '{show_type(rb.ty)}'",
                                b.loc or t.loc)
                u = dict(rb.usage)
                if recursive:
                    for x in names:
                        u.pop(x, None)  # recursive refs sit under an w binder
                rhs_usage = usage_add(rhs_usage, u)
                new_binds.append(dataclasses.replace(b, rhs=rb.term))
            benv = env.bind_vars([(b.var, b.var_ty, m) for b in binds])
            rb_body = infer(benv, body)
            usage = dict(rb_body.usage)
            for x in names:
                ux = usage.pop(x, ZERO)
                _require_usage(x, ux, m, t.loc)
            usage = usage_add(usage, usage_scale(m, rhs_usage))
            return InferResult(
                dataclasses.replace(t, binds=tuple(new_binds),
                                    body=rb_body.term, ty=rb_body.ty),
                rb_body.ty, usage)

        case Prim(name, args):
            return _infer_prim(env, t, name, args)

        case ArrayLit(elems, elem_ty, frozen_tag):
            usage = {}
            for e in elems:
                binding = env.vars.get(e)
                if binding is None:
                    raise _fail(Kind.UNBOUND_VARIABLE,
                                f"array element '{e}' is not in scope", t.loc)
                if not type_equiv(binding[0], elem_ty):
                    raise _fail(Kind.TYPE_MISMATCH,
                                f"array element '{e}' has type "
                                f"'{show_type(binding[0])}', expected "
                                f"'{show_type(elem_ty)}'", t.loc)
                usage = usage_add(usage, {e: NF_OMEGA})
            ty: Type = TArray(elem_ty) if frozen_tag else TMArray(elem_ty)
            return InferResult(dataclasses.replace(t, ty=ty), ty, usage)

        case ArrName():
            raise _fail(Kind.TYPE_MISMATCH,
                        "array cell references are not typeable terms", t.loc)

        case _:
            raise AssertionError(f"unknown term {t!r}")


def _require_usage(x: str, u: UsageMult, declared: MultExpr,
                   loc: Loc | None) -> None:
    if not sub_usage(u, declared):
        from .multiplicity import nf_render
        shown = "0" if u is ZERO else show_mult(nf_render(u))
        raise _fail(Kind.LINEARITY_MISMATCH,
                    f"variable '{x}' is used with multiplicity {shown} but "
                    f"is bound with multiplicity {show_mult(declared)}", loc)


def _check_mult_scope(env: TypeEnv, m: MultExpr, loc: Loc | None) -> None:
    for v in mult_vars(m):
        if v not in env.mult_vars:
            raise _fail(Kind.UNBOUND_VARIABLE,
                        f"multiplicity variable '{v}' is not in scope", loc)


def _check_fresh(env: TypeEnv, p: str, loc: Loc | None) -> None:
    for x, (ty, m) in env.vars.items():
        if p in type_mult_vars(ty) or p in mult_vars(m):
            raise _fail(Kind.FRESHNESS_VIOLATION,
                        f"multiplicity variable '{p}' already occurs in the "
                        f"type or multiplicity of '{x}'", loc)


def _expect_decl(env: TypeEnv, name: str, n_mult: int, n_type: int,
                 why: str, loc: Loc | None) -> None:
    decl = env.decls.get(name)
    if (decl is None or len(decl.mult_params) != n_mult
            or len(decl.type_params) != n_type):
        raise _fail(Kind.UNBOUND_VARIABLE,
                    f"{why} requires the datatype '{name}' "
                    f"({n_mult} multiplicity / {n_type} type parameters) "
                    f"to be in scope", loc)


def _infer_prim(env: TypeEnv, t: Term, name: str,
                args: tuple[Term, ...]) -> InferResult:
    mults = PRIM_ARG_MULTS.get(name)
    if mults is None:
        raise _fail(Kind.UNBOUND_VARIABLE, f"unknown primitive '{name}'",
                    t.loc)
    if len(args) != len(mults):
        raise _fail(Kind.ARITY_MISMATCH,
                    f"primitive '{name}' expects {len(mults)} arguments, "
                    f"got {len(args)}", t.loc)
    rs = [infer(env, a) for a in args]

    def want(i: int, ty: Type, what: str) -> None:
        if not type_equiv(rs[i].ty, ty):
            raise _fail(Kind.TYPE_MISMATCH,
                        f"argument {i + 1} of '{name}' has type "
                        f"'{show_type(rs[i].ty)}' but {what} "
                        f"'{show_type(ty)}' is required", t.loc)

    result: Type
    if name in ("add", "sub", "mul", "eq", "lt"):
        want(0, INT, "type")
        want(1, INT, "type")
        if name in ("eq", "lt"):
            _expect_decl(env, "Bool", 0, 0, f"primitive '{name}'", t.loc)
            result = TData("Bool")
        else:
            result = INT
    elif name == "newMArray":
        want(0, INT, "type")
        elem = rs[1].ty
        fty = rs[2].ty
        ok = (isinstance(fty, TArrow) and mult_equiv(fty.mult, ONE)
              and type_equiv(fty.dom, TMArray(elem))
              and isinstance(fty.cod, TData) and fty.cod.name == "Unrestricted"
              and len(fty.cod.type_args) == 1 and not fty.cod.mult_args)
        if not ok:
            raise _fail(Kind.TYPE_MISMATCH,
                        f"argument 3 of 'newMArray' has type "
                        f"'{show_type(fty)}' but a continuation "
                        f"'MArray {show_type(elem, 2)} ->[1] Unrestricted b' "
                        f"is required", t.loc)
        _expect_decl(env, "Unrestricted", 0, 1, "primitive 'newMArray'", t.loc)
        result = fty.cod
    elif name == "write":
        arr_ty = rs[0].ty
        if not isinstance(arr_ty, TMArray):
            raise _fail(Kind.TYPE_MISMATCH,
                        f"argument 1 of 'write' has type "
                        f"'{show_type(arr_ty)}' but a mutable array is "
                        f"required", t.loc)
        want(1, INT, "type")
        want(2, arr_ty.elem, "the element type")
        result = arr_ty
    elif name == "freeze":
        arr_ty = rs[0].ty
        if not isinstance(arr_ty, TMArray):
            raise _fail(Kind.TYPE_MISMATCH,
                        f"argument 1 of 'freeze' has type "
                        f"'{show_type(arr_ty)}' but a mutable array is "
                        f"required", t.loc)
        _expect_decl(env, "Unrestricted", 0, 1, "primitive 'freeze'", t.loc)
        result = TData("Unrestricted", (), (TArray(arr_ty.elem),))
    elif name == "index":
        arr_ty = rs[0].ty
        if not isinstance(arr_ty, TArray):
            raise _fail(Kind.TYPE_MISMATCH,
                        f"argument 1 of 'index' has type "
                        f"'{show_type(arr_ty)}' but a frozen array is "
                        f"required", t.loc)
        want(1, INT, "type")
        result = arr_ty.elem
    else:
        raise AssertionError(name)

    usage: Usage = {}
    for r, m in zip(rs, mults):
        usage = usage_add(usage, usage_scale(m, r.usage))
    return InferResult(
        dataclasses.replace(t, args=tuple(r.term for r in rs), ty=result),
        result, usage)


# ---------------------------------------------------------------------------
# Declarations and whole programs

def check_datadecl(d: DataDecl, decls: dict[str, DataDecl] | None = None
                   ) -> None:
    errs: list[Diagnostic] = []
    params = list(d.mult_params) + list(d.type_params)
    if len(set(params)) != len(params):
        errs.append(Diagnostic(Kind.MALFORMED_DECL,
                               f"duplicate parameter in datatype '{d.name}'",
                               d.loc))
    con_names = [c.name for c in d.constructors]
    if len(set(con_names)) != len(con_names):
        errs.append(Diagnostic(Kind.MALFORMED_DECL,
                               f"duplicate constructor in datatype "
                               f"'{d.name}'", d.loc))
    table = dict(decls) if decls else {}
    table.setdefault(d.name, d)
    env = TypeEnv(table, {}, {}, frozenset())
    tvars = frozenset(d.type_params)
    mvars = frozenset(d.mult_params)
    for c in d.constructors:
        for fty, fmult in c.fields:
            extra = mult_vars(fmult) - mvars
            if extra:
                errs.append(Diagnostic(
                    Kind.MALFORMED_DECL,
                    f"field multiplicity of '{c.name}' mentions "
                    f"'{sorted(extra)[0]}' which is not a parameter of "
                    f"'{d.name}'", c.loc or d.loc))
            try:
                check_type(env, fty, tvars=tvars, mvars=mvars,
                           loc=c.loc or d.loc)
            except CheckError as exc:
                errs.extend(exc.diagnostics)
    if errs:
        raise CheckError(errs)


@dataclass
class CheckedProgram:
    term: Term  # annotated whole-program term (defs elaborated as lets)
    ty: Type
    env: TypeEnv


Defs = list[tuple[str, Type, MultExpr, Term]]


def elaborate_defs(defs: Defs, main: Term) -> Term:
    """Wrap ``main`` in nested lets.  Consecutive w definitions form a
    single (mutually recursive) group; a 1 definition is its own
    non-recursive binding."""
    groups: list[tuple[MultExpr, list[tuple[str, Type, Term]]]] = []
    for name, ty, m, rhs in defs:
        is_omega = mult_normalize(m) == NF_OMEGA
        if (groups and is_omega
                and mult_normalize(groups[-1][0]) == NF_OMEGA):
            groups[-1][1].append((name, ty, rhs))
        else:
            groups.append((m, [(name, ty, rhs)]))
    term = main
    for m, group in reversed(groups):
        binds = tuple(LetBind(n, ty, rhs) for n, ty, rhs in group)
        term = Let(mult=m, binds=binds, body=term)
    return term


def check_program(decls: list[DataDecl], defs: Defs,
                  main: Term) -> CheckedProgram:
    errs: list[Diagnostic] = []
    seen_types: set[str] = set(BUILTIN_TYPE_NAMES)
    seen_cons: set[str] = set()
    for d in decls:
        if d.name in seen_types:
            errs.append(Diagnostic(Kind.MALFORMED_DECL,
                                   f"datatype '{d.name}' is declared twice "
                                   f"or shadows a builtin", d.loc))
        seen_types.add(d.name)
        for c in d.constructors:
            if c.name in seen_cons:
                errs.append(Diagnostic(Kind.MALFORMED_DECL,
                                       f"constructor '{c.name}' is declared "
                                       f"twice", c.loc or d.loc))
            seen_cons.add(c.name)
    table = {d.name: d for d in decls}
    for d in decls:
        try:
            check_datadecl(d, table)
        except CheckError as exc:
            errs.extend(exc.diagnostics)
    if errs:
        raise CheckError(errs)

    env = TypeEnv.from_decls(decls)
    def_names = [name for name, *_ in defs]
    if len(set(def_names)) != len(def_names):
        dup = next(n for n in def_names if def_names.count(n) > 1)
        raise CheckError.single(Kind.MALFORMED_DECL,
                                f"definition '{dup}' appears twice", None)

    # First pass, for error aggregation: check every definition body against
    # its declared type under the bindings visible at that point.
    program = elaborate_defs(defs, main)
    probe_env = env
    pending: Defs = list(defs)
    while pending:
        name, ty, m, rhs = pending[0]
        group = [pending[0]]
        if mult_normalize(m) == NF_OMEGA:
            while (len(group) < len(pending)
                   and mult_normalize(pending[len(group)][2]) == NF_OMEGA):
                group.append(pending[len(group)])
        pending = pending[len(group):]
        rhs_env = probe_env
        if mult_normalize(m) == NF_OMEGA:
            rhs_env = probe_env.bind_vars([(n, t_, OMEGA)
                                           for n, t_, _, _ in group])
        for n, t_, gm, grhs in group:
            try:
                check_type(probe_env, t_)
                r = infer(rhs_env, grhs)
                if not type_equiv(r.ty, t_):
                    errs.append(Diagnostic(
                        Kind.TYPE_MISMATCH,
                        f"definition '{n}' declares type '{show_type(t_)}' "
                        f"but its body has type '{show_type(r.ty)}'",
                        grhs.loc))
            except CheckError as exc:
                errs.extend(exc.diagnostics)
        probe_env = probe_env.bind_vars([(n, t_, gm)
                                         for n, t_, gm, _ in group])
    try:
        result = infer(env, program)
    except CheckError as exc:
        known = {str(d) for d in errs}
        errs.extend(d for d in exc.diagnostics if str(d) not in known)
        raise CheckError(errs) from None
    if errs:
        raise CheckError(errs)
    leftover = {x for x, u in result.usage.items() if u is not ZERO}
    assert not leftover, f"closed program with residual usage: {leftover}"
    return CheckedProgram(result.term, result.ty, env)


# ---------------------------------------------------------------------------
# Annotation helpers, mostly for tests

def strip_annotations(t: Term) -> Term:
    def go(t: Term) -> Term:
        t = dataclasses.replace(t, ty=None)
        match t:
            case Lam():
                return dataclasses.replace(t, body=go(t.body))
            case App():
                return dataclasses.replace(t, fun=go(t.fun), arg=go(t.arg),
                                           mult_ann=None)
            case MultLam():
                return dataclasses.replace(t, body=go(t.body))
            case MultApp():
                return dataclasses.replace(t, fun=go(t.fun))
            case Con() | Prim():
                return dataclasses.replace(
                    t, args=tuple(go(a) for a in t.args))
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


def annotations_equal(a: Term, b: Term) -> bool:
    """Do two structurally equal terms carry identical annotations?"""
    from .syntax import subterms
    subs_a, subs_b = list(subterms(a)), list(subterms(b))
    if len(subs_a) != len(subs_b):
        return False
    for x, y in zip(subs_a, subs_b):
        if (x.ty is None) != (y.ty is None):
            return False
        if x.ty is not None and not type_equiv(x.ty, y.ty):
            return False
        if isinstance(x, App) and isinstance(y, App):
            if (x.mult_ann is None) != (y.mult_ann is None):
                return False
            if x.mult_ann is not None and not mult_equiv(x.mult_ann, y.mult_ann):
                return False
    return True
