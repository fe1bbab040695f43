"""The source-to-source transformation from object-oriented to recursive
programs, together with its companions on states and assertions.

Instance variables become normal arrays indexed by object identity:

    instance x : T               ->  normal x : object -> T
    instance a : T1 x..x Tn -> T ->  normal a : object x T1 x..x Tn -> T

Accesses lift accordingly (x becomes x[this], s.x becomes x[image of s]), a
method call s.m(t) becomes `if s' /= null -> m(s', t') fi`, and every method
declaration gains `this` as an extra first formal parameter.  States move
their per-object local entries into cells of the lifted arrays; fail maps to
fail.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import syntax as syn
from .syntax import (
    Assign, BinOp, Block, BoolLit, Cond, Decl, Expr, FailIf, Higher, IfElse,
    INSTANCE, IntLit, MethodCall, Nav, NORMAL, NullLit, OBJECT, OO, ParAssign,
    ProcCall, Program, Quant, RECURSIVE, Seq, Skip, Stmt, Sub, Ty, UnOp, Var,
    VarRef, While,
)
from .state import (
    FAIL, NULL_V, ArrayVal, BoolV, Fail, IntV, ObjV, Outcome, State,
)


class TransformError(Exception):
    pass


def lift_ref(ref: VarRef) -> VarRef:
    """Normal array variable representing an instance variable."""
    assert ref.kind == INSTANCE
    if isinstance(ref.ty, Higher):
        return VarRef(NORMAL, ref.name, Higher((syn.OBJECT,) + ref.ty.args, ref.ty.value))
    return VarRef(NORMAL, ref.name, Higher((syn.OBJECT,), ref.ty))


@dataclass(frozen=True)
class ThetaImage:
    program: Program
    var_mapping: tuple[tuple[str, Ty, Ty], ...]  # name, instance type, lifted type


def transform_expr(e: Expr) -> Expr:
    """Image of an expression or assertion; structurally recursive."""
    if isinstance(e, (IntLit, BoolLit, NullLit)):
        return e
    if isinstance(e, Var):
        if e.ref.kind == INSTANCE:
            return Sub(lift_ref(e.ref), (Var(syn.THIS),))
        return e
    if isinstance(e, Sub):
        idx = tuple(transform_expr(i) for i in e.indices)
        if e.ref.kind == INSTANCE:
            return Sub(lift_ref(e.ref), (Var(syn.THIS),) + idx)
        return Sub(e.ref, idx)
    if isinstance(e, Nav):
        base = transform_expr(e.base)
        if e.indices is None:
            return Sub(lift_ref(e.ref), (base,))
        idx = tuple(transform_expr(i) for i in e.indices)
        return Sub(lift_ref(e.ref), (base,) + idx)
    if isinstance(e, Cond):
        return Cond(transform_expr(e.guard), transform_expr(e.then),
                    transform_expr(e.orelse))
    if isinstance(e, BinOp):
        return BinOp(e.op, transform_expr(e.left), transform_expr(e.right))
    if isinstance(e, UnOp):
        return UnOp(e.op, transform_expr(e.operand))
    if isinstance(e, Quant):
        return Quant(e.kind, e.var, transform_expr(e.body))
    raise TransformError(f"cannot transform {e!r}")


transform_assertion = transform_expr


def transform_stmt(s: Stmt) -> Stmt:
    if isinstance(s, Skip):
        return s
    if isinstance(s, Assign):
        target = transform_expr(s.target)
        assert isinstance(target, (Var, Sub))
        return Assign(target, transform_expr(s.value))
    if isinstance(s, ParAssign):
        return ParAssign(s.targets, tuple(transform_expr(v) for v in s.values))
    if isinstance(s, Seq):
        return Seq(transform_stmt(s.first), transform_stmt(s.rest))
    if isinstance(s, IfElse):
        return IfElse(transform_expr(s.guard), transform_stmt(s.then),
                      transform_stmt(s.orelse))
    if isinstance(s, While):
        return While(transform_expr(s.guard), transform_stmt(s.body))
    if isinstance(s, FailIf):
        return FailIf(transform_expr(s.guard), transform_stmt(s.body))
    if isinstance(s, Block):
        locs = ParAssign(s.locals.targets,
                         tuple(transform_expr(v) for v in s.locals.values))
        return Block(locs, transform_stmt(s.body))
    if isinstance(s, MethodCall):
        callee = transform_expr(s.callee)
        args = tuple(transform_expr(a) for a in s.args)
        call = ProcCall(s.name, (callee,) + args)
        return FailIf(BinOp("/=", callee, NullLit()), call)
    raise TransformError(f"cannot transform {type(s).__name__}")


def transform_decls(decls: tuple[Decl, ...]) -> tuple[Decl, ...]:
    """m(u1,...,un)::S becomes m(this,u1,...,un)::image(S)."""
    return tuple(
        Decl(d.name, (syn.THIS,) + d.formals, transform_stmt(d.body))
        for d in decls)


def transform_program(program: Program) -> ThetaImage:
    if program.flavor != OO:
        raise TransformError("transformation expects an object-oriented program")
    mapping: dict[str, tuple[Ty, Ty]] = {}
    for d in program.decls:
        _collect_ivars(d.body, mapping)
    _collect_ivars(program.main, mapping)
    image = Program(transform_decls(program.decls),
                    transform_stmt(program.main), RECURSIVE)
    var_mapping = tuple((name, old, new) for name, (old, new) in sorted(mapping.items()))
    return ThetaImage(image, var_mapping)


def _collect_ivars(s: Stmt, mapping: dict) -> None:
    for stmt in syn.walk_stmt(s):
        for e in syn.stmt_exprs(stmt):
            for ref in syn.expr_var_refs(e):
                if ref.kind == INSTANCE:
                    mapping[ref.name] = (ref.ty, lift_ref(ref).ty)


def transform_state(out: Outcome) -> Outcome:
    """Re-house every per-object instance entry into the lifted arrays."""
    if isinstance(out, Fail):
        return FAIL
    sigma = out
    cells: dict[str, dict[tuple, object]] = {}
    defaults: dict[str, object] = {}
    for o, entries in sigma.locals:
        owner = ObjV(o)
        for name, stored in entries:
            d = cells.setdefault(name, {})
            if isinstance(stored, ArrayVal):
                defaults[name] = stored.default
                for key, val in stored.overrides:
                    d[(owner,) + key] = val
            else:
                defaults[name] = _default_of(stored)
                d[(owner,)] = stored
    normals = dict(sigma.normals)
    for name, d in cells.items():
        arr = ArrayVal(defaults[name], ())
        for key, val in d.items():
            arr = arr.set(key, val)
        if not arr.is_default:
            normals[name] = arr
    return State.make(normals=normals)


def _default_of(value):
    if isinstance(value, IntV):
        return IntV(0)
    if isinstance(value, BoolV):
        return BoolV(False)
    return NULL_V
