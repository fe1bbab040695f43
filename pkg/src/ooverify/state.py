"""Proper states, the fail outcome, expression evaluation, and state updates.

A state assigns a value to every variable; we represent that total function
finitely by storing only the entries that differ from the type default
(integer 0, boolean false, object null).  Each object, including null, owns a
local state mapping instance variables to values.  States are immutable:
updates return new, normalized states, so structural equality of the
representation coincides with equality of the denoted total functions over
any fixed footprint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import syntax as syn
from .syntax import (
    BOOL, INT, INSTANCE, NORMAL, OBJECT, Basic, BinOp, BoolLit, Cond, Expr,
    Higher, IntLit, Nav, NullLit, Quant, Sub, Ty, UnOp, Var, VarRef,
)

# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Null:
    def __repr__(self) -> str:
        return "null"


@dataclass(frozen=True)
class Oid:
    n: int

    def __repr__(self) -> str:
        return f"o{self.n}"


ObjectRef = Union[Null, Oid]
NULL = Null()


@dataclass(frozen=True)
class IntV:
    value: int

    def __repr__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BoolV:
    value: bool

    def __repr__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class ObjV:
    ref: ObjectRef

    def __repr__(self) -> str:
        return repr(self.ref)


Value = Union[IntV, BoolV, ObjV]

TRUE_V = BoolV(True)
FALSE_V = BoolV(False)
NULL_V = ObjV(NULL)


def default_value(ty: Basic) -> Value:
    if ty == INT:
        return IntV(0)
    if ty == BOOL:
        return FALSE_V
    if ty == OBJECT:
        return NULL_V
    raise ValueError(f"no default for {ty!r}")


@dataclass(frozen=True)
class ArrayVal:
    """Array value as a default plus finitely many overriding cells."""

    default: Value
    overrides: tuple[tuple[tuple[Value, ...], Value], ...]  # sorted items

    def get(self, key: tuple[Value, ...]) -> Value:
        for k, v in self.overrides:
            if k == key:
                return v
        return self.default

    def set(self, key: tuple[Value, ...], value: Value) -> "ArrayVal":
        items = {k: v for k, v in self.overrides}
        if value == self.default:
            items.pop(key, None)
        else:
            items[key] = value
        return ArrayVal(self.default, _sorted_cells(items))

    @property
    def is_default(self) -> bool:
        return not self.overrides


def _value_key(v: Value):
    if isinstance(v, IntV):
        return (0, v.value)
    if isinstance(v, BoolV):
        return (1, v.value)
    ref = v.ref
    return (2, -1 if isinstance(ref, Null) else ref.n)


def _cell_key(key: tuple[Value, ...]):
    return tuple(_value_key(v) for v in key)


def _sorted_cells(items: dict) -> tuple:
    return tuple(sorted(items.items(), key=lambda kv: _cell_key(kv[0])))


def array_of(ty: Higher, cells: dict | None = None) -> ArrayVal:
    av = ArrayVal(default_value(ty.value), ())
    for k, v in (cells or {}).items():
        av = av.set(tuple(k) if isinstance(k, (tuple, list)) else (k,), v)
    return av


Stored = Union[Value, ArrayVal]


# ---------------------------------------------------------------------------
# States and outcomes
# ---------------------------------------------------------------------------


def _obj_key(o: ObjectRef):
    return -1 if isinstance(o, Null) else o.n


@dataclass(frozen=True)
class State:
    """normals: name -> stored value; locals: object -> (name -> stored value).

    Absent entries denote the owning type's default, so a State must never
    store a default-valued entry (updates maintain this normal form).
    """

    normals: tuple[tuple[str, Stored], ...]
    locals: tuple[tuple[ObjectRef, tuple[tuple[str, Stored], ...]], ...]

    @staticmethod
    def make(normals: dict | None = None, locals: dict | None = None) -> "State":
        n = dict(normals or {})
        l = {o: dict(m) for o, m in (locals or {}).items()}
        return State(_norm_entries(n), _norm_locals(l))

    # -- lookups ------------------------------------------------------------

    def normal(self, ref: VarRef) -> Stored:
        for k, v in self.normals:
            if k == ref.name:
                return v
        return _fresh_default(ref.ty)

    def local(self, o: ObjectRef, ref: VarRef) -> Stored:
        for obj, entries in self.locals:
            if obj == o:
                for k, v in entries:
                    if k == ref.name:
                        return v
        return _fresh_default(ref.ty)

    def this(self) -> ObjectRef:
        v = self.normal(syn.THIS)
        assert isinstance(v, ObjV)
        return v.ref

    # -- functional updates --------------------------------------------------

    def with_normal(self, ref: VarRef, value: Stored) -> "State":
        n = dict(self.normals)
        if _is_default(ref.ty, value):
            n.pop(ref.name, None)
        else:
            n[ref.name] = value
        return State(_norm_entries(n), self.locals)

    def with_local(self, o: ObjectRef, ref: VarRef, value: Stored) -> "State":
        l = {obj: dict(entries) for obj, entries in self.locals}
        entries = l.setdefault(o, {})
        if _is_default(ref.ty, value):
            entries.pop(ref.name, None)
        else:
            entries[ref.name] = value
        return State(self.normals, _norm_locals(l))


def _fresh_default(ty: Ty) -> Stored:
    if isinstance(ty, Higher):
        return ArrayVal(default_value(ty.value), ())
    return default_value(ty)


def _is_default(ty: Ty, value: Stored) -> bool:
    if isinstance(value, ArrayVal):
        return value.is_default and (not isinstance(ty, Higher) or value.default == default_value(ty.value))
    return isinstance(ty, Basic) and value == default_value(ty)


_KIND_DEFAULTS = (IntV(0), BoolV(False), ObjV(NULL))


def _stored_is_default(v: Stored) -> bool:
    if isinstance(v, ArrayVal):
        return v.is_default and v.default in _KIND_DEFAULTS
    return v in _KIND_DEFAULTS


def _norm_entries(d: dict) -> tuple:
    clean = {k: v for k, v in d.items() if not _stored_is_default(v)}
    return tuple(sorted(clean.items()))


def _norm_locals(l: dict) -> tuple:
    out = []
    for o, entries in l.items():
        e = _norm_entries(entries if isinstance(entries, dict) else dict(entries))
        if e:
            out.append((o, e))
    return tuple(sorted(out, key=lambda kv: _obj_key(kv[0])))


@dataclass(frozen=True)
class Fail:
    def __repr__(self) -> str:
        return "fail"


FAIL = Fail()
Outcome = Union[State, Fail]


def states_equal(a: Outcome, b: Outcome) -> bool:
    """Equality of normalized outcomes; Fail equals only Fail."""
    if isinstance(a, Fail) or isinstance(b, Fail):
        return isinstance(a, Fail) and isinstance(b, Fail)
    return a == b


# ---------------------------------------------------------------------------
# Expression evaluation
# ---------------------------------------------------------------------------


class EvalError(Exception):
    pass


def eval_expr(sigma: State, e: Expr, universe=None) -> Value:
    """Value of a well-typed expression in a proper state.

    Instance variables read through the current object's local state;
    navigation reads through the evaluated base object (null included, whose
    local state exists but is unreachable in safe runs).  Quantifiers require
    a universe and are normally evaluated via assertions.eval_assertion.
    """
    if isinstance(e, IntLit):
        return IntV(e.value)
    if isinstance(e, BoolLit):
        return BoolV(e.value)
    if isinstance(e, NullLit):
        return NULL_V
    if isinstance(e, Var):
        if e.ref.kind == NORMAL:
            v = sigma.normal(e.ref)
        else:
            v = sigma.local(sigma.this(), e.ref)
        assert not isinstance(v, ArrayVal)
        return v
    if isinstance(e, Sub):
        idx = tuple(eval_expr(sigma, i, universe) for i in e.indices)
        if e.ref.kind == NORMAL:
            arr = sigma.normal(e.ref)
        else:
            arr = sigma.local(sigma.this(), e.ref)
        assert isinstance(arr, ArrayVal)
        return arr.get(idx)
    if isinstance(e, Nav):
        base = eval_expr(sigma, e.base, universe)
        assert isinstance(base, ObjV)
        if e.indices is None:
            v = sigma.local(base.ref, e.ref)
            assert not isinstance(v, ArrayVal)
            return v
        idx = tuple(eval_expr(sigma, i, universe) for i in e.indices)
        arr = sigma.local(base.ref, e.ref)
        assert isinstance(arr, ArrayVal)
        return arr.get(idx)
    if isinstance(e, Cond):
        g = eval_expr(sigma, e.guard, universe)
        assert isinstance(g, BoolV)
        return eval_expr(sigma, e.then if g.value else e.orelse, universe)
    if isinstance(e, BinOp):
        return _eval_binop(sigma, e, universe)
    if isinstance(e, UnOp):
        v = eval_expr(sigma, e.operand, universe)
        assert isinstance(v, BoolV)
        return BoolV(not v.value)
    if isinstance(e, Quant):
        if universe is None:
            raise EvalError("quantifier evaluation needs a universe")
        from .assertions import eval_assertion  # late import, no cycle at module load

        return BoolV(eval_assertion(sigma, e, universe))
    raise EvalError(f"cannot evaluate {e!r}")


def _eval_binop(sigma: State, e: BinOp, universe) -> Value:
    op = e.op
    if op == "and":
        l = eval_expr(sigma, e.left, universe)
        return eval_expr(sigma, e.right, universe) if l.value else FALSE_V
    if op == "or":
        l = eval_expr(sigma, e.left, universe)
        return TRUE_V if l.value else eval_expr(sigma, e.right, universe)
    if op == "->":
        l = eval_expr(sigma, e.left, universe)
        return eval_expr(sigma, e.right, universe) if l.value else TRUE_V
    l = eval_expr(sigma, e.left, universe)
    r = eval_expr(sigma, e.right, universe)
    if op == "=":
        return BoolV(l == r)
    if op == "/=":
        return BoolV(l != r)
    assert isinstance(l, IntV) and isinstance(r, IntV)
    if op == "+":
        return IntV(l.value + r.value)
    if op == "-":
        return IntV(l.value - r.value)
    if op == "*":
        return IntV(l.value * r.value)
    if op == "<":
        return BoolV(l.value < r.value)
    if op == "<=":
        return BoolV(l.value <= r.value)
    raise EvalError(f"unknown operator {op}")


def holds(sigma: State, b: Expr, universe=None) -> bool:
    v = eval_expr(sigma, b, universe)
    assert isinstance(v, BoolV)
    return v.value


# ---------------------------------------------------------------------------
# State updates
# ---------------------------------------------------------------------------


def update(out: Outcome, target: Union[Var, Sub], d: Value) -> Outcome:
    """sigma[u:=d] for a simple or subscripted, normal or instance target.

    Subscripts are evaluated in the state being updated; fail absorbs every
    update.
    """
    if isinstance(out, Fail):
        return FAIL
    sigma = out
    ref = target.ref
    if isinstance(target, Var):
        if ref.kind == NORMAL:
            return sigma.with_normal(ref, d)
        o = sigma.this()
        return sigma.with_local(o, ref, d)
    idx = tuple(eval_expr(sigma, i) for i in target.indices)
    if ref.kind == NORMAL:
        arr = sigma.normal(ref)
        assert isinstance(arr, ArrayVal)
        return sigma.with_normal(ref, arr.set(idx, d))
    o = sigma.this()
    arr = sigma.local(o, ref)
    assert isinstance(arr, ArrayVal)
    return sigma.with_local(o, ref, arr.set(idx, d))


def update_parallel(out: Outcome, refs: tuple[VarRef, ...], ds: tuple[Value, ...]) -> Outcome:
    """Parallel update of distinct simple normal variables."""
    if isinstance(out, Fail):
        return FAIL
    if len(set(r.name for r in refs)) != len(refs):
        raise ValueError("parallel update requires distinct targets")
    sigma = out
    for r, d in zip(refs, ds):
        sigma = sigma.with_normal(r, d)
    return sigma


# ---------------------------------------------------------------------------
# Rendering (the state-literal fixture format)
# ---------------------------------------------------------------------------


def render_value(v: Value) -> str:
    return repr(v)


def render_state(sigma: State) -> str:
    """Deterministic `state { ... }` literal for a normalized state."""
    parts: list[str] = []
    for name, stored in sigma.normals:
        if isinstance(stored, ArrayVal):
            for key, val in stored.overrides:
                ix = ", ".join(render_value(k) for k in key)
                parts.append(f"{name}[{ix}] = {render_value(val)}")
        else:
            parts.append(f"{name} = {render_value(stored)}")
    for o, entries in sigma.locals:
        owner = render_value(ObjV(o))
        for name, stored in entries:
            if isinstance(stored, ArrayVal):
                for key, val in stored.overrides:
                    ix = ", ".join(render_value(k) for k in key)
                    parts.append(f"{owner}.{name}[{ix}] = {render_value(val)}")
            else:
                parts.append(f"{owner}.{name} = {render_value(stored)}")
    inner = " ".join(p + ";" for p in parts)
    return "state { " + inner + " }" if inner else "state { }"
