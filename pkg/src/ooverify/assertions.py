"""Assertion evaluation over bounded universes and the substitution calculus.

Substitution s[u:=t] must account for aliasing.  For normal subscripted
variables the classic conditional-expression treatment applies; for instance
variables every possible alias e.u of the target has to be tested against the
current object, which yields conditionals of the forms

    (e.u)[u:=t]        = (e' = this ? t : e'.u)
    (e.a[s1..sn])[a[t1..tn]:=t] = (e' = this and s1'=t1 and ... ? t : e'.a[s1'..sn'])

where primes mark inductive substitution.  A bare instance variable u is read
as this.u throughout.

Quantifiers are evaluated over an explicit finite Universe: booleans range
over {false,true}, integers over [lo,hi], objects over the oid pool plus
null.  Every verdict that depends on this bounding is bounded semantics, not
full first-order validity.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import syntax as syn
from .syntax import (
    BOOL, INSTANCE, INT, NORMAL, OBJECT, BinOp, BoolLit, Cond, Expr, Higher,
    IntLit, Nav, NullLit, Quant, Sub, UnOp, Var, VarRef,
)
from .state import (
    BoolV, IntV, NULL, NULL_V, ObjV, Oid, State, Value, eval_expr,
)


# ---------------------------------------------------------------------------
# Universes and bounded satisfaction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Universe:
    """Finite evaluation bounds: integer interval and object-identity pool."""

    int_lo: int = -8
    int_hi: int = 8
    n_objects: int = 4

    def __post_init__(self):
        if self.int_lo > self.int_hi:
            raise ValueError("empty integer range")
        if self.n_objects < 1:
            raise ValueError("need at least one object identity")

    def oids(self) -> list[Oid]:
        return [Oid(i) for i in range(self.n_objects)]

    def values(self, ty) -> list[Value]:
        """Domain of a basic type under these bounds (objects include null)."""
        if ty == BOOL:
            return [BoolV(False), BoolV(True)]
        if ty == INT:
            return [IntV(i) for i in range(self.int_lo, self.int_hi + 1)]
        if ty == OBJECT:
            return [NULL_V] + [ObjV(o) for o in self.oids()]
        raise ValueError(f"no bounded domain for {ty!r}")


def eval_assertion(sigma: State, p: Expr, universe: Universe) -> bool:
    """sigma |= p with quantifiers ranging over the universe."""
    if isinstance(p, Quant):
        domain = universe.values(p.var.ty)
        if p.kind == "forall":
            return all(
                eval_assertion(sigma.with_normal(p.var, v), p.body, universe)
                for v in domain)
        return any(
            eval_assertion(sigma.with_normal(p.var, v), p.body, universe)
            for v in domain)
    if isinstance(p, BinOp) and p.op in ("and", "or", "->"):
        left = eval_assertion(sigma, p.left, universe)
        if p.op == "and":
            return left and eval_assertion(sigma, p.right, universe)
        if p.op == "or":
            return left or eval_assertion(sigma, p.right, universe)
        return (not left) or eval_assertion(sigma, p.right, universe)
    if isinstance(p, UnOp) and p.op == "not":
        return not eval_assertion(sigma, p.operand, universe)
    v = eval_expr(sigma, p, universe)
    assert isinstance(v, BoolV)
    return v.value


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

FRESH_SEP = "#"  # reserved suffix for capture-avoiding freshening


class SubstError(Exception):
    pass


def _fresh_name(base: str, avoid: set[str]) -> str:
    root = base.split(FRESH_SEP, 1)[0]
    i = 1
    while f"{root}{FRESH_SEP}{i}" in avoid:
        i += 1
    return f"{root}{FRESH_SEP}{i}"


def _conj(terms: list[Expr]) -> Expr:
    out = terms[0]
    for t in terms[1:]:
        out = BinOp("and", out, t)
    return out


def _this() -> Expr:
    return Var(syn.THIS)


def substitute(phrase: Expr, target: Expr, replacement: Expr,
               allow_this: bool = False) -> Expr:
    """phrase[target := replacement] per the aliasing-aware calculus.

    The target is a simple or subscripted, normal or instance variable
    access (a Var or Sub node).  `this` is not assignable and is rejected
    unless allow_this is set; the proof checker needs [this := s] for the
    auxiliary block assignments of the recursion rules, where bare instance
    variables u must expand to this.u so that the substituted base becomes
    s.u.
    """
    if isinstance(target, Var):
        if target.ref.name == "this" and not allow_this:
            raise SubstError("cannot substitute for this")
        t_ref, t_idx = target.ref, None
    elif isinstance(target, Sub):
        t_ref, t_idx = target.ref, target.indices
    else:
        raise SubstError("substitution target must be a variable access")
    danger = syn.all_var_names(replacement) | {t_ref.name}
    if t_idx:
        for ix in t_idx:
            danger |= syn.all_var_names(ix)
    avoid = syn.all_var_names(phrase) | danger
    return _subst(phrase, t_ref, t_idx, replacement, danger, avoid)


def _subst(s: Expr, t_ref: VarRef, t_idx, t: Expr,
           danger: set[str], avoid: set[str]) -> Expr:
    rec = lambda e: _subst(e, t_ref, t_idx, t, danger, avoid)

    if isinstance(s, (IntLit, BoolLit, NullLit)):
        return s

    this_target = t_ref.name == "this"

    if isinstance(s, Var):
        if s.ref.kind == NORMAL:
            if t_idx is None and s.ref == t_ref:
                return t
            return s
        # bare instance variable: an abbreviation for this.u
        if s.ref.name == t_ref.name or this_target:
            return rec(Nav(_this(), s.ref, None))
        return s

    if isinstance(s, Sub):
        new_idx = tuple(rec(i) for i in s.indices)
        if s.ref.kind == NORMAL:
            if t_idx is not None and s.ref == t_ref:
                eqs = [BinOp("=", si, ti) for si, ti in zip(new_idx, t_idx)]
                return Cond(_conj(eqs), t, Sub(s.ref, new_idx))
            return Sub(s.ref, new_idx)
        if s.ref.name == t_ref.name or this_target:
            return rec(Nav(_this(), s.ref, s.indices))
        return Sub(s.ref, new_idx)

    if isinstance(s, Nav):
        base = rec(s.base)
        if s.indices is None:
            if t_idx is None and s.ref.name == t_ref.name and t_ref.kind == INSTANCE:
                return Cond(BinOp("=", base, _this()), t, Nav(base, s.ref, None))
            return Nav(base, s.ref, None)
        new_idx = tuple(rec(i) for i in s.indices)
        if t_idx is not None and s.ref.name == t_ref.name and t_ref.kind == INSTANCE:
            eqs = [BinOp("=", base, _this())]
            eqs += [BinOp("=", si, ti) for si, ti in zip(new_idx, t_idx)]
            return Cond(_conj(eqs), t, Nav(base, s.ref, new_idx))
        return Nav(base, s.ref, new_idx)

    if isinstance(s, Cond):
        return Cond(rec(s.guard), rec(s.then), rec(s.orelse))
    if isinstance(s, BinOp):
        return BinOp(s.op, rec(s.left), rec(s.right))
    if isinstance(s, UnOp):
        return UnOp(s.op, rec(s.operand))

    if isinstance(s, Quant):
        if t_idx is None and s.var == t_ref:
            return s  # target is bound here
        if s.var.name in danger:
            new = VarRef(NORMAL, _fresh_name(s.var.name, avoid), s.var.ty)
            body = rename(s.body, (s.var,), (new,))
            return Quant(s.kind, new, rec(body))
        return Quant(s.kind, s.var, rec(s.body))

    raise SubstError(f"cannot substitute in {s!r}")


def subst_parallel(phrase: Expr, refs: tuple[VarRef, ...],
                   values: tuple[Expr, ...]) -> Expr:
    """Simultaneous substitution [x1,...,xn := t1,...,tn] of expressions for
    distinct simple normal variables."""
    if len(refs) != len(values):
        raise SubstError("parallel substitution arity mismatch")
    if len(set(r.name for r in refs)) != len(refs):
        raise SubstError("parallel substitution targets must be distinct")
    for r in refs:
        if r.kind != NORMAL or r.is_array:
            raise SubstError("parallel substitution targets must be simple normal variables")
    mapping = {r.name: v for r, v in zip(refs, values)}
    if "this" in mapping:
        phrase = expand_bare_instance(phrase)
    danger: set[str] = set()
    for v in values:
        danger |= syn.all_var_names(v)
    avoid = syn.all_var_names(phrase) | danger

    def walk(e: Expr) -> Expr:
        if isinstance(e, Var):
            return mapping.get(e.ref.name, e) if e.ref.kind == NORMAL else e
        if isinstance(e, Quant):
            if e.var.name in mapping:
                keep = tuple(i for i, r in enumerate(refs) if r.name != e.var.name)
                if not keep:
                    return e
                return Quant(e.kind, e.var,
                             subst_parallel(e.body,
                                            tuple(refs[i] for i in keep),
                                            tuple(values[i] for i in keep)))
            if e.var.name in danger:
                new = VarRef(NORMAL, _fresh_name(e.var.name, avoid), e.var.ty)
                return Quant(e.kind, new, walk(rename(e.body, (e.var,), (new,))))
            return Quant(e.kind, e.var, walk(e.body))
        if isinstance(e, (IntLit, BoolLit, NullLit)):
            return e
        if isinstance(e, Sub):
            return Sub(e.ref, tuple(walk(i) for i in e.indices))
        if isinstance(e, Nav):
            idx = None if e.indices is None else tuple(walk(i) for i in e.indices)
            return Nav(walk(e.base), e.ref, idx)
        if isinstance(e, Cond):
            return Cond(walk(e.guard), walk(e.then), walk(e.orelse))
        if isinstance(e, BinOp):
            return BinOp(e.op, walk(e.left), walk(e.right))
        if isinstance(e, UnOp):
            return UnOp(e.op, walk(e.operand))
        raise SubstError(f"cannot substitute in {e!r}")

    return walk(phrase)


def expand_bare_instance(e: Expr) -> Expr:
    """Rewrite every bare instance access u / a[s] to this.u / this.a[s];
    needed before substituting for `this` itself."""
    if isinstance(e, Var):
        if e.ref.kind == INSTANCE:
            return Nav(_this(), e.ref, None)
        return e
    if isinstance(e, Sub):
        idx = tuple(expand_bare_instance(i) for i in e.indices)
        if e.ref.kind == INSTANCE:
            return Nav(_this(), e.ref, idx)
        return Sub(e.ref, idx)
    if isinstance(e, (IntLit, BoolLit, NullLit)):
        return e
    if isinstance(e, Nav):
        idx = None if e.indices is None else tuple(expand_bare_instance(i) for i in e.indices)
        return Nav(expand_bare_instance(e.base), e.ref, idx)
    if isinstance(e, Cond):
        return Cond(expand_bare_instance(e.guard), expand_bare_instance(e.then),
                    expand_bare_instance(e.orelse))
    if isinstance(e, BinOp):
        return BinOp(e.op, expand_bare_instance(e.left), expand_bare_instance(e.right))
    if isinstance(e, UnOp):
        return UnOp(e.op, expand_bare_instance(e.operand))
    if isinstance(e, Quant):
        return Quant(e.kind, e.var, expand_bare_instance(e.body))
    raise SubstError(f"cannot expand {e!r}")


def rename(p: Expr, olds: tuple[VarRef, ...], news: tuple[VarRef, ...]) -> Expr:
    """Capture-free simultaneous renaming of free occurrences; array variables
    are renamed wholesale.  The new names must be fresh for p."""
    if len(olds) != len(news):
        raise SubstError("renaming arity mismatch")
    for o, n in zip(olds, news):
        if o.ty != n.ty or o.kind != n.kind:
            raise SubstError(f"renaming changes the type of {o.name}")
    mapping = {o.name: n for o, n in zip(olds, news)}

    def walk(e: Expr, bound: frozenset[str]) -> Expr:
        if isinstance(e, Var):
            r = mapping.get(e.ref.name)
            if r is not None and e.ref.name not in bound:
                return Var(r)
            return e
        if isinstance(e, Sub):
            idx = tuple(walk(i, bound) for i in e.indices)
            r = mapping.get(e.ref.name)
            if r is not None and e.ref.name not in bound:
                return Sub(r, idx)
            return Sub(e.ref, idx)
        if isinstance(e, Nav):
            idx = None if e.indices is None else tuple(walk(i, bound) for i in e.indices)
            r = mapping.get(e.ref.name)
            ref = r if (r is not None and e.ref.name not in bound) else e.ref
            return Nav(walk(e.base, bound), ref, idx)
        if isinstance(e, Quant):
            return Quant(e.kind, e.var, walk(e.body, bound | {e.var.name}))
        if isinstance(e, (IntLit, BoolLit, NullLit)):
            return e
        if isinstance(e, Cond):
            return Cond(walk(e.guard, bound), walk(e.then, bound), walk(e.orelse, bound))
        if isinstance(e, BinOp):
            return BinOp(e.op, walk(e.left, bound), walk(e.right, bound))
        if isinstance(e, UnOp):
            return UnOp(e.op, walk(e.operand, bound))
        raise SubstError(f"cannot rename in {e!r}")

    return walk(p, frozenset())


# ---------------------------------------------------------------------------
# Conditional normalization (optional, evaluation-preserving)
# ---------------------------------------------------------------------------


def normalize(e: Expr) -> Expr:
    """Fold the tautological conditionals that substitution generates:
    guards e=e become true, (true ? a : b) -> a, (c ? x : x) -> x, and
    true conjuncts disappear.  Purely syntactic and evaluation-preserving."""
    if isinstance(e, (IntLit, BoolLit, NullLit, Var)):
        return e
    if isinstance(e, Sub):
        return Sub(e.ref, tuple(normalize(i) for i in e.indices))
    if isinstance(e, Nav):
        idx = None if e.indices is None else tuple(normalize(i) for i in e.indices)
        return Nav(normalize(e.base), e.ref, idx)
    if isinstance(e, UnOp):
        return UnOp(e.op, normalize(e.operand))
    if isinstance(e, Quant):
        return Quant(e.kind, e.var, normalize(e.body))
    if isinstance(e, BinOp):
        left = normalize(e.left)
        right = normalize(e.right)
        if e.op == "=" and left == right:
            return BoolLit(True)
        if e.op == "and":
            if left == BoolLit(True):
                return right
            if right == BoolLit(True):
                return left
        return BinOp(e.op, left, right)
    if isinstance(e, Cond):
        guard = normalize(e.guard)
        then = normalize(e.then)
        orelse = normalize(e.orelse)
        if guard == BoolLit(True):
            return then
        if guard == BoolLit(False):
            return orelse
        if then == orelse:
            return then
        return Cond(guard, then, orelse)
    raise SubstError(f"cannot normalize {e!r}")
