"""Weakest preconditions: a brute-force semantic engine over enumerated
finite state spaces and a symbolic calculator for loop-free, call-free
fragments.

The semantic engine realizes the defining set

    WP(S, p)    = { sigma | every terminating run of S from sigma ends in p }
    WP_sp(S, p) = WP(S, p) intersected with the failure-free start states

by literally running S from every enumerated state.  States whose run
exhausts fuel are reported as Unknown, never silently classified.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Union

from . import syntax as syn
from .syntax import (
    Assign, Basic, Block, Expr, FailIf, Higher, IfElse, INSTANCE, NORMAL, OO,
    ParAssign, Program, Seq, Skip, Stmt, VarRef, While,
)
from .state import NULL, NULL_V, ArrayVal, ObjV, ObjectRef, State, Value
from .assertions import Universe, eval_assertion, substitute, subst_parallel
from . import interp

PARTIAL = "partial"
STRONG = "strong"


class WpUnsupported(Exception):
    pass


# ---------------------------------------------------------------------------
# Finite state spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Slot:
    """One enumerated location: a simple variable or a single array cell,
    normal or instance (instance slots carry the owning object)."""

    ref: VarRef
    owner: Optional[ObjectRef] = None  # instance slots only
    indices: Optional[tuple[Value, ...]] = None  # array cells only

    def value_type(self) -> Basic:
        return self.ref.ty.value if isinstance(self.ref.ty, Higher) else self.ref.ty


def _write_slot(sigma: State, slot: Slot, value: Value) -> State:
    ref = slot.ref
    if slot.owner is None:
        if slot.indices is None:
            return sigma.with_normal(ref, value)
        arr = sigma.normal(ref)
        assert isinstance(arr, ArrayVal)
        return sigma.with_normal(ref, arr.set(slot.indices, value))
    if slot.indices is None:
        return sigma.with_local(slot.owner, ref, value)
    arr = sigma.local(slot.owner, ref)
    assert isinstance(arr, ArrayVal)
    return sigma.with_local(slot.owner, ref, arr.set(slot.indices, value))


@dataclass(frozen=True)
class StateSpace:
    """Cartesian enumeration over a finite footprint of slots; everything
    outside the footprint holds the type default in every enumerated state."""

    universe: Universe
    slots: tuple[Slot, ...]
    this_nonnull: bool = False

    def domains(self) -> list[list[Value]]:
        out = []
        for slot in self.slots:
            vals = self.universe.values(slot.value_type())
            if self.this_nonnull and slot.ref.name == "this":
                vals = [v for v in vals if v != NULL_V]
            out.append(vals)
        return out

    def size(self) -> int:
        n = 1
        for d in self.domains():
            n *= len(d)
        return n

    def states(self) -> list[State]:
        out = []
        for combo in itertools.product(*self.domains()):
            sigma = State.make()
            for slot, value in zip(self.slots, combo):
                sigma = _write_slot(sigma, slot, value)
            out.append(sigma)
        return out

    def contains(self, sigma: State) -> bool:
        """Membership: sigma agrees with some enumerated state, i.e. all its
        footprint values lie in range and it is default off-footprint."""
        probe = State.make()
        for slot in self.slots:
            v = _read_slot(sigma, slot)
            if v not in self.universe.values(slot.value_type()):
                return False
            if self.this_nonnull and slot.ref.name == "this" and v == NULL_V:
                return False
            probe = _write_slot(probe, slot, v)
        return probe == sigma


def _read_slot(sigma: State, slot: Slot) -> Value:
    ref = slot.ref
    if slot.owner is None:
        stored = sigma.normal(ref)
    else:
        stored = sigma.local(slot.owner, ref)
    if slot.indices is None:
        assert not isinstance(stored, ArrayVal)
        return stored
    assert isinstance(stored, ArrayVal)
    return stored.get(slot.indices)


def slots_for_refs(refs: list[VarRef], universe: Universe,
                   include_null_owner: bool = True) -> list[Slot]:
    """Footprint slots for a set of variables: simple variables directly,
    instance variables one slot per object identity, arrays one slot per
    index tuple drawn from the universe."""
    owners: list[ObjectRef] = list(universe.oids())
    if include_null_owner:
        owners.append(NULL)
    slots: list[Slot] = []
    for ref in sorted(set(refs), key=lambda r: (r.kind, r.name)):
        if ref.kind == NORMAL:
            if isinstance(ref.ty, Higher):
                for combo in itertools.product(*[universe.values(a) for a in ref.ty.args]):
                    slots.append(Slot(ref, indices=tuple(combo)))
            else:
                slots.append(Slot(ref))
        else:
            if isinstance(ref.ty, Higher):
                for o in owners:
                    for combo in itertools.product(*[universe.values(a) for a in ref.ty.args]):
                        slots.append(Slot(ref, owner=o, indices=tuple(combo)))
            else:
                for o in owners:
                    slots.append(Slot(ref, owner=o))
    return slots


def space_size_estimate(refs: list[VarRef], universe: Universe) -> int:
    n = 1
    for slot in slots_for_refs(refs, universe):
        n *= len(universe.values(slot.value_type()))
        if n > 10 ** 18:
            return n
    return n


# ---------------------------------------------------------------------------
# Semantic weakest preconditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WpResult:
    accepted: tuple[State, ...]
    rejected: tuple[State, ...]
    unknown: tuple[State, ...]


def wp_semantic(stmt: Stmt, post: Expr, space: StateSpace,
                program: Program, fuel: int = 10_000,
                mode: str = STRONG) -> WpResult:
    """Brute-force WP over an enumerated space; post is an assertion."""
    def check(tau: State) -> Optional[bool]:
        return eval_assertion(tau, post, space.universe)

    return _classify(stmt, check, space, program, fuel, mode)


def wp_semantic_set(stmt: Stmt, post_states: set[State], space: StateSpace,
                    program: Program, fuel: int = 10_000,
                    mode: str = STRONG) -> WpResult:
    """WP against a set of final states; runs leaving the space are Unknown."""
    def check(tau: State) -> Optional[bool]:
        if not space.contains(tau):
            return None
        return tau in post_states

    return _classify(stmt, check, space, program, fuel, mode)


def _classify(stmt: Stmt, check: Callable[[State], Optional[bool]],
              space: StateSpace, program: Program, fuel: int,
              mode: str) -> WpResult:
    prog = Program(program.decls, stmt, program.flavor)
    accepted, rejected, unknown = [], [], []
    for sigma in space.states():
        res = interp.run(prog, sigma, fuel)
        if isinstance(res, interp.OutOfFuel):
            unknown.append(sigma)
        elif isinstance(res, interp.Failed):
            (rejected if mode == STRONG else accepted).append(sigma)
        else:
            ok = check(res.state)
            if ok is None:
                unknown.append(sigma)
            elif ok:
                accepted.append(sigma)
            else:
                rejected.append(sigma)
    return WpResult(tuple(accepted), tuple(rejected), tuple(unknown))


# ---------------------------------------------------------------------------
# Symbolic weakest preconditions (loop-free, call-free)
# ---------------------------------------------------------------------------


def wp_symbolic(stmt: Stmt, post: Expr, mode: str = STRONG) -> Expr:
    """The standard equations: assignments substitute, sequencing composes,
    conditionals split on the guard, the failure statement depends on the
    mode, and blocks reduce to their initializing assignment provided the
    local variables do not occur free in the postcondition."""
    if isinstance(stmt, Skip):
        return post
    if isinstance(stmt, Assign):
        return substitute(post, stmt.target, stmt.value)
    if isinstance(stmt, ParAssign):
        return subst_parallel(post, stmt.targets, stmt.values)
    if isinstance(stmt, Seq):
        return wp_symbolic(stmt.first, wp_symbolic(stmt.rest, post, mode), mode)
    if isinstance(stmt, IfElse):
        yes = syn.BinOp("and", stmt.guard, wp_symbolic(stmt.then, post, mode))
        no = syn.BinOp("and", syn.UnOp("not", stmt.guard),
                       wp_symbolic(stmt.orelse, post, mode))
        return syn.BinOp("or", yes, no)
    if isinstance(stmt, FailIf):
        inner = syn.BinOp("and", stmt.guard, wp_symbolic(stmt.body, post, mode))
        if mode == STRONG:
            return inner
        return syn.BinOp("or", inner, syn.UnOp("not", stmt.guard))
    if isinstance(stmt, Block):
        locals_ = {r.name for r in stmt.locals.targets}
        if locals_ & syn.free_vars(post):
            raise WpUnsupported("block locals occur free in the postcondition")
        return wp_symbolic(Seq(stmt.locals, stmt.body), post, mode)
    if isinstance(stmt, While):
        raise WpUnsupported("symbolic weakest preconditions do not cover loops")
    raise WpUnsupported(f"symbolic weakest preconditions do not cover {type(stmt).__name__}")
