"""Small-step operational semantics for all three program flavors.

The transition relation follows the standard rules: skip, assignment via the
state update, parallel assignment, the sequencing context rule, conditionals
and loop unfolding, the failure statement, the block axiom that snapshots and
later restores local variables, and the call axioms.  A method call
s.m(t) rewrites in one step to

    if s /= null -> begin local this,u := s,t; body end fi

and a procedure call P(t) to the corresponding block without the null check.

Failure is terminal: as soon as a substep fails, the whole configuration
collapses to <E, fail>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import syntax as syn
from .syntax import (
    Assign, BinOp, Block, Decl, Empty, EMPTY, FailIf, IfElse, LiteralRestore,
    MethodCall, NullLit, ParAssign, ProcCall, Program, Seq, Skip, Stmt,
    VarRef, While, OO,
)
from .state import (
    FAIL, ArrayVal, Fail, NULL, Outcome, State, Value, eval_expr, holds,
    update, update_parallel,
)

DEFAULT_FUEL = 1_000_000


@dataclass(frozen=True)
class Config:
    stmt: Stmt  # EMPTY marks termination
    out: Outcome


@dataclass(frozen=True)
class Terminated:
    state: State


@dataclass(frozen=True)
class Failed:
    pass


@dataclass(frozen=True)
class OutOfFuel:
    steps: int


RunResult = Union[Terminated, Failed, OutOfFuel]


class PreconditionError(Exception):
    """Run preconditions violated (e.g. this = null for an OO program)."""


def step(cfg: Config, decls: tuple[Decl, ...]) -> Optional[Config]:
    """One transition; None only for the terminal <E, .> configuration.

    The redex sits at the end of the left Seq spine; it is located and the
    context rebuilt iteratively so that deep recursion in the object program
    cannot overflow the host stack.
    """
    s = cfg.stmt
    out = cfg.out
    if isinstance(s, Empty):
        return None
    assert isinstance(out, State), "failure configurations are terminal"
    rests: list[Stmt] = []
    while isinstance(s, Seq):
        rests.append(s.rest)
        s = s.first
    sub = _step_redex(s, out, decls)
    if isinstance(sub.out, Fail):
        return Config(EMPTY, FAIL)
    stmt = sub.stmt
    while rests:
        rest = rests.pop()
        stmt = rest if isinstance(stmt, Empty) else Seq(stmt, rest)
    return Config(stmt, sub.out)


def _step_redex(s: Stmt, sigma: State, decls: tuple[Decl, ...]) -> Config:
    if isinstance(s, Skip):
        return Config(EMPTY, sigma)
    if isinstance(s, Assign):
        d = eval_expr(sigma, s.value)
        return Config(EMPTY, update(sigma, s.target, d))
    if isinstance(s, ParAssign):
        ds = tuple(eval_expr(sigma, v) for v in s.values)
        return Config(EMPTY, update_parallel(sigma, s.targets, ds))
    if isinstance(s, LiteralRestore):
        return Config(EMPTY, update_parallel(sigma, s.targets, s.values))
    if isinstance(s, IfElse):
        return Config(s.then if holds(sigma, s.guard) else s.orelse, sigma)
    if isinstance(s, While):
        if holds(sigma, s.guard):
            return Config(Seq(s.body, s), sigma)
        return Config(EMPTY, sigma)
    if isinstance(s, FailIf):
        if holds(sigma, s.guard):
            return Config(s.body, sigma)
        return Config(EMPTY, FAIL)
    if isinstance(s, Block):
        snapshot: tuple[Value, ...] = tuple(
            _simple_value(sigma, r) for r in s.locals.targets)
        restore = LiteralRestore(s.locals.targets, snapshot)
        return Config(Seq(s.locals, Seq(s.body, restore)), sigma)
    if isinstance(s, MethodCall):
        d = _resolve(decls, s.name)
        locals_ = ParAssign((syn.THIS,) + d.formals, (s.callee,) + s.args)
        block = Block(locals_, d.body)
        guard = BinOp("/=", s.callee, NullLit())
        return Config(FailIf(guard, block), sigma)
    if isinstance(s, ProcCall):
        d = _resolve(decls, s.name)
        block = Block(ParAssign(d.formals, s.args), d.body)
        return Config(block, sigma)
    raise ValueError(f"cannot step {type(s).__name__}")


def _resolve(decls: tuple[Decl, ...], name: str) -> Decl:
    for d in decls:
        if d.name == name:
            return d
    raise ValueError(f"call to undeclared {name}")


def _simple_value(sigma: State, ref: VarRef) -> Value:
    v = sigma.normal(ref)
    assert not isinstance(v, ArrayVal), "block locals are simple variables"
    return v


@dataclass
class SafetyCounters:
    """Instrumentation counters for the safety properties: the current object
    never becomes null mid-run, and every intermediate statement typechecks."""

    steps: int = 0
    null_this: int = 0
    ill_typed: int = 0


def run(program: Program, sigma0: State, fuel: int = DEFAULT_FUEL,
        counters: Optional[SafetyCounters] = None) -> RunResult:
    """Iterate the transition relation from <main, sigma0> within fuel.

    For object-oriented programs the start state must satisfy this /= null;
    runs that exhaust fuel report OutOfFuel, never Failed.
    """
    if program.flavor == OO and sigma0.this() == NULL:
        raise PreconditionError("object-oriented runs require this /= null")
    cfg = Config(program.main, sigma0)
    steps = 0
    while steps < fuel:
        nxt = step(cfg, program.decls)
        if nxt is None:
            break
        steps += 1
        cfg = nxt
        if counters is not None:
            counters.steps += 1
            if isinstance(cfg.out, State):
                if program.flavor == OO and cfg.out.this() == NULL:
                    counters.null_this += 1
                if not isinstance(cfg.stmt, Empty):
                    if syn.stmt_typechecks(cfg.stmt, program, internal=True):
                        counters.ill_typed += 1
        if isinstance(cfg.stmt, Empty):
            break
    if not isinstance(cfg.stmt, Empty):
        return OutOfFuel(steps)
    if isinstance(cfg.out, Fail):
        return Failed()
    return Terminated(cfg.out)
