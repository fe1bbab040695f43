"""Seeded random generators for the property suites: values, states, global
expressions, assertions, substitution-lemma cases, small object-oriented
programs, and loop-free kernel programs.

Everything draws from a single random.Random so that suites are reproducible
from their seed.
"""

from __future__ import annotations

import random

from . import syntax as syn
from .syntax import (
    BOOL, INSTANCE, INT, NORMAL, OBJECT, OO, Assign, BinOp, Block, BoolLit,
    Cond, Decl, Expr, FailIf, Higher, IfElse, IntLit, MethodCall, Nav,
    NullLit, ParAssign, Program, Quant, Seq, Skip, Stmt, Sub, UnOp, Var,
    VarRef, While,
)
from .state import NULL_V, State, Value
from .assertions import Universe

# Shared vocabulary for the expression-level suites.
N_I = VarRef(NORMAL, "i", INT)
N_J = VarRef(NORMAL, "j", INT)
N_B = VarRef(NORMAL, "b", BOOL)
N_X = VarRef(NORMAL, "x", OBJECT)
N_Y = VarRef(NORMAL, "y", OBJECT)
N_F = VarRef(NORMAL, "f", Higher((INT,), INT))
I_U = VarRef(INSTANCE, "u", INT)
I_V = VarRef(INSTANCE, "v", INT)
I_FL = VarRef(INSTANCE, "fl", BOOL)
I_W = VarRef(INSTANCE, "w", OBJECT)
I_H = VarRef(INSTANCE, "h", Higher((INT,), INT))
I_NA = VarRef(INSTANCE, "na", Higher((OBJECT,), OBJECT))

EXPR_VOCAB = [N_I, N_J, N_B, N_X, N_Y, N_F, I_U, I_V, I_FL, I_W, I_H, I_NA,
              syn.THIS]

# Vocabulary for the random object-oriented programs.
OO_IVARS = [VarRef(INSTANCE, "cnt", INT), VarRef(INSTANCE, "flag", BOOL),
            VarRef(INSTANCE, "link", OBJECT)]
N_Y_OO = VarRef(NORMAL, "y", OBJECT)
N_Z_OO = VarRef(NORMAL, "z", OBJECT)
N_K_OO = VarRef(NORMAL, "k", INT)
OO_VOCAB = OO_IVARS + [N_Y_OO, N_Z_OO, N_K_OO, syn.THIS]

# Vocabulary for the loop-free kernel programs of the WP suite.
WP_VARS = [VarRef(NORMAL, "i", INT), VarRef(NORMAL, "j", INT),
           VarRef(NORMAL, "b", BOOL)]


class Gen:
    def __init__(self, seed: int, universe: Universe | None = None):
        self.rng = random.Random(seed)
        self.universe = universe or Universe(-3, 3, 3)

    # -- values and states -----------------------------------------------------

    def value(self, ty) -> Value:
        return self.rng.choice(self.universe.values(ty))

    def state(self, this_nonnull: bool = False,
              vocab: list[VarRef] | None = None) -> State:
        sigma = State.make()
        objs = self.universe.values(OBJECT)
        this = self.rng.choice([v for v in objs if v != NULL_V] if this_nonnull else objs)
        sigma = sigma.with_normal(syn.THIS, this)
        for ref in vocab if vocab is not None else EXPR_VOCAB:
            if ref.name == "this":
                continue
            if ref.kind == NORMAL:
                if isinstance(ref.ty, Higher):
                    arr = sigma.normal(ref)
                    for _ in range(self.rng.randrange(3)):
                        key = tuple(self.value(a) for a in ref.ty.args)
                        arr = arr.set(key, self.value(ref.ty.value))
                    sigma = sigma.with_normal(ref, arr)
                else:
                    sigma = sigma.with_normal(ref, self.value(ref.ty))
            else:
                for owner in [o.ref for o in objs]:
                    if isinstance(ref.ty, Higher):
                        arr = sigma.local(owner, ref)
                        for _ in range(self.rng.randrange(2)):
                            key = tuple(self.value(a) for a in ref.ty.args)
                            arr = arr.set(key, self.value(ref.ty.value))
                        sigma = sigma.with_local(owner, ref, arr)
                    else:
                        sigma = sigma.with_local(owner, ref, self.value(ref.ty))
        return sigma

    # -- global expressions -------------------------------------------------------

    def expr(self, ty, depth: int, nav: bool = True,
             vocab: list[VarRef] | None = None) -> Expr:
        v = vocab if vocab is not None else EXPR_VOCAB
        leaves = []
        simple = [r for r in v if r.ty == ty and not r.is_array]
        if simple:
            leaves.append(lambda: Var(self.rng.choice(simple)))
        if ty == INT:
            leaves.append(lambda: IntLit(self.rng.randrange(self.universe.int_lo,
                                                            self.universe.int_hi + 1)))
        elif ty == BOOL:
            leaves.append(lambda: BoolLit(self.rng.random() < 0.5))
        elif ty == OBJECT:
            leaves.append(lambda: NullLit())
        if not leaves:
            raise ValueError(f"no leaf of type {ty!r} in the vocabulary")
        if depth <= 0:
            return self.rng.choice(leaves)()
        arrays = [r for r in v if isinstance(r.ty, Higher) and r.ty.value == ty]
        nav_simple = [r for r in v if r.kind == INSTANCE and r.ty == ty]
        nav_arrays = [r for r in v
                      if r.kind == INSTANCE and isinstance(r.ty, Higher) and r.ty.value == ty]
        options = ["leaf", "leaf", "cond"]
        if arrays:
            options.append("sub")
        if nav and (nav_simple or nav_arrays):
            options.append("nav")
        if ty == INT:
            options += ["arith", "arith"]
        if ty == BOOL:
            options += ["connective", "compare", "eq", "not"]
        choice = self.rng.choice(options)
        if choice == "leaf":
            return self.rng.choice(leaves)()
        if choice == "cond":
            return Cond(self.expr(BOOL, depth - 1, nav, v),
                        self.expr(ty, depth - 1, nav, v),
                        self.expr(ty, depth - 1, nav, v))
        if choice == "sub":
            ref = self.rng.choice(arrays)
            idx = tuple(self.expr(a, depth - 1, nav, v) for a in ref.ty.args)
            return Sub(ref, idx)
        if choice == "nav":
            base = self.expr(OBJECT, depth - 1, nav, v)
            if nav_arrays and (not nav_simple or self.rng.random() < 0.4):
                ref = self.rng.choice(nav_arrays)
                idx = tuple(self.expr(a, depth - 1, nav, v) for a in ref.ty.args)
                return Nav(base, ref, idx)
            return Nav(base, self.rng.choice(nav_simple), None)
        if choice == "arith":
            op = self.rng.choice(["+", "-", "*"])
            return BinOp(op, self.expr(INT, depth - 1, nav, v),
                         self.expr(INT, depth - 1, nav, v))
        if choice == "connective":
            op = self.rng.choice(["and", "or", "->"])
            return BinOp(op, self.expr(BOOL, depth - 1, nav, v),
                         self.expr(BOOL, depth - 1, nav, v))
        if choice == "compare":
            op = self.rng.choice(["<", "<="])
            return BinOp(op, self.expr(INT, depth - 1, nav, v),
                         self.expr(INT, depth - 1, nav, v))
        if choice == "eq":
            ty2 = self.rng.choice([INT, BOOL, OBJECT])
            op = self.rng.choice(["=", "/="])
            return BinOp(op, self.expr(ty2, depth - 1, nav, v),
                         self.expr(ty2, depth - 1, nav, v))
        return UnOp("not", self.expr(BOOL, depth - 1, nav, v))

    def assertion(self, depth: int = 3, quant_prob: float = 0.5,
                  vocab: list[VarRef] | None = None) -> Expr:
        v = vocab if vocab is not None else EXPR_VOCAB
        if self.rng.random() < quant_prob:
            kind = self.rng.choice(["forall", "exists"])
            ty = self.rng.choice([INT, OBJECT, BOOL])
            var = VarRef(NORMAL, f"q{self.rng.randrange(100)}", ty)
            body = self.expr(BOOL, depth, nav=True, vocab=v + [var])
            return Quant(kind, var, body)
        return self.expr(BOOL, depth, nav=True, vocab=v)

    def subst_case(self):
        """Target access and replacement for the instance-substitution suite."""
        if self.rng.random() < 0.5:
            ref = self.rng.choice([I_U, I_V, I_FL, I_W])
            target = Var(ref)
            val_ty = ref.ty
        else:
            ref = self.rng.choice([I_H, I_NA])
            idx = tuple(self.expr(a, 1, nav=True) for a in ref.ty.args)
            target = Sub(ref, idx)
            val_ty = ref.ty.value
        replacement = self.expr(val_ty, 2, nav=True)
        return target, replacement


# ---------------------------------------------------------------------------
# Random object-oriented programs (differential suite)
# ---------------------------------------------------------------------------


class ProgGen:
    """Random object-oriented programs: bounded depth, at most three mutually
    recursive methods, loops that usually make progress."""

    def __init__(self, gen: Gen):
        self.gen = gen
        self.rng = gen.rng
        self.sigs: list[tuple[str, tuple[VarRef, ...]]] = []

    def program(self) -> Program:
        n_methods = self.rng.randrange(4)
        self.sigs = []
        for idx in range(n_methods):
            n_formals = self.rng.randrange(3)
            formals = tuple(
                VarRef(NORMAL, f"p{idx}{j}", self.rng.choice([INT, BOOL, OBJECT]))
                for j in range(n_formals))
            self.sigs.append((f"m{idx}", formals))
        decls = tuple(
            Decl(name, formals, self.stmt(3, formals, allow_calls=True, call_prob=0.25))
            for name, formals in self.sigs)
        main = self.stmt(4, (), allow_calls=bool(self.sigs), call_prob=0.5)
        return Program(decls, main, OO)

    def expr(self, ty, depth: int, formals) -> Expr:
        return self.gen.expr(ty, depth, nav=False, vocab=OO_VOCAB + list(formals))

    def stmt(self, depth: int, formals, allow_calls: bool, call_prob: float) -> Stmt:
        if allow_calls and depth > 0 and self.rng.random() < call_prob:
            name, sig = self.rng.choice(self.sigs)
            callee = self.rng.choice([Var(syn.THIS), Var(N_Y_OO), Var(N_Z_OO),
                                      Var(OO_IVARS[2])])
            args = tuple(self.expr(f.ty, 1, formals) for f in sig)
            return MethodCall(callee, name, args)
        options = ["assign", "assign", "skip"]
        if depth > 0:
            options += ["seq", "seq", "ifelse", "guarded", "while", "block", "failif"]
        choice = self.rng.choice(options)
        if choice == "skip":
            return Skip()
        if choice == "assign":
            ref = self.rng.choice(OO_IVARS + [N_Y_OO, N_Z_OO, N_K_OO])
            return Assign(Var(ref), self.expr(ref.ty, 2, formals))
        if choice == "seq":
            return Seq(self.stmt(depth - 1, formals, allow_calls, call_prob),
                       self.stmt(depth - 1, formals, allow_calls, call_prob))
        if choice == "ifelse":
            return IfElse(self.expr(BOOL, 2, formals),
                          self.stmt(depth - 1, formals, allow_calls, call_prob),
                          self.stmt(depth - 1, formals, allow_calls, call_prob))
        if choice == "guarded":
            return IfElse(self.expr(BOOL, 2, formals),
                          self.stmt(depth - 1, formals, allow_calls, call_prob),
                          Skip())
        if choice == "failif":
            guard = self.rng.choice([
                BinOp("/=", Var(self.rng.choice([N_Y_OO, N_Z_OO])), NullLit()),
                self.expr(BOOL, 1, formals),
            ])
            return FailIf(guard, self.stmt(depth - 1, formals, allow_calls, call_prob))
        if choice == "while":
            bound = IntLit(self.rng.randrange(1, 4))
            body = self.stmt(depth - 1, formals, allow_calls, call_prob)
            if self.rng.random() < 0.8:
                body = Seq(body, Assign(Var(N_K_OO), BinOp("+", Var(N_K_OO), IntLit(1))))
            return Seq(Assign(Var(N_K_OO), IntLit(0)),
                       While(BinOp("<", Var(N_K_OO), bound), body))
        # block
        loc = VarRef(NORMAL, "loc", INT)
        init = ParAssign((loc,), (self.expr(INT, 1, formals),))
        return Block(init, self.stmt(depth - 1, list(formals) + [loc],
                                     allow_calls, call_prob))

    def start_state(self) -> State:
        return self.gen.state(this_nonnull=True, vocab=OO_VOCAB)


# ---------------------------------------------------------------------------
# Random loop-free kernel programs (WP suite)
# ---------------------------------------------------------------------------


class KernelGen:
    def __init__(self, gen: Gen):
        self.gen = gen
        self.rng = gen.rng

    def expr(self, ty, depth: int, scope=()) -> Expr:
        return self.gen.expr(ty, depth, nav=False, vocab=WP_VARS + list(scope))

    def stmt(self, depth: int, scope=()) -> Stmt:
        options = ["assign", "assign", "skip"]
        if depth > 0:
            options += ["seq", "seq", "ifelse", "failif", "block"]
        choice = self.rng.choice(options)
        if choice == "skip":
            return Skip()
        if choice == "assign":
            ref = self.rng.choice(WP_VARS + list(scope))
            return Assign(Var(ref), self.expr(ref.ty, 2, scope))
        if choice == "seq":
            return Seq(self.stmt(depth - 1, scope), self.stmt(depth - 1, scope))
        if choice == "ifelse":
            return IfElse(self.expr(BOOL, 2, scope),
                          self.stmt(depth - 1, scope), self.stmt(depth - 1, scope))
        if choice == "failif":
            return FailIf(self.expr(BOOL, 2, scope), self.stmt(depth - 1, scope))
        loc = VarRef(NORMAL, f"loc{len(scope)}", INT)
        init = ParAssign((loc,), (self.expr(INT, 1, scope),))
        return Block(init, self.stmt(depth - 1, tuple(scope) + (loc,)))

    def post(self, scope=()) -> Expr:
        return self.expr(BOOL, 3, scope)
