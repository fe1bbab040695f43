"""Proof objects, checkers for the ten proof systems, obligation discharge,
and the constructive translation of object-oriented proofs to recursive ones.

A derivation is a tree tagged with rule names.  Checking verifies three
things independently: (a) each rule application has exactly the conclusion
and premise shapes of its rule, (b) the syntactic side conditions hold, and
(c) the semantic obligations (implications from the consequence rule, the
guard implication of the failure II rule, and the non-null premises of the
recursion II rule) are discharged by exhaustive evaluation over a bounded
universe, reporting Valid, a Counterexample state, or Unknown when the
enumeration would exceed the configured cap.

The recursion rules carry an assumption context: inside their premises the
recursion rules themselves are unavailable (assumption-citing leaves take
their place), and an `(assume i)` leaf is accepted exactly when the i-th
assumption matches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import syntax as syn
from .syntax import (
    Assign, BinOp, Block, Decl, Expr, FailIf, IfElse, INSTANCE, MethodCall,
    NORMAL, NullLit, ParAssign, ProcCall, Program, Quant, Seq, Skip, Stmt,
    Sub, UnOp, Var, VarRef, While,
)
from .state import State
from .assertions import (
    Universe, eval_assertion, normalize, substitute, subst_parallel,
)
from . import transform as tr
from .wp import Slot, StateSpace, slots_for_refs

# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrectnessFormula:
    pre: Expr
    stmt: Stmt
    post: Expr


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Optional[CorrectnessFormula]  # None only for bare ASSUME leaves
    premises: tuple["Derivation", ...] = ()
    assumptions: tuple[CorrectnessFormula, ...] = ()  # recursion rules only
    subst: Optional[tuple[tuple[VarRef, Expr], ...]] = None  # SUBST-RULE only
    index: int = 0  # ASSUME only (1-based)


@dataclass(frozen=True)
class Obligation:
    kind: str  # "implication" | "notnull"
    pre: Expr
    goal: Expr
    origin: str


@dataclass(frozen=True)
class Valid:
    def __str__(self) -> str:
        return "valid"


@dataclass(frozen=True)
class Counterexample:
    state: State

    def __str__(self) -> str:
        return "counterexample"


@dataclass(frozen=True)
class Unknown:
    reason: str = ""

    def __str__(self) -> str:
        return "unknown"


ObStatus = Union[Valid, Counterexample, Unknown]


@dataclass(frozen=True)
class Verdict:
    status: str  # "accepted" | "rejected"
    reason: Optional[str]
    obligations: tuple[tuple[Obligation, ObStatus], ...] = ()

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"

    @property
    def all_valid(self) -> bool:
        return self.accepted and all(isinstance(s, Valid) for _, s in self.obligations)

    @property
    def has_unknown(self) -> bool:
        return any(isinstance(s, Unknown) for _, s in self.obligations)


# ---------------------------------------------------------------------------
# Proof systems
# ---------------------------------------------------------------------------

_KERNEL_COMMON = frozenset({"SKIP", "ASSIGN", "PAR-ASSIGN", "COMP", "COND",
                            "LOOP", "CONSEQ", "BLOCK"})
_AUX = frozenset({"DISJ", "CONJ", "EXISTS-INTRO", "INVARIANCE", "SUBST-RULE"})

_PK = _KERNEL_COMMON | {"FAIL-I"}
_SPK = _KERNEL_COMMON | {"FAIL-II"}
_PO = _PK | {"ASSIGN-INST", "WEAKEN"} | _AUX
_SPO = _SPK | {"ASSIGN-INST"} | _AUX
_PR = _PK | _AUX
_SPR = _SPK | _AUX

SYSTEMS: dict[str, tuple[frozenset, Optional[str]]] = {
    # name -> (base rules, recursion rule available at the top level)
    "PK": (_PK, None),
    "SPK": (_SPK, None),
    "PO": (_PO, None),
    "SPO": (_SPO, None),
    "PR": (_PR, None),
    "SPR": (_SPR, None),
    "PO+": (_PO, "REC-I"),
    "SPO+": (_SPO, "REC-II"),
    "PR+": (_PR, "REC-III"),
    "SPR+": (_SPR, "REC-III"),
}


class _Reject(Exception):
    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _norm_eq(a: Expr, b: Expr) -> bool:
    return normalize(a) == normalize(b)


def _canon_init(pa: ParAssign) -> Stmt:
    """A block initializer as it appears in a written-out premise statement:
    single locals parse as a plain assignment."""
    if len(pa.targets) == 1:
        return Assign(Var(pa.targets[0]), pa.values[0])
    return pa


def _and(a: Expr, b: Expr) -> Expr:
    return BinOp("and", a, b)


def _not(a: Expr) -> Expr:
    return UnOp("not", a)


def _nonnull(s: Expr) -> Expr:
    return BinOp("/=", s, NullLit())


def free_refs(e: Expr, bound: frozenset[str] = frozenset()) -> set[VarRef]:
    """Free variable references of an assertion; a bare instance variable
    also contributes `this` (it abbreviates this.u)."""
    out: set[VarRef] = set()
    if isinstance(e, Var):
        if e.ref.name not in bound:
            out.add(e.ref)
            if e.ref.kind == INSTANCE:
                out.add(syn.THIS)
        return out
    if isinstance(e, Sub):
        if e.ref.name not in bound:
            out.add(e.ref)
            if e.ref.kind == INSTANCE:
                out.add(syn.THIS)
        for i in e.indices:
            out |= free_refs(i, bound)
        return out
    if isinstance(e, syn.Nav):
        out.add(e.ref)
        out |= free_refs(e.base, bound)
        for i in e.indices or ():
            out |= free_refs(i, bound)
        return out
    if isinstance(e, Quant):
        return free_refs(e.body, bound | {e.var.name})
    for c in syn.sub_exprs(e):
        out |= free_refs(c, bound)
    return out


# ---------------------------------------------------------------------------
# Obligation discharge
# ---------------------------------------------------------------------------

DEFAULT_ENUM_CAP = 200_000


def discharge(ob: Obligation, universe: Universe,
              cap: int = DEFAULT_ENUM_CAP) -> ObStatus:
    """Exhaustive bounded check of pre -> goal over the obligation's free
    footprint; everything outside the footprint is the type default, which is
    sound because satisfaction only depends on the free variables."""
    refs = free_refs(ob.pre) | free_refs(ob.goal)
    slots = slots_for_refs(sorted(refs, key=lambda r: (r.kind, r.name)), universe)
    space = StateSpace(universe, tuple(slots))
    size = space.size()
    if size > cap:
        return Unknown(f"footprint of {size} states exceeds the cap of {cap}")
    for sigma in space.states():
        if eval_assertion(sigma, ob.pre, universe) and not eval_assertion(sigma, ob.goal, universe):
            return Counterexample(sigma)
    return Valid()


# ---------------------------------------------------------------------------
# The checker
# ---------------------------------------------------------------------------


@dataclass
class _Ctx:
    rules: frozenset
    rec_rule: Optional[str]  # available recursion rule, None inside premises
    assumptions: Optional[tuple[CorrectnessFormula, ...]]
    program: Program
    obligations: list


def check(d: Derivation, system: str, program: Program, universe: Universe,
          cap: int = DEFAULT_ENUM_CAP) -> Verdict:
    """Check a derivation against one of the proof systems.

    The program supplies the ambient declaration set and flavor; its main
    statement is irrelevant here.
    """
    if system not in SYSTEMS:
        return Verdict("rejected", f"unknown proof system {system}")
    rules, rec = SYSTEMS[system]
    ctx = _Ctx(rules, rec, None, program, [])
    try:
        _check(d, ctx, "root")
    except _Reject as r:
        return Verdict("rejected", str(r))
    results = tuple((ob, discharge(ob, universe, cap)) for ob in ctx.obligations)
    return Verdict("accepted", None, results)


def _conclusion(d: Derivation, ctx: _Ctx, path: str) -> CorrectnessFormula:
    if d.rule == "ASSUME":
        if ctx.assumptions is None:
            raise _Reject(path, "assumption cited outside a recursion rule")
        if not (1 <= d.index <= len(ctx.assumptions)):
            raise _Reject(path, f"assumption index {d.index} out of range")
        cited = ctx.assumptions[d.index - 1]
        if d.conclusion is not None and d.conclusion != cited:
            raise _Reject(path, "cited assumption differs from the stated conclusion")
        return cited
    assert d.conclusion is not None
    return d.conclusion


def _typecheck_formula(f: CorrectnessFormula, ctx: _Ctx, path: str) -> None:
    diags = syn.stmt_typechecks(f.stmt, ctx.program, internal=True)
    if diags:
        raise _Reject(path, f"statement does not typecheck: {diags[0]}")
    for label, p in (("precondition", f.pre), ("postcondition", f.post)):
        diags = syn.assertion_diagnostics(p, ctx.program)
        if diags:
            raise _Reject(path, f"{label} does not typecheck: {diags[0]}")


def _expect(cond: bool, path: str, reason: str) -> None:
    if not cond:
        raise _Reject(path, reason)


def _premise_formulas(d: Derivation, ctx: _Ctx, path: str, n: int) -> list[CorrectnessFormula]:
    _expect(len(d.premises) == n, path, f"{d.rule} takes {n} premise(s), found {len(d.premises)}")
    return [_conclusion(p, ctx, f"{path}.{i}") for i, p in enumerate(d.premises)]


def _check(d: Derivation, ctx: _Ctx, path: str) -> None:
    rule = d.rule
    if rule == "ASSUME":
        _conclusion(d, ctx, path)  # validates the citation
        _expect(not d.premises, path, "assumption leaves take no premises")
        return
    if rule in ("REC-I", "REC-II", "REC-III"):
        _expect(ctx.rec_rule == rule, path,
                f"{rule} is not available here (system or nesting restriction)")
        _check_recursion(d, ctx, path)
        return
    _expect(rule in ctx.rules, path, f"{rule} is not a rule of the selected system")
    f = _conclusion(d, ctx, path)
    _typecheck_formula(f, ctx, path)
    p, s, q = f.pre, f.stmt, f.post
    D = ctx.program.decls

    if rule == "SKIP":
        _expect(isinstance(s, Skip), path, "SKIP concludes about skip")
        _expect(p == q, path, "SKIP requires identical pre- and postcondition")
        _premise_formulas(d, ctx, path, 0)
    elif rule in ("ASSIGN", "ASSIGN-INST"):
        _expect(isinstance(s, Assign), path, f"{rule} concludes about an assignment")
        want_kind = NORMAL if rule == "ASSIGN" else INSTANCE
        _expect(s.target.ref.kind == want_kind, path,
                f"{rule} applies to {want_kind} variables")
        computed = substitute(q, s.target, s.value, allow_this=True)
        _expect(_norm_eq(p, computed), path,
                "precondition is not the substituted postcondition")
        _premise_formulas(d, ctx, path, 0)
    elif rule == "PAR-ASSIGN":
        _expect(isinstance(s, ParAssign), path, "PAR-ASSIGN concludes about a parallel assignment")
        computed = subst_parallel(q, s.targets, s.values)
        _expect(_norm_eq(p, computed), path,
                "precondition is not the substituted postcondition")
        _premise_formulas(d, ctx, path, 0)
    elif rule == "COMP":
        _expect(isinstance(s, Seq), path, "COMP concludes about a sequential composition")
        f1, f2 = _premise_formulas(d, ctx, path, 2)
        _expect(f1.stmt == s.first and f2.stmt == s.rest, path,
                "premises do not cover the two components")
        _expect(f1.pre == p and f2.post == q and f1.post == f2.pre, path,
                "premise assertions do not chain")
        _check_premises(d, ctx, path)
    elif rule == "COND":
        _expect(isinstance(s, IfElse), path, "COND concludes about a conditional")
        f1, f2 = _premise_formulas(d, ctx, path, 2)
        _expect(f1 == CorrectnessFormula(_and(p, s.guard), s.then, q), path,
                "first premise must be {p and B} S1 {q}")
        _expect(f2 == CorrectnessFormula(_and(p, _not(s.guard)), s.orelse, q), path,
                "second premise must be {p and not B} S2 {q}")
        _check_premises(d, ctx, path)
    elif rule == "LOOP":
        _expect(isinstance(s, While), path, "LOOP concludes about a while loop")
        _expect(q == _and(p, _not(s.guard)), path,
                "postcondition must be p and not B")
        (f1,) = _premise_formulas(d, ctx, path, 1)
        _expect(f1 == CorrectnessFormula(_and(p, s.guard), s.body, p), path,
                "premise must be {p and B} S {p}")
        _check_premises(d, ctx, path)
    elif rule == "CONSEQ":
        (f1,) = _premise_formulas(d, ctx, path, 1)
        _expect(f1.stmt == s, path, "consequence premise is about a different statement")
        ctx.obligations.append(Obligation("implication", p, f1.pre, f"{path}:pre"))
        ctx.obligations.append(Obligation("implication", f1.post, q, f"{path}:post"))
        _check_premises(d, ctx, path)
    elif rule == "FAIL-I":
        _expect(isinstance(s, FailIf), path, "FAIL-I concludes about a failure statement")
        (f1,) = _premise_formulas(d, ctx, path, 1)
        _expect(f1 == CorrectnessFormula(_and(p, s.guard), s.body, q), path,
                "premise must be {p and B} S {q}")
        _check_premises(d, ctx, path)
    elif rule == "FAIL-II":
        _expect(isinstance(s, FailIf), path, "FAIL-II concludes about a failure statement")
        (f1,) = _premise_formulas(d, ctx, path, 1)
        _expect(f1 == CorrectnessFormula(p, s.body, q), path,
                "premise must be {p} S {q}")
        ctx.obligations.append(Obligation("implication", p, s.guard, f"{path}:guard"))
        _check_premises(d, ctx, path)
    elif rule == "BLOCK":
        _expect(isinstance(s, Block), path, "BLOCK concludes about a block statement")
        (f1,) = _premise_formulas(d, ctx, path, 1)
        want = Seq(_canon_init(s.locals), s.body)
        _expect(f1 == CorrectnessFormula(p, want, q), path,
                "premise must inline the local initialization")
        names = {r.name for r in s.locals.targets}
        _expect(not (names & syn.free_vars(q)), path,
                "block locals occur free in the postcondition")
        _check_premises(d, ctx, path)
    elif rule == "WEAKEN":
        _expect(isinstance(s, MethodCall), path, "WEAKEN concludes about a method call")
        (f1,) = _premise_formulas(d, ctx, path, 1)
        _expect(f1 == CorrectnessFormula(_and(p, _nonnull(s.callee)), s, q), path,
                "premise must be {p and s /= null} s.m(t) {q}")
        _check_premises(d, ctx, path)
    elif rule == "DISJ":
        f1, f2 = _premise_formulas(d, ctx, path, 2)
        _expect(isinstance(p, BinOp) and p.op == "or", path,
                "DISJ conclusion precondition must be a disjunction")
        _expect(f1 == CorrectnessFormula(p.left, s, q), path, "first premise mismatch")
        _expect(f2 == CorrectnessFormula(p.right, s, q), path, "second premise mismatch")
        _check_premises(d, ctx, path)
    elif rule == "CONJ":
        f1, f2 = _premise_formulas(d, ctx, path, 2)
        _expect(isinstance(p, BinOp) and p.op == "and"
                and isinstance(q, BinOp) and q.op == "and", path,
                "CONJ conclusion must conjoin both assertions")
        _expect(f1 == CorrectnessFormula(p.left, s, q.left), path, "first premise mismatch")
        _expect(f2 == CorrectnessFormula(p.right, s, q.right), path, "second premise mismatch")
        _check_premises(d, ctx, path)
    elif rule == "EXISTS-INTRO":
        (f1,) = _premise_formulas(d, ctx, path, 1)
        _expect(isinstance(p, Quant) and p.kind == "exists", path,
                "conclusion precondition must be existentially quantified")
        _expect(f1 == CorrectnessFormula(p.body, s, q), path,
                "premise must drop the quantifier")
        x = p.var.name
        bad = (x in syn.var_of_decls(D)) or (x in syn.var_of(s)) or (x in syn.free_vars(q))
        _expect(not bad, path,
                "quantified variable occurs in the declarations, statement, or postcondition")
        _check_premises(d, ctx, path)
    elif rule == "INVARIANCE":
        (f1,) = _premise_formulas(d, ctx, path, 1)
        _expect(isinstance(p, BinOp) and p.op == "and"
                and isinstance(q, BinOp) and q.op == "and"
                and p.left == q.left, path,
                "conclusion must conjoin the same invariant on both sides")
        _expect(f1 == CorrectnessFormula(p.right, s, q.right), path, "premise mismatch")
        inv_free = syn.free_vars(p.left)
        changed = syn.change_of_decls(D) | syn.change_of(s)
        _expect(not (inv_free & changed), path,
                "invariant mentions variables the program can change")
        _check_premises(d, ctx, path)
    elif rule == "SUBST-RULE":
        _expect(d.subst is not None and len(d.subst) > 0, path,
                "SUBST-RULE needs its substitution side data")
        (f1,) = _premise_formulas(d, ctx, path, 1)
        _expect(f1.stmt == s, path, "substitution premise is about a different statement")
        refs = tuple(r for r, _ in d.subst)
        exprs = tuple(e for _, e in d.subst)
        _expect(_norm_eq(p, subst_parallel(f1.pre, refs, exprs)), path,
                "conclusion precondition is not the substituted premise")
        _expect(_norm_eq(q, subst_parallel(f1.post, refs, exprs)), path,
                "conclusion postcondition is not the substituted premise")
        zs = {r.name for r in refs}
        tvars = set()
        for e in exprs:
            tvars |= syn.all_var_names(e)
        prog_vars = syn.var_of_decls(D) | syn.var_of(s)
        changed = syn.change_of_decls(D) | syn.change_of(s)
        _expect(not (zs & prog_vars), path,
                "substituted variables occur in the program")
        _expect(not (tvars & changed), path,
                "replacement expressions mention variables the program can change")
        _check_premises(d, ctx, path)
    else:
        raise _Reject(path, f"unknown rule {rule}")


def _check_premises(d: Derivation, ctx: _Ctx, path: str) -> None:
    for i, prem in enumerate(d.premises):
        _check(prem, ctx, f"{path}.{i}")


def _check_recursion(d: Derivation, ctx: _Ctx, path: str) -> None:
    rule = d.rule
    _expect(ctx.assumptions is None, path, "recursion rules cannot nest")
    A = d.assumptions
    _expect(len(A) >= 1, path, f"{rule} needs a non-empty assumption list")
    f = _conclusion(d, ctx, path)
    _typecheck_formula(f, ctx, path)
    D = ctx.program.decls
    blocks: list[CorrectnessFormula] = []
    for i, a in enumerate(A, start=1):
        _typecheck_formula(a, ctx, f"{path}:assumption[{i}]")
        if rule == "REC-III":
            _expect(isinstance(a.stmt, ProcCall), path,
                    f"assumption {i} must be about a procedure call")
            decl = ctx.program.decl(a.stmt.name)
            _expect(decl is not None, path, f"assumption {i} calls an undeclared procedure")
            init = ParAssign(decl.formals, a.stmt.args)
        else:
            _expect(isinstance(a.stmt, MethodCall), path,
                    f"assumption {i} must be about a method call")
            decl = ctx.program.decl(a.stmt.name)
            _expect(decl is not None, path, f"assumption {i} calls an undeclared method")
            init = ParAssign((syn.THIS,) + decl.formals,
                             (a.stmt.callee,) + a.stmt.args)
            if rule == "REC-II":
                ctx.obligations.append(
                    Obligation("notnull", a.pre, _nonnull(a.stmt.callee),
                               f"{path}:star[{i}]"))
        blocks.append(CorrectnessFormula(a.pre, Block(init, decl.body), a.post))
    _expect(len(d.premises) == 1 + len(A), path,
            f"{rule} over {len(A)} assumptions takes {1 + len(A)} premises")
    inner = _Ctx(ctx.rules, None, A, ctx.program, ctx.obligations)
    main = d.premises[0]
    main_c = _conclusion(main, inner, f"{path}.0")
    _expect(main_c == f, path, "first premise must derive the conclusion from the assumptions")
    _check(main, inner, f"{path}.0")
    for i, (prem, want) in enumerate(zip(d.premises[1:], blocks), start=1):
        got = _conclusion(prem, inner, f"{path}.{i}")
        _expect(got == want, f"{path}.{i}",
                "body premise does not match the declared method body block")
        _check(prem, inner, f"{path}.{i}")


# ---------------------------------------------------------------------------
# Proof translation (object-oriented -> recursive)
# ---------------------------------------------------------------------------

PO_TO_PR = "PO+->PR+"
SPO_TO_SPR = "SPO+->SPR+"


class TranslateError(Exception):
    pass


def _tf(f: CorrectnessFormula) -> CorrectnessFormula:
    return CorrectnessFormula(tr.transform_assertion(f.pre),
                              tr.transform_stmt(f.stmt),
                              tr.transform_assertion(f.post))


def translate_proof(d: Derivation, direction: str) -> Derivation:
    """Constructive rule-by-rule image of an accepted object-oriented
    derivation in the corresponding recursive-program system.

    Method-call reasoning is rebuilt around the translated failure statement:
    assumption citations get wrapped in FAIL-I (partial) or FAIL-II (strong
    partial, with the non-null obligation), the weakening rule is compiled
    away via the normal-form lemma for failure statements, the instance
    assignment axiom becomes the plain assignment axiom, and recursion rules
    I/II become recursion rule III.
    """
    if direction not in (PO_TO_PR, SPO_TO_SPR):
        raise TranslateError(f"unknown direction {direction}")
    return _translate(_sink_into_rec(d), direction, None)


_SINKABLE = {"WEAKEN", "CONSEQ", "EXISTS-INTRO", "INVARIANCE", "SUBST-RULE"}


def _sink_into_rec(d: Derivation) -> Derivation:
    """Float single-premise rules applied below a recursion application into
    its first premise, so recursion ends up at the root of its segment.  The
    moved applications remain legal there (they belong to the base system)."""
    d = Derivation(d.rule, d.conclusion,
                   tuple(_sink_into_rec(p) for p in d.premises),
                   d.assumptions, d.subst, d.index)
    if d.rule in _SINKABLE and len(d.premises) == 1:
        child = d.premises[0]
        if child.rule in ("REC-I", "REC-II", "REC-III"):
            moved = Derivation(d.rule, d.conclusion, (child.premises[0],),
                               subst=d.subst)
            return Derivation(child.rule, d.conclusion,
                              (moved,) + child.premises[1:],
                              child.assumptions, child.subst, child.index)
    return d


def _contains_rec(d: Derivation) -> bool:
    if d.rule in ("REC-I", "REC-II", "REC-III"):
        return True
    return any(_contains_rec(p) for p in d.premises)


def _translate(d: Derivation, direction: str,
               A_src: Optional[tuple[CorrectnessFormula, ...]]) -> Derivation:
    rule = d.rule

    if rule == "ASSUME":
        assert A_src is not None
        cited = A_src[d.index - 1]
        assert isinstance(cited.stmt, MethodCall)
        image = _tf(cited)
        assert isinstance(image.stmt, FailIf)
        call = image.stmt.body
        guard = image.stmt.guard
        leaf = Derivation("ASSUME", None, (), index=d.index)
        if direction == SPO_TO_SPR:
            return Derivation("FAIL-II", image, (leaf,))
        strengthened = Derivation(
            "CONSEQ",
            CorrectnessFormula(_and(image.pre, guard), call, image.post),
            (leaf,))
        return Derivation("FAIL-I", image, (strengthened,))

    if rule in ("REC-I", "REC-II"):
        A = d.assumptions
        theta_A = tuple(_theta_assumption(a) for a in A)
        premises = tuple(_translate(p, direction, A) for p in d.premises)
        return Derivation("REC-III", _tf(d.conclusion), premises,
                          assumptions=theta_A)

    if rule == "WEAKEN":
        assert d.conclusion is not None and isinstance(d.conclusion.stmt, MethodCall)
        if _contains_rec(d.premises[0]):
            raise TranslateError(
                "unsupported derivation shape: weakening above an unsinkable recursion application")
        image = _tf(d.conclusion)
        assert isinstance(image.stmt, FailIf)
        guard = image.stmt.guard
        call = image.stmt.body
        inner = _translate(d.premises[0], direction, A_src)
        stripped = _strip_failif(inner)  # {(p' and B) and B} call {q'}
        target_pre = _and(image.pre, guard)
        adjusted = Derivation("CONSEQ",
                              CorrectnessFormula(target_pre, call, image.post),
                              (stripped,))
        return Derivation("FAIL-I", image, (adjusted,))

    if rule == "ASSIGN-INST":
        return Derivation("ASSIGN", _tf(d.conclusion), ())

    if rule == "SUBST-RULE":
        image = _tf(d.conclusion)
        subst = tuple((r, tr.transform_expr(e)) for r, e in (d.subst or ()))
        return Derivation("SUBST-RULE", image,
                          tuple(_translate(p, direction, A_src) for p in d.premises),
                          subst=subst)

    # every remaining rule translates homomorphically
    image = None if d.conclusion is None else _tf(d.conclusion)
    return Derivation(rule, image,
                      tuple(_translate(p, direction, A_src) for p in d.premises),
                      subst=d.subst, index=d.index)


def _theta_assumption(a: CorrectnessFormula) -> CorrectnessFormula:
    """Assumptions about method calls map to the bare procedure call, without
    the failure wrapper."""
    assert isinstance(a.stmt, MethodCall)
    callee = tr.transform_expr(a.stmt.callee)
    args = tuple(tr.transform_expr(x) for x in a.stmt.args)
    call = ProcCall(a.stmt.name, (callee,) + args)
    return CorrectnessFormula(tr.transform_assertion(a.pre), call,
                              tr.transform_assertion(a.post))


def _strip_failif(d: Derivation) -> Derivation:
    """Normal form for derivations about failure statements: from a proof of
    {r} if B -> S fi {q} build a proof of {r and B} S {q}.  Only the rule
    forms that can conclude about a failure statement need handling."""
    f = d.conclusion
    assert f is not None and isinstance(f.stmt, FailIf)
    B = f.stmt.guard
    S = f.stmt.body
    goal = CorrectnessFormula(_and(f.pre, B), S, f.post)

    if d.rule == "FAIL-I":
        return d.premises[0]
    if d.rule == "FAIL-II":
        return Derivation("CONSEQ", goal, (d.premises[0],))
    if d.rule == "CONSEQ":
        inner = _strip_failif(d.premises[0])
        return Derivation("CONSEQ", goal, (inner,))
    if d.rule == "DISJ":
        s1 = _strip_failif(d.premises[0])
        s2 = _strip_failif(d.premises[1])
        assert s1.conclusion is not None and s2.conclusion is not None
        joined = Derivation(
            "DISJ",
            CorrectnessFormula(BinOp("or", s1.conclusion.pre, s2.conclusion.pre),
                               S, f.post),
            (s1, s2))
        return Derivation("CONSEQ", goal, (joined,))
    if d.rule == "CONJ":
        s1 = _strip_failif(d.premises[0])
        s2 = _strip_failif(d.premises[1])
        assert s1.conclusion is not None and s2.conclusion is not None
        joined = Derivation(
            "CONJ",
            CorrectnessFormula(_and(s1.conclusion.pre, s2.conclusion.pre), S,
                               _and(s1.conclusion.post, s2.conclusion.post)),
            (s1, s2))
        return Derivation("CONSEQ", goal, (joined,))
    if d.rule == "EXISTS-INTRO":
        assert isinstance(f.pre, Quant)
        inner = _strip_failif(d.premises[0])
        assert inner.conclusion is not None
        introduced = Derivation(
            "EXISTS-INTRO",
            CorrectnessFormula(Quant("exists", f.pre.var, inner.conclusion.pre),
                               S, f.post),
            (inner,))
        return Derivation("CONSEQ", goal, (introduced,))
    if d.rule == "INVARIANCE":
        assert isinstance(f.pre, BinOp) and isinstance(f.post, BinOp)
        inner = _strip_failif(d.premises[0])
        assert inner.conclusion is not None
        wrapped = Derivation(
            "INVARIANCE",
            CorrectnessFormula(_and(f.pre.left, inner.conclusion.pre), S, f.post),
            (inner,))
        return Derivation("CONSEQ", goal, (wrapped,))
    if d.rule == "SUBST-RULE":
        inner = _strip_failif(d.premises[0])
        assert inner.conclusion is not None
        refs = tuple(r for r, _ in (d.subst or ()))
        exprs = tuple(e for _, e in (d.subst or ()))
        substituted = Derivation(
            "SUBST-RULE",
            CorrectnessFormula(subst_parallel(inner.conclusion.pre, refs, exprs),
                               S,
                               subst_parallel(inner.conclusion.post, refs, exprs)),
            (inner,), subst=d.subst)
        return Derivation("CONSEQ", goal, (substituted,))
    raise TranslateError(f"cannot strip the failure wrapper under {d.rule}")
