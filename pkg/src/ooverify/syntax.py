"""Abstract syntax shared by the kernel, object-oriented, and recursive languages.

Three kinds of phrases live here: expressions (including the navigation
expressions and quantifiers that only assertions may use), statements, and
declarations.  Variables are self-describing: every occurrence carries its
kind (normal vs. instance) and its type, so no separate symbol table is
needed once a phrase has been built.

The module also provides the two static analyses the rest of the workbench
depends on: ``typecheck`` (well-formedness diagnostics) and the variable
analyses ``var_of`` / ``change_of`` / ``free_vars``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Basic:
    name: str  # "integer" | "boolean" | "object"

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Higher:
    """Array type T1 x ... x Tn -> T with basic argument and value types."""

    args: tuple[Basic, ...]
    value: Basic

    def __repr__(self) -> str:
        return " * ".join(a.name for a in self.args) + " -> " + self.value.name


Ty = Union[Basic, Higher]

INT = Basic("integer")
BOOL = Basic("boolean")
OBJECT = Basic("object")

BASIC_TYPES = {"integer": INT, "boolean": BOOL, "object": OBJECT}


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# Variables
# ---------------------------------------------------------------------------

NORMAL = "normal"
INSTANCE = "instance"


@dataclass(frozen=True)
class VarRef:
    kind: str  # NORMAL | INSTANCE
    name: str
    ty: Ty

    @property
    def is_array(self) -> bool:
        return isinstance(self.ty, Higher)

    def __repr__(self) -> str:
        return f"{self.name}:{self.kind[0]}:{self.ty!r}"


THIS = VarRef(NORMAL, "this", OBJECT)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------
#
# Assertions are boolean expressions that may additionally contain Nav and
# Quant nodes; executable program expressions may contain neither.


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NullLit:
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    ref: VarRef
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sub:
    """Subscripted variable a[t1,...,tn] (normal or instance array)."""

    ref: VarRef
    indices: tuple["Expr", ...]
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Nav:
    """Navigation expression e.x or e.a[t1,...,tn]; assertion contexts only.

    ``indices`` is None for simple instance access, a tuple for arrays.
    """

    base: "Expr"
    ref: VarRef
    indices: Optional[tuple["Expr", ...]] = None
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cond:
    guard: "Expr"
    then: "Expr"
    orelse: "Expr"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * = /= < <= and or ->
    left: "Expr"
    right: "Expr"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class UnOp:
    op: str  # not
    operand: "Expr"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Quant:
    kind: str  # "forall" | "exists"
    var: VarRef  # simple normal variable
    body: "Expr"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


Expr = Union[IntLit, BoolLit, NullLit, Var, Sub, Nav, Cond, BinOp, UnOp, Quant]
Assertion = Expr  # boolean-typed, may contain Nav/Quant

ARITH_OPS = {"+", "-", "*"}
COMPARE_OPS = {"<", "<="}
EQ_OPS = {"=", "/="}
BOOL_OPS = {"and", "or", "->"}

TRUE = BoolLit(True)
FALSE = BoolLit(False)


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assign:
    target: Union[Var, Sub]
    value: Expr
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ParAssign:
    """x1,...,xn := t1,...,tn on distinct simple normal variables."""

    targets: tuple[VarRef, ...]
    values: tuple[Expr, ...]
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    rest: "Stmt"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class IfElse:
    guard: Expr
    then: "Stmt"
    orelse: "Stmt"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class FailIf:
    """Failure statement if B -> S fi: executes S when B holds, else fails."""

    guard: Expr
    body: "Stmt"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class While:
    guard: Expr
    body: "Stmt"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Block:
    locals: ParAssign
    body: "Stmt"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MethodCall:
    callee: Expr
    name: str
    args: tuple[Expr, ...]
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ProcCall:
    name: str
    args: tuple[Expr, ...]
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class LiteralRestore:
    """Internal-only suffix injected by the block transition: writes the
    snapshotted runtime values back into the local variables.  Never produced
    by the parser and rejected by the renderer and strict typecheck."""

    targets: tuple[VarRef, ...]
    values: tuple  # runtime Values from the state module
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Empty:
    """Termination marker; only appears in interpreter configurations."""


EMPTY = Empty()

Stmt = Union[
    Skip, Assign, ParAssign, Seq, IfElse, FailIf, While, Block,
    MethodCall, ProcCall, LiteralRestore, Empty,
]


# ---------------------------------------------------------------------------
# Declarations and programs
# ---------------------------------------------------------------------------

KERNEL = "kernel"
OO = "oo"
RECURSIVE = "recursive"


@dataclass(frozen=True)
class Decl:
    name: str
    formals: tuple[VarRef, ...]
    body: Stmt
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    decls: tuple[Decl, ...]
    main: Stmt
    flavor: str  # KERNEL | OO | RECURSIVE

    def decl(self, name: str) -> Optional[Decl]:
        for d in self.decls:
            if d.name == name:
                return d
        return None


# ---------------------------------------------------------------------------
# Expression typing
# ---------------------------------------------------------------------------


class TypeError_(Exception):
    """Raised by expr_type on ill-typed input; typecheck reports instead."""


def expr_type(e: Expr) -> Ty:
    """Type of a well-formed expression. Raises TypeError_ when broken."""
    if isinstance(e, IntLit):
        return INT
    if isinstance(e, BoolLit):
        return BOOL
    if isinstance(e, NullLit):
        return OBJECT
    if isinstance(e, Var):
        return e.ref.ty
    if isinstance(e, Sub):
        if not isinstance(e.ref.ty, Higher):
            raise TypeError_(f"subscripting non-array {e.ref.name}")
        return e.ref.ty.value
    if isinstance(e, Nav):
        if e.indices is None:
            return e.ref.ty
        if not isinstance(e.ref.ty, Higher):
            raise TypeError_(f"subscripting non-array {e.ref.name}")
        return e.ref.ty.value
    if isinstance(e, Cond):
        return expr_type(e.then)
    if isinstance(e, BinOp):
        if e.op in ARITH_OPS:
            return INT
        return BOOL
    if isinstance(e, UnOp):
        return BOOL if e.op == "not" else INT
    if isinstance(e, Quant):
        return BOOL
    raise TypeError_(f"unknown expression node {e!r}")


# ---------------------------------------------------------------------------
# Generic walkers
# ---------------------------------------------------------------------------


def sub_exprs(e: Expr) -> Iterator[Expr]:
    if isinstance(e, Sub):
        yield from e.indices
    elif isinstance(e, Nav):
        yield e.base
        if e.indices is not None:
            yield from e.indices
    elif isinstance(e, Cond):
        yield e.guard
        yield e.then
        yield e.orelse
    elif isinstance(e, BinOp):
        yield e.left
        yield e.right
    elif isinstance(e, UnOp):
        yield e.operand
    elif isinstance(e, Quant):
        yield e.body


def walk_expr(e: Expr) -> Iterator[Expr]:
    yield e
    for c in sub_exprs(e):
        yield from walk_expr(c)


def stmt_exprs(s: Stmt) -> Iterator[Expr]:
    """Immediate expressions of a statement (not recursing into substatements)."""
    if isinstance(s, Assign):
        yield s.target
        yield s.value
    elif isinstance(s, ParAssign):
        yield from s.values
    elif isinstance(s, (IfElse, FailIf, While)):
        yield s.guard
    elif isinstance(s, Block):
        yield from s.locals.values
    elif isinstance(s, MethodCall):
        yield s.callee
        yield from s.args
    elif isinstance(s, ProcCall):
        yield from s.args


def sub_stmts(s: Stmt) -> Iterator[Stmt]:
    if isinstance(s, Seq):
        yield s.first
        yield s.rest
    elif isinstance(s, IfElse):
        yield s.then
        yield s.orelse
    elif isinstance(s, (FailIf, While)):
        yield s.body
    elif isinstance(s, Block):
        yield s.locals
        yield s.body


def walk_stmt(s: Stmt) -> Iterator[Stmt]:
    stack = [s]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(sub_stmts(cur))


# ---------------------------------------------------------------------------
# Variable analyses
# ---------------------------------------------------------------------------


def expr_var_refs(e: Expr) -> set[VarRef]:
    """All variable references in an expression, including quantifier-bound."""
    out: set[VarRef] = set()
    for n in walk_expr(e):
        if isinstance(n, (Var, Sub, Nav)):
            out.add(n.ref)
        elif isinstance(n, Quant):
            out.add(n.var)
    return out


def var_of(s: Stmt) -> set[str]:
    """var(S): names of all simple and array variables occurring in S."""
    out: set[str] = set()
    for st in walk_stmt(s):
        if isinstance(st, ParAssign):
            out.update(r.name for r in st.targets)
        elif isinstance(st, LiteralRestore):
            out.update(r.name for r in st.targets)
        for e in stmt_exprs(st):
            out.update(r.name for r in expr_var_refs(e))
    return out


def change_of(s: Stmt, bound: frozenset[str] = frozenset()) -> set[str]:
    """change(S): global variables assigned outside subscript positions.

    Block-local variables are not global; calls contribute nothing here
    (their bodies are accounted for via change over the declaration set).
    """
    if isinstance(s, Assign):
        name = s.target.ref.name
        return set() if name in bound else {name}
    if isinstance(s, (ParAssign, LiteralRestore)):
        return {r.name for r in s.targets if r.name not in bound}
    if isinstance(s, Seq):
        return change_of(s.first, bound) | change_of(s.rest, bound)
    if isinstance(s, IfElse):
        return change_of(s.then, bound) | change_of(s.orelse, bound)
    if isinstance(s, (FailIf, While)):
        return change_of(s.body, bound)
    if isinstance(s, Block):
        inner = bound | {r.name for r in s.locals.targets}
        return change_of(s.locals, bound) | change_of(s.body, inner)
    return set()


def var_of_decls(decls: tuple[Decl, ...]) -> set[str]:
    out: set[str] = set()
    for d in decls:
        out |= var_of(d.body)
        out.update(r.name for r in d.formals)
    return out


def change_of_decls(decls: tuple[Decl, ...]) -> set[str]:
    out: set[str] = set()
    for d in decls:
        out |= change_of(d.body) - {r.name for r in d.formals}
    return out


def free_vars(p: Expr, bound: frozenset[str] = frozenset()) -> set[str]:
    """Free variable names of an assertion or expression.

    A bare instance variable u abbreviates this.u, so it contributes both u
    and this; quantifiers bind their variable.
    """
    if isinstance(p, (IntLit, BoolLit, NullLit)):
        return set()
    if isinstance(p, Var):
        if p.ref.name in bound:
            return set()
        if p.ref.kind == INSTANCE:
            return {p.ref.name, "this"}
        return {p.ref.name}
    if isinstance(p, Sub):
        out = set() if p.ref.name in bound else {p.ref.name}
        if p.ref.kind == INSTANCE:
            out.add("this")
        for i in p.indices:
            out |= free_vars(i, bound)
        return out
    if isinstance(p, Nav):
        out = {p.ref.name} | free_vars(p.base, bound)
        for i in p.indices or ():
            out |= free_vars(i, bound)
        return out
    if isinstance(p, Quant):
        return free_vars(p.body, bound | {p.var.name})
    out = set()
    for c in sub_exprs(p):
        out |= free_vars(c, bound)
    return out


def all_var_names(p: Expr) -> set[str]:
    """Every variable name in p, free or bound (for freshness checks)."""
    return {r.name for r in expr_var_refs(p)}


# ---------------------------------------------------------------------------
# Typechecking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    message: str
    loc: Optional[Loc] = None

    def __str__(self) -> str:
        where = f"{self.loc}: " if self.loc else ""
        return f"{where}{self.message} [{self.rule}]"


class _Checker:
    def __init__(self, program: Program, internal: bool):
        self.program = program
        self.internal = internal
        self.diags: list[Diagnostic] = []

    def report(self, rule: str, message: str, loc: Optional[Loc]) -> None:
        self.diags.append(Diagnostic(rule, message, loc))

    # -- expressions --------------------------------------------------------

    def check_expr(self, e: Expr, executable: bool) -> None:
        loc = getattr(e, "loc", None)
        if isinstance(e, Nav):
            if executable:
                self.report("navigation-in-program", "navigation expressions are not executable", loc)
            if e.ref.kind != INSTANCE:
                self.report("navigation-target", f"{e.ref.name} is not an instance variable", loc)
            self.type_of(e.base, executable, OBJECT)
            self._check_indices(e.ref, e.indices, executable, loc)
        elif isinstance(e, Quant):
            if executable:
                self.report("quantifier-in-program", "quantifiers are not executable", loc)
            if e.var.kind != NORMAL or e.var.is_array:
                self.report("quantifier-variable", "quantification is over simple normal variables", loc)
            self.type_of(e.body, executable, BOOL)
            return
        elif isinstance(e, Sub):
            self._check_indices(e.ref, e.indices, executable, loc)
        elif isinstance(e, Var):
            if e.ref.is_array:
                self.report("bare-array", f"array {e.ref.name} used without subscript", loc)
        for c in sub_exprs(e):
            if isinstance(e, (Nav, Sub)):
                continue  # handled above with index typing
            self.check_expr(c, executable)

    def _check_indices(self, ref: VarRef, indices, executable: bool, loc) -> None:
        if indices is None:
            if isinstance(ref.ty, Higher):
                self.report("bare-array", f"array {ref.name} used without subscript", loc)
            return
        if not isinstance(ref.ty, Higher):
            self.report("not-an-array", f"{ref.name} is not an array", loc)
            return
        if len(indices) != len(ref.ty.args):
            self.report("subscript-arity", f"{ref.name} expects {len(ref.ty.args)} subscripts", loc)
            return
        for ix, want in zip(indices, ref.ty.args):
            self.type_of(ix, executable, want)

    def type_of(self, e: Expr, executable: bool, want: Optional[Ty] = None) -> Optional[Ty]:
        """Check e recursively and return its type; report mismatches."""
        loc = getattr(e, "loc", None)
        ty: Optional[Ty] = None
        if isinstance(e, (IntLit, BoolLit, NullLit, Var, Sub, Nav)):
            self.check_expr(e, executable)
            try:
                ty = expr_type(e)
            except TypeError_:
                ty = None
        elif isinstance(e, Cond):
            self.type_of(e.guard, executable, BOOL)
            t1 = self.type_of(e.then, executable)
            t2 = self.type_of(e.orelse, executable)
            if t1 is not None and t2 is not None and t1 != t2:
                self.report("conditional-branches", "branches of a conditional expression differ in type", loc)
            ty = t1 or t2
        elif isinstance(e, BinOp):
            if e.op in ARITH_OPS or e.op in COMPARE_OPS:
                self.type_of(e.left, executable, INT)
                self.type_of(e.right, executable, INT)
                ty = INT if e.op in ARITH_OPS else BOOL
            elif e.op in EQ_OPS:
                t1 = self.type_of(e.left, executable)
                t2 = self.type_of(e.right, executable)
                if t1 is not None and t2 is not None and t1 != t2:
                    self.report("equality-types", "equality compares values of different types", loc)
                if (t1 or t2) is not None and isinstance(t1 or t2, Higher):
                    self.report("equality-types", "arrays cannot be compared", loc)
                ty = BOOL
            elif e.op in BOOL_OPS:
                self.type_of(e.left, executable, BOOL)
                self.type_of(e.right, executable, BOOL)
                ty = BOOL
            else:
                self.report("unknown-operator", f"unknown operator {e.op}", loc)
        elif isinstance(e, UnOp):
            self.type_of(e.operand, executable, BOOL)
            ty = BOOL
        elif isinstance(e, Quant):
            self.check_expr(e, executable)
            ty = BOOL
        if want is not None and ty is not None and ty != want:
            self.report("type-mismatch", f"expected {want!r}, found {ty!r}", loc)
        return ty

    # -- statements ----------------------------------------------------------

    def check_stmt(self, s: Stmt, locals_in_scope: frozenset[str]) -> None:
        loc = getattr(s, "loc", None)
        flavor = self.program.flavor
        if isinstance(s, (Skip, Empty)):
            return
        if isinstance(s, Assign):
            ref = s.target.ref
            if ref.name == "this" and not self.internal:
                self.report("assignment-to-this", "assignment to this", loc)
            if isinstance(s.target, Var) and ref.is_array:
                self.report("bare-array", f"array {ref.name} assigned without subscript", loc)
            if isinstance(s.target, Sub):
                self._check_indices(ref, s.target.indices, True, loc)
            if ref.kind == INSTANCE and flavor != OO:
                self.report("instance-variable-flavor", f"instance variable {ref.name} outside an object-oriented program", loc)
            want = ref.ty.value if isinstance(ref.ty, Higher) else ref.ty
            self.type_of(s.value, True, want)
            return
        if isinstance(s, ParAssign):
            if len(s.targets) != len(s.values):
                self.report("parallel-arity", "parallel assignment arity mismatch", loc)
            if len(set(r.name for r in s.targets)) != len(s.targets):
                self.report("parallel-duplicates", "parallel assignment targets must be distinct", loc)
            for r in s.targets:
                if r.is_array:
                    self.report("parallel-simple", f"parallel assignment target {r.name} must be simple", loc)
                if r.kind != NORMAL:
                    self.report("parallel-normal", f"parallel assignment target {r.name} must be a normal variable", loc)
                if r.name == "this" and not self.internal:
                    self.report("assignment-to-this", "assignment to this", loc)
            for r, v in zip(s.targets, s.values):
                self.type_of(v, True, r.ty)
            return
        if isinstance(s, Seq):
            self.check_stmt(s.first, locals_in_scope)
            self.check_stmt(s.rest, locals_in_scope)
            return
        if isinstance(s, (IfElse, While, FailIf)):
            self.type_of(s.guard, True, BOOL)
            if isinstance(s, IfElse):
                self.check_stmt(s.then, locals_in_scope)
                self.check_stmt(s.orelse, locals_in_scope)
            else:
                self.check_stmt(s.body, locals_in_scope)
            return
        if isinstance(s, Block):
            names = [r.name for r in s.locals.targets]
            for r in s.locals.targets:
                if r.kind == INSTANCE:
                    self.report("instance-local", f"instance variable {r.name} used as a local variable", loc)
                if r.name == "this" and not self.internal:
                    self.report("this-local", "this used as a local variable", loc)
            if len(s.locals.targets) != len(s.locals.values):
                self.report("parallel-arity", "block initializer arity mismatch", loc)
            if len(set(names)) != len(names):
                self.report("parallel-duplicates", "block local variables must be distinct", loc)
            for r, v in zip(s.locals.targets, s.locals.values):
                if r.is_array:
                    self.report("local-simple", f"block local {r.name} must be simple", loc)
                self.type_of(v, True, r.ty)
            self.check_stmt(s.body, locals_in_scope | frozenset(names))
            return
        if isinstance(s, MethodCall):
            if flavor != OO:
                self.report("call-flavor", "method calls require an object-oriented program", loc)
                return
            self.type_of(s.callee, True, OBJECT)
            self._check_call(s.name, s.args, loc)
            return
        if isinstance(s, ProcCall):
            if flavor != RECURSIVE:
                self.report("call-flavor", "procedure calls require a recursive program", loc)
                return
            self._check_call(s.name, s.args, loc)
            return
        if isinstance(s, LiteralRestore):
            if not self.internal:
                self.report("internal-node", "value-restore statements cannot appear in source programs", loc)
            return
        self.report("unknown-statement", f"unknown statement {type(s).__name__}", loc)

    def _check_call(self, name: str, args, loc) -> None:
        d = self.program.decl(name)
        if d is None:
            self.report("undeclared", f"call to undeclared {name}", loc)
            return
        if len(args) != len(d.formals):
            self.report("call-arity", f"{name} expects {len(d.formals)} arguments, got {len(args)}", loc)
            return
        for a, f in zip(args, d.formals):
            self.type_of(a, True, f.ty)

    # -- whole program -------------------------------------------------------

    def run(self) -> list[Diagnostic]:
        seen = set()
        for d in self.program.decls:
            if d.name in seen:
                self.report("duplicate-declaration", f"{d.name} declared twice", d.loc)
            seen.add(d.name)
            fnames = [r.name for r in d.formals]
            if len(set(fnames)) != len(fnames):
                self.report("formal-duplicates", f"formal parameters of {d.name} must be distinct", d.loc)
            for r in d.formals:
                if r.is_array:
                    self.report("formal-basic", f"formal parameter {r.name} must be of a basic type", d.loc)
                if r.kind != NORMAL:
                    self.report("formal-normal", f"formal parameter {r.name} must be a normal variable", d.loc)
                if r.name == "this" and self.program.flavor == OO:
                    self.report("formal-this", "this cannot be a formal parameter of a method", d.loc)
            self.check_stmt(d.body, frozenset())
        self.check_stmt(self.program.main, frozenset())
        if not self.internal:
            self._check_name_clash()
        return self.diags

    def _check_name_clash(self) -> None:
        """No local variable of main or D occurs freely in main or D."""
        local_names: set[str] = set()
        stmts = [self.program.main] + [d.body for d in self.program.decls]
        for s in stmts:
            for st in (x for root in [s] for x in walk_stmt(root)):
                if isinstance(st, Block):
                    local_names.update(r.name for r in st.locals.targets)
        if not local_names:
            return
        free: set[str] = set()
        for s in stmts:
            free |= _free_stmt_vars(s, frozenset())
        for d in self.program.decls:
            free -= {r.name for r in d.formals}
        clash = local_names & free
        for name in sorted(clash):
            self.report("local-free-clash", f"local variable {name} also occurs free", None)


def _free_stmt_vars(s: Stmt, bound: frozenset[str]) -> set[str]:
    out: set[str] = set()
    if isinstance(s, Block):
        for v in s.locals.values:
            out |= {n for n in (r.name for r in expr_var_refs(v)) if n not in bound}
        inner = bound | {r.name for r in s.locals.targets}
        out |= _free_stmt_vars(s.body, inner)
        return out
    if isinstance(s, ParAssign):
        out.update(r.name for r in s.targets if r.name not in bound)
    if isinstance(s, Assign):
        if s.target.ref.name not in bound:
            out.add(s.target.ref.name)
    for e in stmt_exprs(s):
        out |= {n for n in (r.name for r in expr_var_refs(e)) if n not in bound}
    for c in sub_stmts(s):
        out |= _free_stmt_vars(c, bound)
    return out


def typecheck(program: Program, internal: bool = False) -> list[Diagnostic]:
    """Well-formedness diagnostics; an empty list means well-typed.

    ``internal`` relaxes the surface-only rules (assignment to this, the
    value-restore node, local/free name hygiene) so that interpreter-generated
    intermediate statements and proof-rule block premises can be checked.
    """
    return _Checker(program, internal).run()


def stmt_typechecks(s: Stmt, program: Program, internal: bool = True) -> list[Diagnostic]:
    """Typecheck a bare statement against a program's declarations."""
    return typecheck(Program(program.decls, s, program.flavor), internal=internal)


def assertion_diagnostics(p: Expr, program: Program) -> list[Diagnostic]:
    """Typecheck an assertion (boolean, navigation and quantifiers allowed)."""
    checker = _Checker(program, internal=True)
    checker.type_of(p, executable=False, want=BOOL)
    return checker.diags
