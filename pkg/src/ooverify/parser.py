"""Concrete syntax: lexer, parsers, and the renderer.

File kinds: programs (`.krn`, `.oo`, `.rec`), proofs (`.prf`), plus inline
assertions, correctness formulas, and state literals used by fixtures and the
CLI.  Programs are a prelude of `var` / `ivar` / `method` / `proc`
declarations followed by the main statement.  Comments run from `//` to end
of line.

The renderer is the inverse of the parser up to whitespace:
``parse(render(p)) == p`` for every phrase the surface grammar can express
(the internal value-restore node is rejected).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import syntax as syn
from .syntax import (
    BOOL, INT, INSTANCE, KERNEL, NORMAL, OBJECT, OO, RECURSIVE,
    Assign, Basic, BinOp, Block, BoolLit, Cond, Decl, Expr, FailIf, Higher,
    IfElse, IntLit, Loc, MethodCall, Nav, NullLit, ParAssign, ProcCall,
    Program, Quant, Seq, Skip, Stmt, Sub, Ty, UnOp, Var, VarRef, While,
)
from . import state as st

KEYWORDS = {
    "skip", "if", "then", "else", "fi", "while", "do", "od", "begin",
    "local", "end", "true", "false", "null", "and", "or", "not",
    "forall", "exists", "method", "proc", "var", "ivar", "state",
    "integer", "boolean", "object", "nat",
}

SYMBOLS = [":=", "->", "/=", "<=", "(", ")", "{", "}", "[", "]",
           ",", ";", ":", ".", "?", "=", "<", "+", "-", "*"]


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: Optional[list[str]] = None):
        self.line = line
        self.col = col
        self.expected = expected or []
        hint = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{line}:{col}: {message}{hint}")


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class Token:
    type: str  # IDENT | INT | KW | SYM | EOF
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("INT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            # the guarded-skip terminator fi'
            if word == "fi" and j < n and text[j] == "'":
                toks.append(Token("KW", "fi'", line, col))
                col += j - i + 1
                i = j + 1
                continue
            toks.append(Token("KW" if word in KEYWORDS else "IDENT", word, line, col))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("SYM", sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Scoped symbol tables
# ---------------------------------------------------------------------------


class Scope:
    def __init__(self, table: Optional[dict[str, VarRef]] = None):
        self.stack: list[dict[str, VarRef]] = [dict(table or {})]
        self.stack[0].setdefault("this", syn.THIS)

    def lookup(self, name: str) -> Optional[VarRef]:
        for frame in reversed(self.stack):
            if name in frame:
                return frame[name]
        return None

    def declare(self, ref: VarRef) -> None:
        self.stack[-1][ref.name] = ref

    def push(self) -> None:
        self.stack.append({})

    def pop(self) -> None:
        self.stack.pop()


def build_table(program: Program) -> dict[str, VarRef]:
    """Global symbol table of a program: every variable reference it contains,
    keyed by name (formals, locals, and bound variables included; shadowing of
    globals is excluded by the name-clash convention)."""
    table: dict[str, VarRef] = {"this": syn.THIS}
    def add(ref: VarRef) -> None:
        table.setdefault(ref.name, ref)
    for d in program.decls:
        for r in d.formals:
            add(r)
        for s in syn.walk_stmt(d.body):
            for e in syn.stmt_exprs(s):
                for r in syn.expr_var_refs(e):
                    add(r)
            if isinstance(s, ParAssign):
                for r in s.targets:
                    add(r)
    for s in syn.walk_stmt(program.main):
        for e in syn.stmt_exprs(s):
            for r in syn.expr_var_refs(e):
                add(r)
        if isinstance(s, ParAssign):
            for r in s.targets:
                add(r)
    return table


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class Parser:
    def __init__(self, text: str, table: Optional[dict[str, VarRef]] = None,
                 allow_navigation: bool = False):
        self.toks = tokenize(text)
        self.pos = 0
        self.scope = Scope(table)
        self.allow_navigation = allow_navigation
        self.methods: list[Decl] = []
        self.flavor_hints: set[str] = set()

    # -- token helpers -------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.type != "EOF":
            self.pos += 1
        return t

    def at(self, type_: str, value: Optional[str] = None, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.type == type_ and (value is None or t.value == value)

    def accept(self, type_: str, value: Optional[str] = None) -> Optional[Token]:
        if self.at(type_, value):
            return self.next()
        return None

    def expect(self, type_: str, value: Optional[str] = None) -> Token:
        if self.at(type_, value):
            return self.next()
        t = self.peek()
        want = value or type_.lower()
        raise ParseError(f"found {t.value!r}", t.line, t.col, expected=[want])

    def fail(self, message: str, expected: Optional[list[str]] = None):
        t = self.peek()
        raise ParseError(message, t.line, t.col, expected)

    def loc(self) -> Loc:
        t = self.peek()
        return Loc(t.line, t.col)

    # -- types ---------------------------------------------------------------

    def parse_basic(self) -> Basic:
        for name in ("integer", "boolean", "object"):
            if self.accept("KW", name):
                return syn.BASIC_TYPES[name]
        if self.accept("KW", "nat"):
            return INT  # alias: nonnegative integers, used only by harnesses
        self.fail("expected a basic type", ["integer", "boolean", "object"])

    def parse_type(self) -> Ty:
        first = self.parse_basic()
        if not (self.at("SYM", "*") or self.at("SYM", "->")):
            return first
        args = [first]
        while self.accept("SYM", "*"):
            args.append(self.parse_basic())
        self.expect("SYM", "->")
        value = self.parse_basic()
        return Higher(tuple(args), value)

    # -- expressions ----------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_implies()

    def parse_implies(self) -> Expr:
        if self.at("KW", "forall") or self.at("KW", "exists"):
            return self.parse_quant()
        left = self.parse_or()
        if self.accept("SYM", "->"):
            right = self.parse_implies()
            return BinOp("->", left, right)
        return left

    def parse_quant(self) -> Expr:
        loc = self.loc()
        kind = self.next().value
        if not self.allow_navigation:
            raise ParseError("quantifiers are only allowed in assertions", loc.line, loc.col)
        name = self.expect("IDENT").value
        self.expect("SYM", ":")
        ty = self.parse_basic()
        self.expect("SYM", ":")
        ref = VarRef(NORMAL, name, ty)
        self.scope.push()
        self.scope.declare(ref)
        body = self.parse_implies()
        self.scope.pop()
        return Quant(kind, ref, body, loc=loc)

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.accept("KW", "or"):
            left = BinOp("or", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.accept("KW", "and"):
            left = BinOp("and", left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.accept("KW", "not"):
            return UnOp("not", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        for op in ("=", "/=", "<=", "<"):
            if self.at("SYM", op):
                self.next()
                return BinOp(op, left, self.parse_additive())
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_multiplicative()
        while self.at("SYM", "+") or self.at("SYM", "-"):
            op = self.next().value
            left = BinOp(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> Expr:
        left = self.parse_unary()
        while self.accept("SYM", "*"):
            left = BinOp("*", left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        if self.at("SYM", "-"):
            loc = self.loc()
            self.next()
            operand = self.parse_unary()
            if isinstance(operand, IntLit):
                return IntLit(-operand.value, loc=loc)
            return BinOp("-", IntLit(0, loc=loc), operand)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        e = self.parse_primary()
        while self.at("SYM", "."):
            if not self.allow_navigation:
                break  # statement parser may consume `.m(...)` as a call
            if self.at("SYM", "(", ahead=2):
                break  # `.name(` is a method call, never navigation
            self.next()
            name_tok = self.expect("IDENT")
            ref = self.scope.lookup(name_tok.value)
            if ref is None or ref.kind != INSTANCE:
                raise ParseError(f"{name_tok.value} is not an instance variable",
                                 name_tok.line, name_tok.col)
            indices: Optional[tuple[Expr, ...]] = None
            if self.accept("SYM", "["):
                indices = tuple(self.parse_args("]"))
            e = Nav(e, ref, indices, loc=Loc(name_tok.line, name_tok.col))
        return e

    def parse_args(self, closer: str) -> list[Expr]:
        args: list[Expr] = []
        if not self.at("SYM", closer):
            args.append(self.parse_expr())
            while self.accept("SYM", ","):
                args.append(self.parse_expr())
        self.expect("SYM", closer)
        return args

    def parse_primary(self) -> Expr:
        loc = self.loc()
        if self.at("INT"):
            return IntLit(int(self.next().value), loc=loc)
        if self.accept("KW", "true"):
            return BoolLit(True, loc=loc)
        if self.accept("KW", "false"):
            return BoolLit(False, loc=loc)
        if self.accept("KW", "null"):
            return NullLit(loc=loc)
        if self.accept("SYM", "("):
            e = self.parse_expr()
            if self.accept("SYM", "?"):
                then = self.parse_expr()
                self.expect("SYM", ":")
                orelse = self.parse_expr()
                self.expect("SYM", ")")
                return Cond(e, then, orelse, loc=loc)
            self.expect("SYM", ")")
            return e
        if self.at("IDENT"):
            tok = self.next()
            ref = self.scope.lookup(tok.value)
            if ref is None:
                raise ParseError(f"undeclared variable {tok.value}", tok.line, tok.col)
            if self.accept("SYM", "["):
                indices = tuple(self.parse_args("]"))
                return Sub(ref, indices, loc=loc)
            return Var(ref, loc=loc)
        self.fail("expected an expression")

    def parse_guard(self) -> Expr:
        # guards stop below `->` so the failure statement arrow is unambiguous
        return self.parse_or()

    # -- statements ------------------------------------------------------------

    def parse_stmt_seq(self) -> Stmt:
        stmts = [self.parse_stmt()]
        while self.accept("SYM", ";"):
            stmts.append(self.parse_stmt())
        out = stmts[-1]
        for s in reversed(stmts[:-1]):
            out = Seq(s, out)
        return out

    def parse_stmt(self) -> Stmt:
        loc = self.loc()
        if self.accept("KW", "skip"):
            return Skip(loc=loc)
        if self.accept("KW", "if"):
            guard = self.parse_guard()
            if self.accept("KW", "then"):
                then = self.parse_stmt_seq()
                self.expect("KW", "else")
                orelse = self.parse_stmt_seq()
                self.expect("KW", "fi")
                return IfElse(guard, then, orelse, loc=loc)
            self.expect("SYM", "->")
            body = self.parse_stmt_seq()
            if self.accept("KW", "fi'"):
                return IfElse(guard, body, Skip(), loc=loc)
            self.expect("KW", "fi")
            return FailIf(guard, body, loc=loc)
        if self.accept("KW", "while"):
            guard = self.parse_guard()
            self.expect("KW", "do")
            body = self.parse_stmt_seq()
            self.expect("KW", "od")
            return While(guard, body, loc=loc)
        if self.accept("KW", "begin"):
            return self.parse_block(loc)
        return self.parse_assign_or_call(loc)

    def parse_block(self, loc: Loc) -> Stmt:
        self.expect("KW", "local")
        names: list[Token] = [self.expect("IDENT") if self.at("IDENT") else self.expect("KW", "this")]
        while self.accept("SYM", ","):
            names.append(self.expect("IDENT") if self.at("IDENT") else self.expect("KW", "this"))
        self.expect("SYM", ":=")
        values = [self.parse_expr()]
        while self.accept("SYM", ","):
            values.append(self.parse_expr())
        if len(names) != len(values):
            raise ParseError("block initializer arity mismatch", loc.line, loc.col)
        refs = []
        for tok, v in zip(names, values):
            try:
                ty = syn.expr_type(v)
            except syn.TypeError_ as exc:
                raise ParseError(str(exc), tok.line, tok.col)
            refs.append(VarRef(NORMAL, tok.value, ty))
        self.expect("SYM", ";")
        self.scope.push()
        for r in refs:
            self.scope.declare(r)
        body = self.parse_stmt_seq()
        self.scope.pop()
        self.expect("KW", "end")
        return Block(ParAssign(tuple(refs), tuple(values)), body, loc=loc)

    def parse_assign_or_call(self, loc: Loc) -> Stmt:
        # parallel assignment: ident (, ident)+ := ...
        if self.at("IDENT") and self.at("SYM", ",", ahead=1):
            names = [self.next()]
            while self.accept("SYM", ","):
                names.append(self.expect("IDENT"))
            self.expect("SYM", ":=")
            values = [self.parse_expr()]
            while self.accept("SYM", ","):
                values.append(self.parse_expr())
            refs = []
            for tok in names:
                ref = self.scope.lookup(tok.value)
                if ref is None:
                    raise ParseError(f"undeclared variable {tok.value}", tok.line, tok.col)
                refs.append(ref)
            return ParAssign(tuple(refs), tuple(values), loc=loc)
        # procedure call: ident ( ... )
        if self.at("IDENT") and self.at("SYM", "(", ahead=1):
            name = self.next().value
            self.expect("SYM", "(")
            args = tuple(self.parse_args(")"))
            self.flavor_hints.add(RECURSIVE)
            return ProcCall(name, args, loc=loc)
        target = self.parse_postfix_program()
        if self.at("SYM", "."):
            self.next()
            name_tok = self.expect("IDENT")
            self.expect("SYM", "(")
            args = tuple(self.parse_args(")"))
            self.flavor_hints.add(OO)
            return MethodCall(target, name_tok.value, args, loc=loc)
        if self.accept("SYM", ":="):
            if not isinstance(target, (Var, Sub)):
                raise ParseError("assignment target must be a simple or subscripted variable",
                                 loc.line, loc.col)
            value = self.parse_expr()
            return Assign(target, value, loc=loc)
        self.fail("expected a statement")

    def parse_postfix_program(self) -> Expr:
        """Expression in statement-head position; `.` is left for the caller."""
        saved = self.allow_navigation
        self.allow_navigation = False
        try:
            return self.parse_primary()
        finally:
            self.allow_navigation = saved

    # -- declarations and programs ----------------------------------------------

    def parse_var_decl(self, kind: str) -> None:
        names = [self.expect("IDENT")]
        while self.accept("SYM", ","):
            names.append(self.expect("IDENT"))
        self.expect("SYM", ":")
        ty = self.parse_type()
        self.expect("SYM", ";")
        for tok in names:
            if self.scope.lookup(tok.value) is not None and tok.value != "this":
                raise ParseError(f"{tok.value} declared twice", tok.line, tok.col)
            self.scope.declare(VarRef(kind, tok.value, ty))
        if kind == INSTANCE:
            self.flavor_hints.add(OO)

    def parse_proc_decl(self, is_method: bool) -> Decl:
        loc = self.loc()
        name = self.expect("IDENT").value
        self.expect("SYM", "(")
        formals: list[VarRef] = []
        if not self.at("SYM", ")"):
            while True:
                tok = self.expect("IDENT") if self.at("IDENT") else self.expect("KW", "this")
                self.expect("SYM", ":")
                ty = self.parse_basic()
                formals.append(VarRef(NORMAL, tok.value, ty))
                if not self.accept("SYM", ","):
                    break
        self.expect("SYM", ")")
        self.expect("SYM", "{")
        self.scope.push()
        for r in formals:
            self.scope.declare(r)
        body = self.parse_stmt_seq()
        self.scope.pop()
        self.expect("SYM", "}")
        self.flavor_hints.add(OO if is_method else RECURSIVE)
        return Decl(name, tuple(formals), body, loc=loc)

    def parse_prelude(self) -> list[Decl]:
        decls: list[Decl] = []
        while True:
            if self.accept("KW", "var"):
                self.parse_var_decl(NORMAL)
            elif self.accept("KW", "ivar"):
                self.parse_var_decl(INSTANCE)
            elif self.accept("KW", "method"):
                decls.append(self.parse_proc_decl(is_method=True))
            elif self.accept("KW", "proc"):
                decls.append(self.parse_proc_decl(is_method=False))
            else:
                return decls

    def parse_prelude_vars_only(self) -> None:
        while True:
            if self.accept("KW", "var"):
                self.parse_var_decl(NORMAL)
            elif self.accept("KW", "ivar"):
                self.parse_var_decl(INSTANCE)
            else:
                return

    def parse_program(self, flavor: Optional[str] = None) -> Program:
        decls = self.parse_prelude()
        main = self.parse_stmt_seq()
        self.expect("EOF")
        if flavor is None:
            if OO in self.flavor_hints and RECURSIVE in self.flavor_hints:
                raise ParseError("methods and procedures cannot coexist", 1, 1)
            flavor = OO if OO in self.flavor_hints else (
                RECURSIVE if RECURSIVE in self.flavor_hints else KERNEL)
        return Program(tuple(decls), main, flavor)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def parse_program(text: str, flavor: Optional[str] = None) -> Program:
    return Parser(text).parse_program(flavor)


def parse_statement(text: str, table: dict[str, VarRef]) -> Stmt:
    p = Parser(text, table)
    s = p.parse_stmt_seq()
    p.expect("EOF")
    return s


def parse_assertion(text: str, table: dict[str, VarRef]) -> Expr:
    p = Parser(text, table, allow_navigation=True)
    p.parse_prelude_vars_only()
    e = p.parse_expr()
    p.expect("EOF")
    return normalize_bound(e)


def parse_formula(text: str, table: dict[str, VarRef]):
    """Parse `{p} S {q}` (optionally preceded by var/ivar declarations).

    Returns a proofs.CorrectnessFormula.
    """
    p = Parser(text, table, allow_navigation=True)
    p.parse_prelude_vars_only()
    f = _parse_formula_body(p)
    p.expect("EOF")
    return f


def _parse_formula_body(p: Parser):
    from .proofs import CorrectnessFormula

    p.expect("SYM", "{")
    p.allow_navigation = True
    pre = p.parse_expr()
    p.expect("SYM", "}")
    p.allow_navigation = False
    stmt = p.parse_stmt_seq()
    p.allow_navigation = True
    p.expect("SYM", "{")
    post = p.parse_expr()
    p.expect("SYM", "}")
    return CorrectnessFormula(normalize_bound(pre), stmt, normalize_bound(post))


def parse_proof(text: str, table: dict[str, VarRef]):
    """Parse a parenthesized derivation tree; returns proofs.Derivation."""
    p = Parser(text, table, allow_navigation=True)
    p.parse_prelude_vars_only()
    d = _parse_deriv(p)
    p.expect("EOF")
    return d


def _parse_rule_name(p: Parser) -> str:
    tok = p.next()
    if tok.type not in ("IDENT", "KW"):
        raise ParseError("expected a rule name", tok.line, tok.col)
    name = tok.value
    end_col = tok.col + len(tok.value)
    # rule names like REC-I lex as adjacent tokens joined by minus signs
    while p.at("SYM", "-") and p.peek().col == end_col:
        p.next()
        part = p.next()
        if part.type not in ("IDENT", "INT", "KW"):
            raise ParseError("bad rule name", part.line, part.col)
        name += "-" + part.value
        end_col = part.col + len(part.value)
    return name.upper()


def _parse_deriv(p: Parser):
    from .proofs import Derivation

    p.expect("SYM", "(")
    if p.accept("IDENT", "assume"):
        idx = int(p.expect("INT").value)
        p.expect("SYM", ")")
        return Derivation("ASSUME", None, (), index=idx)
    kw = p.next()
    if not (kw.type == "IDENT" and kw.value == "rule"):
        raise ParseError("expected 'rule' or 'assume'", kw.line, kw.col)
    name = _parse_rule_name(p)
    p.expect("SYM", "(")
    head = p.expect("IDENT")
    if head.value != "conclusion":
        raise ParseError("expected (conclusion ...)", head.line, head.col)
    conclusion = _parse_formula_body(p)
    p.expect("SYM", ")")
    assumptions = ()
    subst = None
    while p.at("SYM", "(") and p.peek(1).type == "IDENT" and p.peek(1).value in ("assumptions", "subst"):
        p.next()
        what = p.next().value
        if what == "assumptions":
            forms = [_parse_formula_body(p)]
            while p.accept("SYM", ";"):
                forms.append(_parse_formula_body(p))
            assumptions = tuple(forms)
            p.expect("SYM", ")")
        else:
            pairs = []
            while p.at("SYM", "("):
                p.next()
                tok = p.expect("IDENT")
                ref = p.scope.lookup(tok.value)
                if ref is None:
                    raise ParseError(f"undeclared variable {tok.value}", tok.line, tok.col)
                p.expect("SYM", ":=")
                p.allow_navigation = True
                e = p.parse_expr()
                pairs.append((ref, e))
                p.expect("SYM", ")")
            subst = tuple(pairs)
            p.expect("SYM", ")")
    premises = []
    while p.at("SYM", "("):
        premises.append(_parse_deriv(p))
    p.expect("SYM", ")")
    return Derivation(name, conclusion, tuple(premises), assumptions=assumptions, subst=subst)


# ---------------------------------------------------------------------------
# State literals
# ---------------------------------------------------------------------------


def _parse_value_literal(p: Parser) -> st.Value:
    if p.at("INT"):
        return st.IntV(int(p.next().value))
    if p.accept("SYM", "-"):
        return st.IntV(-int(p.expect("INT").value))
    if p.accept("KW", "true"):
        return st.TRUE_V
    if p.accept("KW", "false"):
        return st.FALSE_V
    if p.accept("KW", "null"):
        return st.NULL_V
    tok = p.expect("IDENT")
    ref = _oid_of(tok)
    if ref is None:
        raise ParseError(f"expected a value literal, found {tok.value!r}", tok.line, tok.col)
    return st.ObjV(ref)


def _oid_of(tok: Token) -> Optional[st.Oid]:
    v = tok.value
    if len(v) > 1 and v[0] == "o" and v[1:].isdigit():
        return st.Oid(int(v[1:]))
    return None


def parse_state(text: str, table: dict[str, VarRef]) -> st.State:
    """Parse `state { this=o1; x=5; o1.next=o2; a[1,2]=7; }`."""
    p = Parser(text, table)
    p.expect("KW", "state")
    p.expect("SYM", "{")
    sigma = st.State.make()
    while not p.at("SYM", "}"):
        sigma = _parse_state_entry(p, sigma)
        p.expect("SYM", ";")
    p.expect("SYM", "}")
    p.expect("EOF")
    return sigma


def _parse_state_entry(p: Parser, sigma: st.State) -> st.State:
    owner: Optional[st.ObjectRef] = None
    if p.at("KW", "null") and p.at("SYM", ".", ahead=1):
        p.next()
        p.next()
        owner = st.NULL
    elif p.at("IDENT") and p.at("SYM", ".", ahead=1):
        tok = p.peek()
        oid = _oid_of(tok)
        if oid is not None:
            p.next()
            p.next()
            owner = oid
    tok = p.expect("IDENT") if p.at("IDENT") else p.expect("KW", "this")
    ref = p.scope.lookup(tok.value)
    if ref is None:
        raise ParseError(f"undeclared variable {tok.value}", tok.line, tok.col)
    indices: Optional[tuple[st.Value, ...]] = None
    if p.accept("SYM", "["):
        idx = [_parse_value_literal(p)]
        while p.accept("SYM", ","):
            idx.append(_parse_value_literal(p))
        p.expect("SYM", "]")
        indices = tuple(idx)
    p.expect("SYM", "=")
    value = _parse_value_literal(p)
    if owner is None and ref.kind == INSTANCE:
        raise ParseError(f"instance variable {ref.name} needs an owner (oN.{ref.name})",
                         tok.line, tok.col)
    if owner is not None and ref.kind != INSTANCE:
        raise ParseError(f"{ref.name} is not an instance variable", tok.line, tok.col)
    if indices is None:
        if owner is None:
            return sigma.with_normal(ref, value)
        return sigma.with_local(owner, ref, value)
    if not isinstance(ref.ty, Higher):
        raise ParseError(f"{ref.name} is not an array", tok.line, tok.col)
    if owner is None:
        arr = sigma.normal(ref)
        return sigma.with_normal(ref, arr.set(indices, value))
    arr = sigma.local(owner, ref)
    return sigma.with_local(owner, ref, arr.set(indices, value))


# ---------------------------------------------------------------------------
# Bound-variable normalization
# ---------------------------------------------------------------------------


def normalize_bound(p: Expr) -> Expr:
    """Rename bound variables so they are distinct from all other names."""
    taken = set(syn.all_var_names(p))
    free = syn.free_vars(p)

    def fresh(name: str) -> str:
        i = 1
        while f"{name}_{i}" in taken:
            i += 1
        taken.add(f"{name}_{i}")
        return f"{name}_{i}"

    def walk(e: Expr, seen_bound: frozenset[str]) -> Expr:
        if isinstance(e, Quant):
            name = e.var.name
            body = e.body
            if name in free or name in seen_bound:
                new = VarRef(NORMAL, fresh(name), e.var.ty)
                from .assertions import rename
                body = rename(body, (e.var,), (new,))
                var = new
            else:
                var = e.var
            return Quant(e.kind, var, walk(body, seen_bound | {var.name}), loc=e.loc)
        return _map_children(e, lambda c: walk(c, seen_bound))

    return walk(p, frozenset())


def _map_children(e: Expr, f) -> Expr:
    if isinstance(e, (IntLit, BoolLit, NullLit, Var)):
        return e
    if isinstance(e, Sub):
        return Sub(e.ref, tuple(f(i) for i in e.indices), loc=e.loc)
    if isinstance(e, Nav):
        idx = None if e.indices is None else tuple(f(i) for i in e.indices)
        return Nav(f(e.base), e.ref, idx, loc=e.loc)
    if isinstance(e, Cond):
        return Cond(f(e.guard), f(e.then), f(e.orelse), loc=e.loc)
    if isinstance(e, BinOp):
        return BinOp(e.op, f(e.left), f(e.right), loc=e.loc)
    if isinstance(e, UnOp):
        return UnOp(e.op, f(e.operand), loc=e.loc)
    if isinstance(e, Quant):
        return Quant(e.kind, e.var, f(e.body), loc=e.loc)
    raise RenderError(f"unknown expression {e!r}")


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_PREC = {"->": 1, "or": 2, "and": 3, "not": 4,
         "=": 5, "/=": 5, "<": 5, "<=": 5,
         "+": 6, "-": 6, "*": 7}


def render_expr(e: Expr, ctx: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, Var):
        return e.ref.name
    if isinstance(e, Sub):
        return e.ref.name + "[" + ", ".join(render_expr(i) for i in e.indices) + "]"
    if isinstance(e, Nav):
        base = render_expr(e.base, 9)
        out = f"{base}.{e.ref.name}"
        if e.indices is not None:
            out += "[" + ", ".join(render_expr(i) for i in e.indices) + "]"
        return out
    if isinstance(e, Cond):
        return (f"({render_expr(e.guard)} ? {render_expr(e.then)}"
                f" : {render_expr(e.orelse)})")
    if isinstance(e, UnOp):
        s = f"not {render_expr(e.operand, _PREC['not'])}"
        return f"({s})" if ctx > _PREC["not"] else s
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        if e.op == "->":
            s = f"{render_expr(e.left, p + 1)} -> {render_expr(e.right, p)}"
        elif e.op in ("=", "/=", "<", "<="):
            s = f"{render_expr(e.left, p + 1)} {e.op} {render_expr(e.right, p + 1)}"
        else:
            s = f"{render_expr(e.left, p)} {e.op} {render_expr(e.right, p + 1)}"
        return f"({s})" if ctx > p else s
    if isinstance(e, Quant):
        ty = _render_type(e.var.ty)
        s = f"{e.kind} {e.var.name}: {ty}: {render_expr(e.body, 1)}"
        return f"({s})" if ctx > 1 else s
    raise RenderError(f"cannot render {e!r}")


def _render_type(ty: Ty) -> str:
    if isinstance(ty, Basic):
        return ty.name
    return " * ".join(a.name for a in ty.args) + " -> " + ty.value.name


def render_stmt(s: Stmt) -> str:
    if isinstance(s, Skip):
        return "skip"
    if isinstance(s, syn.Empty):
        raise RenderError("cannot render the empty statement")
    if isinstance(s, syn.LiteralRestore):
        raise RenderError("cannot render an internal value-restore statement")
    if isinstance(s, Assign):
        return f"{render_expr(s.target)} := {render_expr(s.value)}"
    if isinstance(s, ParAssign):
        lhs = ", ".join(r.name for r in s.targets)
        rhs = ", ".join(render_expr(v) for v in s.values)
        return f"{lhs} := {rhs}"
    if isinstance(s, Seq):
        return f"{render_stmt(s.first)}; {render_stmt(s.rest)}"
    if isinstance(s, IfElse):
        if s.orelse == Skip():
            return f"if {render_expr(s.guard, 2)} -> {render_stmt(s.then)} fi'"
        return (f"if {render_expr(s.guard, 2)} then {render_stmt(s.then)}"
                f" else {render_stmt(s.orelse)} fi")
    if isinstance(s, FailIf):
        return f"if {render_expr(s.guard, 2)} -> {render_stmt(s.body)} fi"
    if isinstance(s, While):
        return f"while {render_expr(s.guard, 2)} do {render_stmt(s.body)} od"
    if isinstance(s, Block):
        return f"begin local {render_stmt(s.locals)}; {render_stmt(s.body)} end"
    if isinstance(s, MethodCall):
        args = ", ".join(render_expr(a) for a in s.args)
        return f"{render_expr(s.callee, 9)}.{s.name}({args})"
    if isinstance(s, ProcCall):
        args = ", ".join(render_expr(a) for a in s.args)
        return f"{s.name}({args})"
    raise RenderError(f"cannot render {s!r}")


def _collect_globals(program: Program) -> tuple[list[VarRef], list[VarRef]]:
    """Free normal refs and all instance refs, for var/ivar prelude lines."""
    normals: dict[str, VarRef] = {}
    ivars: dict[str, VarRef] = {}

    def visit_expr(e: Expr, bound: frozenset[str]) -> None:
        for node in syn.walk_expr(e):
            if isinstance(node, (Var, Sub)):
                r = node.ref
                if r.kind == INSTANCE:
                    ivars.setdefault(r.name, r)
                elif r.name not in bound and r.name != "this":
                    normals.setdefault(r.name, r)
            elif isinstance(node, Nav):
                ivars.setdefault(node.ref.name, node.ref)

    def visit(sm: Stmt, bound: frozenset[str]) -> None:
        if isinstance(sm, Block):
            for v in sm.locals.values:
                visit_expr(v, bound)
            visit(sm.body, bound | {r.name for r in sm.locals.targets})
            return
        if isinstance(sm, ParAssign):
            for r in sm.targets:
                if r.kind == INSTANCE:
                    ivars.setdefault(r.name, r)
                elif r.name not in bound and r.name != "this":
                    normals.setdefault(r.name, r)
        if isinstance(sm, Assign):
            r = sm.target.ref
            if r.kind == INSTANCE:
                ivars.setdefault(r.name, r)
            elif r.name not in bound and r.name != "this":
                normals.setdefault(r.name, r)
        for e in syn.stmt_exprs(sm):
            visit_expr(e, bound)
        for c in syn.sub_stmts(sm):
            visit(c, bound)

    for d in program.decls:
        visit(d.body, frozenset(r.name for r in d.formals))
    visit(program.main, frozenset())
    return (sorted(normals.values(), key=lambda r: r.name),
            sorted(ivars.values(), key=lambda r: r.name))


def render_program(program: Program) -> str:
    lines: list[str] = []
    normals, ivars = _collect_globals(program)
    for r in normals:
        lines.append(f"var {r.name} : {_render_type(r.ty)};")
    for r in ivars:
        lines.append(f"ivar {r.name} : {_render_type(r.ty)};")
    kw = "method" if program.flavor == OO else "proc"
    for d in program.decls:
        params = ", ".join(f"{r.name}: {_render_type(r.ty)}" for r in d.formals)
        lines.append(f"{kw} {d.name}({params}) {{ {render_stmt(d.body)} }}")
    lines.append(render_stmt(program.main))
    return "\n".join(lines) + "\n"


def render_formula(f) -> str:
    return f"{{{render_expr(f.pre)}}} {render_stmt(f.stmt)} {{{render_expr(f.post)}}}"


def render_proof(d, indent: int = 0) -> str:
    pad = "  " * indent
    if d.rule == "ASSUME":
        return f"{pad}(assume {d.index})"
    parts = [f"{pad}(rule {d.rule}", f"{pad}  (conclusion {render_formula(d.conclusion)})"]
    if d.assumptions:
        forms = " ;\n    ".join(pad + render_formula(a) for a in d.assumptions)
        parts.append(f"{pad}  (assumptions {forms})")
    if d.subst:
        pairs = " ".join(f"({r.name} := {render_expr(e)})" for r, e in d.subst)
        parts.append(f"{pad}  (subst {pairs})")
    for prem in d.premises:
        parts.append(render_proof(prem, indent + 1))
    return "\n".join(parts) + ")"


def render(phrase) -> str:
    """Render any phrase back to concrete syntax."""
    if isinstance(phrase, Program):
        return render_program(phrase)
    from .proofs import CorrectnessFormula, Derivation

    if isinstance(phrase, CorrectnessFormula):
        return render_formula(phrase)
    if isinstance(phrase, Derivation):
        return render_proof(phrase)
    if isinstance(phrase, st.State):
        return st.render_state(phrase)
    if isinstance(phrase, (Skip, Assign, ParAssign, Seq, IfElse, FailIf, While,
                           Block, MethodCall, ProcCall, syn.LiteralRestore, syn.Empty)):
        return render_stmt(phrase)
    return render_expr(phrase)
