"""Concrete syntax: lexer, recursive-descent parser, and pretty-printer.

The surface language extends the core with indexed role/variable families
(``client[1..N]``), ``foreach`` update clauses, and ``allsynch`` blocks; the
passes in :mod:`chorprism.sugar` lower these to the core. Indexed references
are carried textually (``"q[i+1]"``) inside the ordinary name slots until
expansion rewrites them to concrete names like ``q2``.

Grammar sketch (comments are ``// …``)::

    program   := ("ctmc"|"dtmc") ";" decl*
    decl      := "const" NAME "=" number ";"
               | "role" rolespec ("," rolespec)* ";"
               | "var" varspec "@" roleref ":" vtype "init" value ";"
               | "def" NAME "=" term ";"
               | "main" NAME ";"
    rolespec  := NAME ("[" bound ".." bound "]")?
    vtype     := "[" bound ".." bound "]" | "bool"
    term      := roleref "->" [roleref ("," roleref)*] ":" annot? "{" branch ("|" branch)* "}"
               | "if" expr "@" roleref "then" "{" term "}" "else" "{" term "}"
               | "allsynch" "{" entry ("|" entry)* "}" ";" term
               | "end" | NAME
    branch    := ("[" NAME "]")? "rate" expr ":" update ";" term
    entry     := roleref ":" expr "->" "rate" expr ":" update
    update    := "{" (uitem ("," uitem)*)? "}"
    uitem     := "foreach" "(" NAME cmpop (NAME|INT) ")" assign | assign
    assign    := varref "'" "=" expr

Expressions use keywords ``and``/``or``/``not`` (the PRISM symbols would
collide with the branch separator) and function-style ``mod``/``min``/``max``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError, WellFormednessError
from .syntax import (
    Assign,
    Binary,
    Branch,
    CallTerm,
    ChorProgram,
    ChorTerm,
    Conditional,
    Expr,
    Inact,
    Interaction,
    Lit,
    Unary,
    Var,
    VarDecl,
)

KEYWORDS = {
    "ctmc", "dtmc", "const", "role", "var", "init", "def", "main",
    "if", "then", "else", "end", "allsynch", "foreach", "rate",
    "and", "or", "not", "true", "false", "bool",
}

PUNCT = [
    "->", "..", "!=", "<=", ">=",
    ";", ",", ":", "|", "{", "}", "[", "]", "(", ")", "@", "'",
    "=", "<", ">", "+", "-", "*", "/",
]

_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass(frozen=True)
class Token:
    kind: str  # keyword text, punct text, or "name"/"number"/"eof"
    value: object
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, bol = 0, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            bol = i
            continue
        if c in " \t\r":
            i += 1
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        col = i - bol + 1
        m = _NUMBER.match(text, i)
        if m:
            raw = m.group(0)
            value = float(raw) if ("." in raw or "e" in raw or "E" in raw) else int(raw)
            toks.append(Token("number", value, line, col))
            i = m.end()
            continue
        m = _NAME.match(text, i)
        if m:
            word = m.group(0)
            kind = word if word in KEYWORDS else "name"
            toks.append(Token(kind, word, line, col))
            i = m.end()
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                toks.append(Token(p, p, line, col))
                i += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", None, line, (n - bol) + 1))
    return toks


# ---------------------------------------------------------------------------
# surface-only constructs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForeachAssign:
    """``foreach (k op bound) base[k]' = expr`` inside an update list."""
    binder: str
    op: str  # = != < <= > >=
    bound: object  # int literal, constant name, or enclosing family index
    var: str  # textual indexed reference, e.g. "set[k]"
    expr: Expr

    def __str__(self):
        return f"foreach ({self.binder} {self.op} {self.bound}) {self.var}'={self.expr}"


@dataclass(frozen=True)
class AllSynchEntry:
    role: str
    guard: Expr
    weight: Expr
    update: tuple[Assign, ...]


@dataclass(frozen=True)
class AllSynch:
    """Synchronised guarded choice across roles; lowered to nested
    conditionals by :func:`chorprism.sugar.desugar_allsynch`."""
    entries: tuple[AllSynchEntry, ...]
    cont: ChorTerm


@dataclass(frozen=True)
class RoleFamily:
    base: str
    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class VarFamily:
    base: str
    lo: int
    hi: int
    owner_base: str
    vlo: int
    vhi: int
    is_bool: bool
    init: object


@dataclass
class SurfaceProgram:
    kind: str
    constants: dict[str, object] = field(default_factory=dict)
    roles: list[str] = field(default_factory=list)
    role_families: list[RoleFamily] = field(default_factory=list)
    var_decls: list[VarDecl] = field(default_factory=list)
    var_families: list[VarFamily] = field(default_factory=list)
    defs: dict[str, ChorTerm] = field(default_factory=dict)
    main: str = ""


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def accept(self, kind: str) -> Token | None:
        if self.peek().kind == kind:
            return self.next()
        return None

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {self._show(t)}", t.line, t.col)
        return self.next()

    @staticmethod
    def _show(t: Token) -> str:
        if t.kind == "eof":
            return "end of input"
        return repr(t.value)

    def fail(self, what: str):
        t = self.peek()
        raise ParseError(f"expected {what}, found {self._show(t)}", t.line, t.col)

    # ---- program structure ------------------------------------------------

    def program(self) -> SurfaceProgram:
        t = self.peek()
        if t.kind not in ("ctmc", "dtmc"):
            self.fail("'ctmc' or 'dtmc'")
        kind = self.next().kind
        self.expect(";")
        prog = SurfaceProgram(kind)
        while self.peek().kind != "eof":
            k = self.peek().kind
            if k == "const":
                self.const_decl(prog)
            elif k == "role":
                self.role_decl(prog)
            elif k == "var":
                self.var_decl(prog)
            elif k == "def":
                self.def_decl(prog)
            elif k == "main":
                self.next()
                prog.main = self.expect("name").value
                self.expect(";")
            else:
                self.fail("a declaration (const/role/var/def/main)")
        if not prog.main:
            t = self.peek()
            raise ParseError("missing 'main' declaration", t.line, t.col)
        return prog

    def const_decl(self, prog: SurfaceProgram):
        self.expect("const")
        name = self.expect("name").value
        self.expect("=")
        v = self.signed_number()
        self.expect(";")
        if name in prog.constants:
            raise ParseError(f"constant {name} declared twice",
                             self.peek().line, self.peek().col)
        prog.constants[name] = v

    def signed_number(self):
        neg = self.accept("-") is not None
        t = self.expect("number")
        v = -t.value if neg else t.value
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        return v

    def bound(self, constants) -> int:
        """Range endpoint: integer literal (possibly negated) or constant."""
        if self.peek().kind == "name":
            t = self.next()
            if t.value not in constants:
                raise ParseError(f"unknown constant {t.value} in range", t.line, t.col)
            v = constants[t.value]
        else:
            t = self.peek()
            v = self.signed_number()
        if not isinstance(v, int):
            raise ParseError(f"range endpoint {v} is not an integer", t.line, t.col)
        return v

    def role_decl(self, prog: SurfaceProgram):
        self.expect("role")
        while True:
            name = self.expect("name").value
            if self.accept("["):
                lo = self.bound(prog.constants)
                self.expect("..")
                hi = self.bound(prog.constants)
                self.expect("]")
                prog.role_families.append(RoleFamily(name, lo, hi))
            else:
                prog.roles.append(name)
            if not self.accept(","):
                break
        self.expect(";")

    def var_decl(self, prog: SurfaceProgram):
        self.expect("var")
        name = self.expect("name").value
        fam_range = None
        if self.accept("["):
            lo = self.bound(prog.constants)
            self.expect("..")
            hi = self.bound(prog.constants)
            self.expect("]")
            fam_range = (lo, hi)
        self.expect("@")
        owner, owner_idx = self.name_with_index()
        self.expect(":")
        if self.accept("bool"):
            is_bool, vlo, vhi = True, 0, 0
        else:
            self.expect("[")
            vlo = self.bound(prog.constants)
            self.expect("..")
            vhi = self.bound(prog.constants)
            self.expect("]")
            is_bool = False
        self.expect("init")
        if self.accept("true"):
            init = True
        elif self.accept("false"):
            init = False
        else:
            init = self.bound(prog.constants)
        self.expect(";")
        if is_bool and not isinstance(init, bool):
            raise ParseError(f"bool variable {name} needs a bool initial value",
                             self.peek().line, self.peek().col)
        if fam_range is not None:
            if owner_idx is None:
                raise ParseError(
                    f"variable family {name} needs an indexed owner",
                    self.peek().line, self.peek().col)
            prog.var_families.append(
                VarFamily(name, fam_range[0], fam_range[1], owner, vlo, vhi, is_bool, init))
        else:
            ref = owner if owner_idx is None else f"{owner}[{owner_idx}]"
            prog.var_decls.append(VarDecl(name, ref, init, vlo, vhi, is_bool))

    def def_decl(self, prog: SurfaceProgram):
        self.expect("def")
        name = self.expect("name").value
        self.expect("=")
        body = self.term()
        self.expect(";")
        if name in prog.defs:
            raise ParseError(f"definition {name} declared twice",
                             self.peek().line, self.peek().col)
        prog.defs[name] = body

    # ---- names and indices --------------------------------------------------

    def name_with_index(self) -> tuple[str, str | None]:
        base = self.expect("name").value
        if self.peek().kind != "[":
            return base, None
        # Bracket here is an index only if it closes as one; branch labels and
        # ranges are parsed before this is ever reached.
        self.expect("[")
        if self.peek().kind == "number":
            idx = str(self.expect("number").value)
        else:
            idx = self.expect("name").value
            if self.peek().kind in ("+", "-"):
                sign = self.next().kind
                off = self.expect("number").value
                idx = f"{idx}{sign}{off}"
        self.expect("]")
        return base, idx

    def roleref(self) -> str:
        base, idx = self.name_with_index()
        return base if idx is None else f"{base}[{idx}]"

    # ---- terms --------------------------------------------------------------

    def term(self) -> ChorTerm:
        k = self.peek().kind
        if k == "end":
            self.next()
            return Inact()
        if k == "if":
            return self.conditional()
        if k == "allsynch":
            return self.allsynch()
        if k == "name":
            ref = self.roleref()
            if self.peek().kind == "->":
                return self.interaction(ref)
            if "[" in ref:
                self.fail("'->' after indexed role")
            return CallTerm(ref)
        self.fail("a term")

    def interaction(self, initiator: str) -> Interaction:
        self.expect("->")
        receivers = [self.roleref()]
        while self.accept(","):
            receivers.append(self.roleref())
        self.expect(":")
        annotation = None
        if self.peek().kind == "[":
            self.next()
            annotation = self.expect("name").value
            self.expect("]")
        self.expect("{")
        branches = [self.branch()]
        while self.accept("|"):
            branches.append(self.branch())
        self.expect("}")
        if receivers == [initiator]:
            receivers = []  # degenerate self-step, e.g. client[i] -> client[i]
        return Interaction(initiator, tuple(receivers), tuple(branches), annotation)

    def branch(self) -> Branch:
        label = None
        if self.peek().kind == "[":
            self.next()
            label = self.expect("name").value
            self.expect("]")
        self.expect("rate")
        weight = self.expr()
        self.expect(":")
        update = self.update()
        self.expect(";")
        cont = self.term()
        return Branch(weight, update, cont, label)

    def update(self) -> tuple:
        self.expect("{")
        items: list = []
        if self.peek().kind != "}":
            items.append(self.update_item())
            while self.accept(","):
                items.append(self.update_item())
        self.expect("}")
        return tuple(items)

    def update_item(self):
        if self.accept("foreach"):
            self.expect("(")
            binder = self.expect("name").value
            t = self.peek()
            if t.kind not in ("=", "!=", "<", "<=", ">", ">="):
                self.fail("a comparison operator")
            op = self.next().kind
            if self.peek().kind == "number":
                bound = self.expect("number").value
            else:
                bound = self.expect("name").value
            self.expect(")")
            var = self.varref()
            self.expect("'")
            self.expect("=")
            e = self.expr()
            return ForeachAssign(binder, op, bound, var, e)
        var = self.varref()
        self.expect("'")
        self.expect("=")
        return Assign(var, self.expr())

    def varref(self) -> str:
        base, idx = self.name_with_index()
        return base if idx is None else f"{base}[{idx}]"

    def conditional(self) -> Conditional:
        self.expect("if")
        guard = self.expr()
        self.expect("@")
        role = self.roleref()
        self.expect("then")
        self.expect("{")
        then_term = self.term()
        self.expect("}")
        self.expect("else")
        self.expect("{")
        else_term = self.term()
        self.expect("}")
        return Conditional(guard, role, then_term, else_term)

    def allsynch(self) -> AllSynch:
        self.expect("allsynch")
        self.expect("{")
        entries = [self.allsynch_entry()]
        while self.accept("|"):
            entries.append(self.allsynch_entry())
        self.expect("}")
        self.expect(";")
        cont = self.term()
        return AllSynch(tuple(entries), cont)

    def allsynch_entry(self) -> AllSynchEntry:
        role = self.roleref()
        self.expect(":")
        guard = self.expr()
        self.expect("->")
        self.expect("rate")
        weight = self.expr()
        self.expect(":")
        update = self.update()
        for item in update:
            if isinstance(item, ForeachAssign):
                t = self.peek()
                raise ParseError("foreach is not allowed inside allsynch", t.line, t.col)
        return AllSynchEntry(role, guard, weight, tuple(update))

    # ---- expressions ----------------------------------------------------------

    def expr(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.accept("or"):
            e = Binary("or", e, self.and_expr())
        return e

    def and_expr(self) -> Expr:
        e = self.not_expr()
        while self.accept("and"):
            e = Binary("and", e, self.not_expr())
        return e

    def not_expr(self) -> Expr:
        if self.accept("not"):
            return Unary("not", self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self) -> Expr:
        e = self.add_expr()
        k = self.peek().kind
        if k in ("=", "!=", "<", "<=", ">", ">="):
            self.next()
            return Binary(k, e, self.add_expr())
        return e

    def add_expr(self) -> Expr:
        e = self.mul_expr()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            e = Binary(op, e, self.mul_expr())
        return e

    def mul_expr(self) -> Expr:
        e = self.unary_expr()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            e = Binary(op, e, self.unary_expr())
        return e

    def unary_expr(self) -> Expr:
        if self.accept("-"):
            return Unary("neg", self.unary_expr())
        return self.atom()

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "number":
            self.next()
            return Lit(t.value)
        if t.kind == "true":
            self.next()
            return Lit(True)
        if t.kind == "false":
            self.next()
            return Lit(False)
        if t.kind == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            if t.value in ("mod", "min", "max") and self.peek(1).kind == "(":
                self.next()
                self.next()
                left = self.expr()
                self.expect(",")
                right = self.expr()
                self.expect(")")
                return Binary(t.value, left, right)
            return Var(self.varref())
        self.fail("an expression")


def parse(text: str) -> SurfaceProgram:
    return _Parser(tokenize(text)).program()


# ---------------------------------------------------------------------------
# lowering surface programs with no sugar left into the core representation
# ---------------------------------------------------------------------------

def _check_no_surface(term: ChorTerm, where: str):
    if isinstance(term, AllSynch):
        raise WellFormednessError(f"{where}: allsynch not desugared")
    if isinstance(term, Interaction):
        for name in (term.initiator, *term.receivers):
            if "[" in name:
                raise WellFormednessError(f"{where}: unexpanded index in {name}")
        for b in term.branches:
            for item in b.update:
                if isinstance(item, ForeachAssign):
                    raise WellFormednessError(f"{where}: unexpanded foreach")
                if "[" in item.var:
                    raise WellFormednessError(f"{where}: unexpanded index in {item.var}")
            _check_no_surface(b.cont, where)
    elif isinstance(term, Conditional):
        if "[" in term.role:
            raise WellFormednessError(f"{where}: unexpanded index in {term.role}")
        _check_no_surface(term.then_term, where)
        _check_no_surface(term.else_term, where)


def to_core(prog: SurfaceProgram) -> ChorProgram:
    """Convert a fully-expanded surface program to the core representation."""
    if prog.role_families or prog.var_families:
        raise WellFormednessError("role/variable families not expanded")
    for name, body in prog.defs.items():
        _check_no_surface(body, name)
    for d in prog.var_decls:
        if "[" in d.owner:
            raise WellFormednessError(f"unexpanded index in owner of {d.name}")
    return ChorProgram(
        kind=prog.kind,
        roles=tuple(prog.roles),
        constants=dict(prog.constants),
        var_decls=tuple(prog.var_decls),
        defs=dict(prog.defs),
        main=prog.main,
    )


# ---------------------------------------------------------------------------
# pretty-printer (inverse of parse for core programs)
# ---------------------------------------------------------------------------

_PREC = {
    "or": 1, "and": 2, "not": 3,
    "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "neg": 7,
}


def render_number(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)


def expr_to_str(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, Lit):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return render_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        p = _PREC[e.op if e.op == "not" else "neg"]
        inner = expr_to_str(e.operand, p)
        s = f"not {inner}" if e.op == "not" else f"-{inner}"
        return f"({s})" if p < parent_prec else s
    if e.op in ("mod", "min", "max"):
        return f"{e.op}({expr_to_str(e.left)}, {expr_to_str(e.right)})"
    p = _PREC[e.op]
    s = f"{expr_to_str(e.left, p)} {e.op} {expr_to_str(e.right, p + 1)}"
    return f"({s})" if p < parent_prec else s


def _update_to_str(update: tuple[Assign, ...]) -> str:
    return "{" + ", ".join(f"{a.var}'={expr_to_str(a.expr)}" for a in update) + "}"


def term_to_str(term: ChorTerm, indent: int = 1) -> str:
    pad = "  " * indent
    if isinstance(term, Inact):
        return "end"
    if isinstance(term, CallTerm):
        return term.name
    if isinstance(term, Conditional):
        return (
            f"if {expr_to_str(term.guard)} @ {term.role} then {{\n"
            f"{pad}{term_to_str(term.then_term, indent + 1)}\n{pad[:-2]}}} else {{\n"
            f"{pad}{term_to_str(term.else_term, indent + 1)}\n{pad[:-2]}}}"
        )
    assert isinstance(term, Interaction)
    head = f"{term.initiator} -> "
    head += ", ".join(term.receivers) if term.receivers else term.initiator
    head += " :"
    if term.annotation:
        head += f" [{term.annotation}]"
    lines = [head + " {"]
    for j, b in enumerate(term.branches):
        lead = f"{pad}| " if j else f"{pad}  "
        lbl = f"[{b.label}] " if b.label else ""
        lines.append(
            f"{lead}{lbl}rate {expr_to_str(b.weight)} : {_update_to_str(b.update)};"
            f" {term_to_str(b.cont, indent + 1)}"
        )
    lines.append(pad[:-2] + "}")
    return "\n".join(lines)


def pretty_print(program: ChorProgram) -> str:
    out = [f"{program.kind};"]
    for name, v in program.constants.items():
        out.append(f"const {name} = {render_number(v)};")
    if program.roles:
        out.append("role " + ", ".join(program.roles) + ";")
    for d in program.var_decls:
        ty = "bool" if d.is_bool else f"[{d.lo}..{d.hi}]"
        init = ("true" if d.init else "false") if isinstance(d.init, bool) else str(d.init)
        out.append(f"var {d.name} @ {d.owner} : {ty} init {init};")
    for name, body in program.defs.items():
        out.append(f"def {name} =\n  {term_to_str(body, 2)};")
    out.append(f"main {program.main};")
    return "\n".join(out) + "\n"
