"""Core abstract syntax for choreographies and their expressions.

All term and expression nodes are frozen dataclasses: the semantics keys
explored configurations on (valuation, term) pairs, so structural equality
and hashability are load-bearing. A call node is deliberately distinct from
the body it names — unfolding is an observable step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

Value = Union[int, bool, float]


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "neg"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / mod min max = != < <= > >= and or
    left: "Expr"
    right: "Expr"


Expr = Union[Lit, Var, Unary, Binary]

#: operators whose result is boolean
BOOL_OPS = {"=", "!=", "<", "<=", ">", ">=", "and", "or"}
#: operators whose result is numeric
ARITH_OPS = {"+", "-", "*", "/", "mod", "min", "max"}


# ---------------------------------------------------------------------------
# updates and choreography terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    """One primed assignment x' = E inside an update list."""

    var: str
    expr: Expr


@dataclass(frozen=True)
class Branch:
    """One weighted alternative of an interaction.

    ``weight`` must evaluate over the constant environment alone (rates for
    continuous programs, probabilities for discrete ones). ``label`` is the
    per-branch wire name; interactions are annotated as a whole and branches
    derive ``<annotation>_<j>`` labels during projection, but the parsed
    label (if the source gave one) is kept for error messages.
    """

    weight: Expr
    update: tuple[Assign, ...]
    cont: "ChorTerm"
    label: str | None = None


@dataclass(frozen=True)
class Interaction:
    initiator: str
    receivers: tuple[str, ...]
    branches: tuple[Branch, ...]
    annotation: str | None = None

    @property
    def participants(self) -> tuple[str, ...]:
        return (self.initiator,) + self.receivers


@dataclass(frozen=True)
class Conditional:
    guard: Expr
    role: str  # the deciding role
    then_term: "ChorTerm"
    else_term: "ChorTerm"


@dataclass(frozen=True)
class CallTerm:
    name: str


@dataclass(frozen=True)
class Inact:
    pass


ChorTerm = Union[Interaction, Conditional, CallTerm, Inact]


# ---------------------------------------------------------------------------
# programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarDecl:
    """An integer-range or boolean state variable owned by one role."""

    name: str
    owner: str
    init: Value
    lo: int = 0
    hi: int = 0
    is_bool: bool = False

    def contains(self, v: Value) -> bool:
        if self.is_bool:
            return isinstance(v, bool)
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi


@dataclass
class ChorProgram:
    kind: str  # "ctmc" | "dtmc"
    roles: tuple[str, ...]
    constants: dict[str, float] = field(default_factory=dict)
    var_decls: tuple[VarDecl, ...] = ()
    defs: dict[str, ChorTerm] = field(default_factory=dict)
    main: str = ""

    def var(self, name: str) -> VarDecl:
        for d in self.var_decls:
            if d.name == name:
                return d
        raise KeyError(name)

    def owner(self, name: str) -> str:
        return self.var(name).owner

    def initial_valuation(self) -> dict[str, Value]:
        return {d.name: d.init for d in self.var_decls}


def subterms(term: ChorTerm):
    """Yield term and every node below it, preorder, branches in order."""
    yield term
    if isinstance(term, Interaction):
        for b in term.branches:
            yield from subterms(b.cont)
    elif isinstance(term, Conditional):
        yield from subterms(term.then_term)
        yield from subterms(term.else_term)
