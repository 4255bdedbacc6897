"""Operational semantics of choreographies: expression evaluation, update
application, and exhaustive chain construction.

A chain state is a pair of a term and a valuation. Unfolding a definition
and deciding a conditional are weight-1 moves of their own, mirroring the
state-counter hops the compiled network makes for them; the equivalence
checker later contracts both away. Updates apply left to right, each
assignment seeing the effect of the previous one; the network side applies
updates the same way, which is what makes the comparison meaningful.
"""

from __future__ import annotations

import math
from typing import Callable

from .chain import MarkovChain
from .errors import EvalError, RangeViolation, StateBudgetExceeded, TypeMismatch
from .syntax import (
    Assign,
    Binary,
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

DEFAULT_MAX_STATES = 100_000


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

def _eval(e: Expr, env: dict, real_div: bool):
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"unbound name {e.name}") from None
    if isinstance(e, Unary):
        v = _eval(e.operand, env, real_div)
        if e.op == "not":
            if not isinstance(v, bool):
                raise TypeMismatch("'not' applied to non-bool value")
            return not v
        return -v
    left = _eval(e.left, env, real_div)
    right = _eval(e.right, env, real_div)
    op = e.op
    if op in ("and", "or"):
        if not (isinstance(left, bool) and isinstance(right, bool)):
            raise TypeMismatch(f"'{op}' applied to non-bool value")
        return (left and right) if op == "and" else (left or right)
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if op in ("<", "<=", ">", ">="):
        if isinstance(left, bool) or isinstance(right, bool):
            raise TypeMismatch(f"'{op}' applied to bool value")
        return {"<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right}[op]
    if isinstance(left, bool) or isinstance(right, bool):
        raise TypeMismatch(f"'{op}' applied to bool value")
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if right == 0:
            raise EvalError("division by zero")
        return left / right if real_div else math.floor(left / right)
    if op == "mod":
        if right == 0:
            raise EvalError("mod by zero")
        return left % right
    if op == "min":
        return min(left, right)
    if op == "max":
        return max(left, right)
    raise EvalError(f"unknown operator {op}")


def eval_expr(e: Expr, env: dict):
    """State-expression evaluation; division on integers rounds down."""
    return _eval(e, env, real_div=False)


def eval_weight(e: Expr, constants: dict) -> float:
    """Weight evaluation over constants only; division is exact."""
    v = _eval(e, constants, real_div=True)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeMismatch("weight expression is not numeric")
    return float(v)


# ---------------------------------------------------------------------------
# updates
# ---------------------------------------------------------------------------

def apply_assignments(
    update: tuple[Assign, ...],
    valuation: dict,
    decl_of: Callable[[str], VarDecl],
    constants: dict,
) -> dict:
    """Apply assignments left to right, returning a fresh valuation.

    Later assignments see earlier ones. Every written value is checked
    against the variable's declared range.
    """
    out = dict(valuation)
    env = dict(constants)
    env.update(out)
    for a in update:
        v = eval_expr(a.expr, env)
        decl = decl_of(a.var)
        if decl.is_bool:
            if not isinstance(v, bool):
                raise TypeMismatch(f"assigning non-bool value to {a.var}")
        else:
            if isinstance(v, bool):
                raise TypeMismatch(f"assigning bool value to {a.var}")
            if isinstance(v, float):
                if not v.is_integer():
                    raise TypeMismatch(f"assigning non-integer {v} to {a.var}")
                v = int(v)
            if not decl.contains(v):
                raise RangeViolation(a.var, v, decl.lo, decl.hi, str(a))
        out[a.var] = v
        env[a.var] = v
    return out


def apply_update(update: tuple[Assign, ...], valuation: dict, program: ChorProgram) -> dict:
    return apply_assignments(update, valuation, program.var, program.constants)


# ---------------------------------------------------------------------------
# small-step behaviour
# ---------------------------------------------------------------------------

def step(term: ChorTerm, valuation: dict, program: ChorProgram) -> list[tuple[float, dict, ChorTerm]]:
    """Outgoing moves of a configuration: (weight, valuation, continuation).

    Unfolding a named definition and deciding a conditional are both explicit
    weight-1 moves that leave the valuation untouched, so (S, X) and
    (S, body-of-X) are distinct states of the chain. Zero-weight interaction
    branches are dropped.
    """
    if isinstance(term, Inact):
        return []
    if isinstance(term, CallTerm):
        return [(1.0, valuation, program.defs[term.name])]
    if isinstance(term, Conditional):
        env = dict(program.constants)
        env.update(valuation)
        g = eval_expr(term.guard, env)
        if not isinstance(g, bool):
            raise TypeMismatch("conditional guard is not boolean")
        return [(1.0, valuation, term.then_term if g else term.else_term)]
    if not isinstance(term, Interaction):
        raise EvalError(f"cannot step term {type(term).__name__}")
    moves = []
    for b in term.branches:
        w = eval_weight(b.weight, program.constants)
        if w == 0.0:
            continue
        moves.append((w, apply_update(b.update, valuation, program), b.cont))
    return moves


# ---------------------------------------------------------------------------
# chain construction
# ---------------------------------------------------------------------------

def initial_valuation(program: ChorProgram, overrides: dict | None = None) -> dict:
    val = program.initial_valuation()
    for name, v in (overrides or {}).items():
        decl = program.var(name)
        if decl.is_bool:
            if not isinstance(v, bool):
                raise TypeMismatch(f"initial override for {name} is not bool")
        elif not decl.contains(v):
            raise RangeViolation(name, v, decl.lo, decl.hi, "initial override")
        val[name] = v
    return val


def build_chain(
    program: ChorProgram,
    *,
    max_states: int = DEFAULT_MAX_STATES,
    init_overrides: dict | None = None,
) -> MarkovChain:
    """Breadth-first exploration of the reachable behaviour.

    States are (term, valuation) pairs keyed structurally, so revisiting a
    configuration folds back into the chain. Exploration begins at the body
    of the entry definition (the entry call itself is unfolded for free).
    In discrete mode states with no moves become absorbing via a
    probability-1 self-loop.
    """
    var_names = tuple(d.name for d in program.var_decls)
    start_val = initial_valuation(program, init_overrides)
    start_term = program.defs[program.main]

    def key(t: ChorTerm, v: dict):
        return (t, tuple(v[n] for n in var_names))

    index: dict = {}
    states: list[tuple] = []
    terms: list[ChorTerm] = []
    valuations: list[dict] = []
    edges: list[dict[int, float]] = []

    def intern(t: ChorTerm, v: dict) -> int:
        k = key(t, v)
        sid = index.get(k)
        if sid is None:
            if len(states) >= max_states:
                raise StateBudgetExceeded(max_states)
            sid = len(states)
            index[k] = sid
            states.append(k[1])
            terms.append(t)
            valuations.append(v)
            edges.append({})
        return sid

    intern(start_term, start_val)
    frontier = 0
    while frontier < len(states):
        sid = frontier
        frontier += 1
        for w, new_val, cont in step(terms[sid], valuations[sid], program):
            dst = intern(cont, new_val)
            edges[sid][dst] = edges[sid].get(dst, 0.0) + w

    if program.kind == "dtmc":
        for sid, succ in enumerate(edges):
            if not succ:
                succ[sid] = 1.0

    return MarkovChain(program.kind, var_names, states, 0, edges)
