"""Static analyses over choreography programs.

Covers the size measure used by the counter allocator, head-role and
strong-connectedness checks, annotation checking, and well-formedness.
"""

from __future__ import annotations

from .errors import AnnotationError, UnguardedRecursion, WellFormednessError
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
)

WEIGHT_TOL = 1e-9


# ---------------------------------------------------------------------------
# size measure
# ---------------------------------------------------------------------------

def nodes(term: ChorTerm, kind: str) -> int:
    """Number of counter slots the projection reserves for ``term``.

    Calls and inaction take one slot. A conditional takes one slot plus its
    branches. An interaction takes one slot plus its continuations; in
    discrete mode it additionally reserves one slot per branch for the
    internal-choice intermediates, so commitment states never collide with
    continuation regions.
    """
    if isinstance(term, Interaction):
        total = 1 + sum(nodes(b.cont, kind) for b in term.branches)
        if kind == "dtmc":
            total += len(term.branches)
        return total
    if isinstance(term, Conditional):
        return 1 + nodes(term.then_term, kind) + nodes(term.else_term, kind)
    return 1  # CallTerm, Inact


# ---------------------------------------------------------------------------
# head roles and strong connectedness
# ---------------------------------------------------------------------------

def h_mods(term: ChorTerm, defs: dict[str, ChorTerm], _visiting: frozenset = frozenset()) -> frozenset:
    """Roles involved in the first action of ``term``.

    Follows definition calls; a cycle of calls with no interaction or
    conditional on it has no first action and is rejected.
    """
    if isinstance(term, Interaction):
        return frozenset(term.participants)
    if isinstance(term, Conditional):
        return frozenset((term.role,))
    if isinstance(term, CallTerm):
        if term.name in _visiting:
            raise UnguardedRecursion(
                f"definition {term.name} recurses without an intervening action"
            )
        return h_mods(defs[term.name], defs, _visiting | {term.name})
    return frozenset()  # Inact


def s_conn(program: ChorProgram) -> bool:
    """Strong connectedness: in every branch of a choice, the continuation's
    first action (if any) shares a role with the choice itself.

    Definitions are checked coinductively: a definition currently being
    checked is assumed connected when called again.
    """
    status: dict[str, bool] = {}

    def conn_def(name: str) -> bool:
        if name in status:
            return status[name]
        status[name] = True  # assumption for recursive calls
        status[name] = conn(program.defs[name])
        return status[name]

    def conn(term: ChorTerm) -> bool:
        if isinstance(term, Interaction):
            parts = frozenset(term.participants)
            for b in term.branches:
                if not conn(b.cont):
                    return False
                hm = h_mods(b.cont, program.defs)
                if hm and not (hm & parts):
                    return False
            return True
        if isinstance(term, Conditional):
            for sub in (term.then_term, term.else_term):
                if not conn(sub):
                    return False
                if term.role not in h_mods(sub, program.defs):
                    return False
            return True
        if isinstance(term, CallTerm):
            return conn_def(term.name)
        return True  # Inact

    return all(conn_def(name) for name in program.defs)


# ---------------------------------------------------------------------------
# annotations
# ---------------------------------------------------------------------------

def interaction_sites(program: ChorProgram):
    """Yield (interaction, location string) over all definitions, preorder."""

    def walk(term: ChorTerm, where: str):
        if isinstance(term, Interaction):
            yield term, where
            for j, b in enumerate(term.branches, 1):
                yield from walk(b.cont, f"{where}/branch{j}")
        elif isinstance(term, Conditional):
            yield from walk(term.then_term, f"{where}/then")
            yield from walk(term.else_term, f"{where}/else")

    for name, body in program.defs.items():
        yield from walk(body, name)


def check_annotations(program: ChorProgram) -> list[str]:
    """Return findings: unannotated interactions and duplicated annotations."""
    findings = []
    seen: dict[str, str] = {}
    for inter, where in interaction_sites(program):
        if inter.annotation is None:
            findings.append(f"missing annotation on interaction at {where}")
        elif inter.annotation in seen:
            findings.append(
                f"annotation {inter.annotation} used at both "
                f"{seen[inter.annotation]} and {where}"
            )
        else:
            seen[inter.annotation] = where
    return findings


def require_annotated(program: ChorProgram) -> None:
    problems = check_annotations(program)
    if problems:
        raise AnnotationError("; ".join(problems))


# ---------------------------------------------------------------------------
# well-formedness
# ---------------------------------------------------------------------------

def expr_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return expr_vars(e.operand)
    if isinstance(e, Binary):
        return expr_vars(e.left) | expr_vars(e.right)
    return set()


def type_of(e: Expr, var_types: dict[str, str]) -> str:
    """Infer "int", "bool" or "real"; raise WellFormednessError on misuse."""
    if isinstance(e, Lit):
        if isinstance(e.value, bool):
            return "bool"
        return "int" if isinstance(e.value, int) else "real"
    if isinstance(e, Var):
        try:
            return var_types[e.name]
        except KeyError:
            raise WellFormednessError(f"unknown name {e.name}") from None
    if isinstance(e, Unary):
        t = type_of(e.operand, var_types)
        want = "bool" if e.op == "not" else "numeric"
        if e.op == "not" and t != "bool":
            raise WellFormednessError(f"'not' applied to {t} operand")
        if e.op == "neg" and t == "bool":
            raise WellFormednessError("unary minus applied to bool operand")
        return t
    lt = type_of(e.left, var_types)
    rt = type_of(e.right, var_types)
    if e.op in ("and", "or"):
        if lt != "bool" or rt != "bool":
            raise WellFormednessError(f"'{e.op}' needs bool operands")
        return "bool"
    if e.op in ("=", "!="):
        if (lt == "bool") != (rt == "bool"):
            raise WellFormednessError(f"'{e.op}' compares {lt} with {rt}")
        return "bool"
    if e.op in ("<", "<=", ">", ">="):
        if "bool" in (lt, rt):
            raise WellFormednessError(f"'{e.op}' applied to bool operand")
        return "bool"
    # arithmetic
    if "bool" in (lt, rt):
        raise WellFormednessError(f"'{e.op}' applied to bool operand")
    return "real" if "real" in (lt, rt) else "int"


def check_well_formed(program: ChorProgram) -> list[str]:
    """Collect static findings; an empty list means the program is usable."""
    from .semantics import eval_weight  # local import: no cycle at module load

    findings: list[str] = []
    roles = set(program.roles)
    if len(roles) != len(program.roles):
        findings.append("duplicate role declaration")

    var_types: dict[str, str] = {c: "real" for c in program.constants}
    owners: dict[str, str] = {}
    for d in program.var_decls:
        if d.name in var_types:
            findings.append(f"duplicate declaration of {d.name}")
        var_types[d.name] = "bool" if d.is_bool else "int"
        owners[d.name] = d.owner
        if d.owner not in roles:
            findings.append(f"variable {d.name} owned by undeclared role {d.owner}")
        if not d.is_bool and d.lo > d.hi:
            findings.append(f"variable {d.name} has empty range [{d.lo}..{d.hi}]")
        if not d.contains(d.init):
            findings.append(f"variable {d.name} initialised outside its range")

    if program.main not in program.defs:
        findings.append(f"main references undefined {program.main}")

    const_types = {c: "real" for c in program.constants}

    def check_expr(e: Expr, where: str, want: str | None = None):
        try:
            t = type_of(e, var_types)
        except WellFormednessError as err:
            findings.append(f"{where}: {err}")
            return
        if want and t != want and not (want == "numeric" and t in ("int", "real")):
            findings.append(f"{where}: expected {want} expression, got {t}")

    def check_weight(e: Expr, where: str) -> float | None:
        bad = expr_vars(e) - set(program.constants)
        if bad:
            findings.append(
                f"{where}: weight reads non-constant name(s) {', '.join(sorted(bad))}"
            )
            return None
        try:
            type_of(e, const_types)
            w = eval_weight(e, program.constants)
        except Exception as err:  # noqa: BLE001 - surfaced as a finding
            findings.append(f"{where}: weight does not evaluate ({err})")
            return None
        if w < 0:
            findings.append(f"{where}: negative weight {w}")
        return w

    def check_update(update: tuple[Assign, ...], participants, where: str):
        for a in update:
            if a.var not in owners:
                findings.append(f"{where}: update assigns undeclared {a.var}")
                continue
            if owners[a.var] not in participants:
                findings.append(
                    f"{where}: update assigns {a.var}, owned by non-participant "
                    f"{owners[a.var]}"
                )
            check_expr(a.expr, where, "bool" if var_types[a.var] == "bool" else "numeric")

    def walk(term: ChorTerm, where: str):
        if isinstance(term, Interaction):
            if len(set(term.receivers)) != len(term.receivers):
                findings.append(f"{where}: duplicate receiver")
            for r in term.participants:
                if r not in roles:
                    findings.append(f"{where}: undeclared role {r}")
            if term.initiator in term.receivers:
                findings.append(
                    f"{where}: initiator {term.initiator} is also a receiver"
                )
            total = 0.0
            evaluable = True
            for j, b in enumerate(term.branches, 1):
                bw = f"{where}/branch{j}"
                w = check_weight(b.weight, bw)
                if w is None:
                    evaluable = False
                else:
                    total += w
                check_update(b.update, term.participants, bw)
                walk(b.cont, bw)
            if program.kind == "dtmc" and evaluable and abs(total - 1.0) > WEIGHT_TOL:
                findings.append(
                    f"{where}: branch probabilities sum to {total}, expected 1"
                )
        elif isinstance(term, Conditional):
            if term.role not in roles:
                findings.append(f"{where}: conditional at undeclared role {term.role}")
            check_expr(term.guard, where, "bool")
            walk(term.then_term, f"{where}/then")
            walk(term.else_term, f"{where}/else")
        elif isinstance(term, CallTerm):
            if term.name not in program.defs:
                findings.append(f"{where}: call to undefined {term.name}")

    for name, body in program.defs.items():
        walk(body, name)
    return findings


def require_well_formed(program: ChorProgram) -> None:
    problems = check_well_formed(program)
    if problems:
        raise WellFormednessError("; ".join(problems))
