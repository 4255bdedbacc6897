"""Lowering passes from the surface language to the core representation.

Pipeline order matters: ``expand_indices`` concretises role/variable families
and replicates indexed statements (recording family ranges for later passes),
``expand_foreach`` then instantiates foreach clauses over those ranges, and
``desugar_allsynch`` rewrites synchronised choices into conditional ladders.
``load_program`` runs the whole pipeline on source text.
"""

from __future__ import annotations

import dataclasses
import random
import re

from .errors import IndexOutOfFamily, NonStaticIndex, WellFormednessError
from .parser import (
    AllSynch,
    AllSynchEntry,
    ForeachAssign,
    SurfaceProgram,
    parse,
    to_core,
)
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

_REF = re.compile(r"^([A-Za-z_]\w*)\[([^\]]+)\]$")
_IDX = re.compile(r"^([A-Za-z_]\w*|\d+)([+-]\d+)?$")


def split_ref(name: str) -> tuple[str, str | None]:
    m = _REF.match(name)
    if not m:
        return name, None
    return m.group(1), m.group(2)


def _parse_idx(idx: str, constants: dict) -> tuple[str | None, int]:
    """Decode an index expression into (binder, offset) or (None, literal)."""
    m = _IDX.match(idx)
    if not m:
        raise WellFormednessError(f"malformed index expression [{idx}]")
    head, off = m.group(1), int(m.group(2) or 0)
    if head.isdigit():
        return None, int(head) + off
    if head in constants:
        v = constants[head]
        if not isinstance(v, int):
            raise WellFormednessError(f"index constant {head} is not an integer")
        return None, v + off
    return head, off


class _Expander:
    def __init__(self, prog: SurfaceProgram):
        self.constants = prog.constants
        self.families: dict[str, tuple[int, int]] = {}
        for f in prog.role_families:
            self.families[f.base] = (f.lo, f.hi)
        for f in prog.var_families:
            self.families[f.base] = (f.lo, f.hi)

    # -- reference resolution ------------------------------------------------

    def resolve_ref(self, name: str, subst: dict[str, int]) -> str:
        base, idx = split_ref(name)
        if idx is None:
            return name
        binder, off = _parse_idx(idx, self.constants)
        if binder is not None:
            if binder not in subst:
                return name  # someone else's binder (e.g. a foreach variable)
            off = subst[binder] + off
            literal = False
        else:
            literal = True
        if base not in self.families:
            raise WellFormednessError(f"{base} is not a declared family")
        lo, hi = self.families[base]
        size = hi - lo + 1
        if literal:
            if not lo <= off <= hi:
                raise IndexOutOfFamily(
                    f"index {off} outside {base}[{lo}..{hi}]"
                )
            v = off
        else:
            v = lo + (off - lo) % size  # offsets wrap around the family
        return f"{base}{v}"

    def resolve_expr(self, e: Expr, subst: dict[str, int]) -> Expr:
        if isinstance(e, Var):
            return Var(self.resolve_ref(e.name, subst))
        if isinstance(e, Unary):
            return Unary(e.op, self.resolve_expr(e.operand, subst))
        if isinstance(e, Binary):
            return Binary(e.op, self.resolve_expr(e.left, subst),
                          self.resolve_expr(e.right, subst))
        return e

    def resolve_item(self, item, subst: dict[str, int]):
        if isinstance(item, ForeachAssign):
            inner = {k: v for k, v in subst.items() if k != item.binder}
            bound = item.bound
            if isinstance(bound, str) and bound in subst:
                bound = subst[bound]
            return ForeachAssign(item.binder, item.op, bound,
                                 item.var, self.resolve_expr(item.expr, inner))
        return Assign(self.resolve_ref(item.var, subst),
                      self.resolve_expr(item.expr, subst))

    # -- binder discovery ------------------------------------------------------

    def ref_binder(self, name: str) -> str | None:
        base, idx = split_ref(name)
        if idx is None:
            return None
        binder, _ = _parse_idx(idx, self.constants)
        return binder

    def expr_binders(self, e: Expr, out: set[str]):
        if isinstance(e, Var):
            b = self.ref_binder(e.name)
            if b:
                out.add(b)
        elif isinstance(e, Unary):
            self.expr_binders(e.operand, out)
        elif isinstance(e, Binary):
            self.expr_binders(e.left, out)
            self.expr_binders(e.right, out)

    def head_binders(self, term: Interaction) -> set[str]:
        out: set[str] = set()
        for r in (term.initiator, *term.receivers):
            b = self.ref_binder(r)
            if b:
                out.add(b)
        for br in term.branches:
            self.expr_binders(br.weight, out)
            for item in br.update:
                if isinstance(item, ForeachAssign):
                    local = {item.binder}
                    if isinstance(item.bound, str) and item.bound not in self.constants \
                            and item.bound not in local:
                        out.add(item.bound)
                    sub: set[str] = set()
                    b = self.ref_binder(item.var)
                    if b:
                        sub.add(b)
                    self.expr_binders(item.expr, sub)
                    out |= sub - local
                else:
                    b = self.ref_binder(item.var)
                    if b:
                        out.add(b)
                    self.expr_binders(item.expr, out)
        return out

    def term_binders(self, term: ChorTerm) -> set[str]:
        if isinstance(term, Interaction):
            out = self.head_binders(term)
            for br in term.branches:
                out |= self.term_binders(br.cont)
            return out
        if isinstance(term, Conditional):
            out = set()
            b = self.ref_binder(term.role)
            if b:
                out.add(b)
            self.expr_binders(term.guard, out)
            return out | self.term_binders(term.then_term) | self.term_binders(term.else_term)
        if isinstance(term, AllSynch):
            out = set()
            for e in term.entries:
                b = self.ref_binder(e.role)
                if b:
                    out.add(b)
                self.expr_binders(e.guard, out)
                self.expr_binders(e.weight, out)
                for a in e.update:
                    b = self.ref_binder(a.var)
                    if b:
                        out.add(b)
                    self.expr_binders(a.expr, out)
            return out | self.term_binders(term.cont)
        return set()

    def binder_family_range(self, term: Interaction, binder: str) -> tuple[int, int]:
        ranges = []

        def ref(name: str):
            base, idx = split_ref(name)
            if idx is None:
                return
            b, _ = _parse_idx(idx, self.constants)
            if b == binder:
                if base not in self.families:
                    raise WellFormednessError(f"{base} is not a declared family")
                ranges.append(self.families[base])

        for r in (term.initiator, *term.receivers):
            ref(r)

        def in_expr(e: Expr):
            if isinstance(e, Var):
                ref(e.name)
            elif isinstance(e, Unary):
                in_expr(e.operand)
            elif isinstance(e, Binary):
                in_expr(e.left)
                in_expr(e.right)

        for br in term.branches:
            in_expr(br.weight)
            for item in br.update:
                ref(item.var)
                in_expr(item.expr)
        if not ranges:
            raise WellFormednessError(f"cannot infer the range of index {binder}")
        if len(set(ranges)) > 1:
            raise WellFormednessError(
                f"index {binder} spans families with different ranges"
            )
        return ranges[0]

    # -- statement expansion ----------------------------------------------------

    def subst_head(self, term: Interaction, subst: dict[str, int], conts) -> Interaction:
        branches = tuple(
            Branch(
                self.resolve_expr(br.weight, subst),
                tuple(self.resolve_item(item, subst) for item in br.update),
                cont,
                br.label,
            )
            for br, cont in zip(term.branches, conts)
        )
        return Interaction(
            self.resolve_ref(term.initiator, subst),
            tuple(self.resolve_ref(r, subst) for r in term.receivers),
            branches,
            term.annotation,
        )

    def expand_term(self, term: ChorTerm) -> ChorTerm:
        if isinstance(term, Interaction):
            binders = self.head_binders(term)
            if not binders:
                conts = [self.expand_term(b.cont) for b in term.branches]
                return self.subst_head(term, {}, conts)
            if len(binders) > 1:
                raise WellFormednessError(
                    f"statement uses several index variables: {', '.join(sorted(binders))}"
                )
            (binder,) = binders
            lo, hi = self.binder_family_range(term, binder)
            conts = [b.cont for b in term.branches]
            if len(conts) > 1:
                if any(binder in self.term_binders(c) for c in conts):
                    raise WellFormednessError(
                        f"index {binder} reaches into a branch continuation of a choice"
                    )
                if len(set(conts)) != 1:
                    raise WellFormednessError(
                        "branches of an indexed choice must share one continuation"
                    )
            # Replicate the statement per index value, threading each copy's
            # continuation(s) to the next copy; the last copy continues into
            # the (separately expanded) original continuation.
            cur = self.expand_term(conts[0])
            for v in range(hi, lo - 1, -1):
                cur = self.subst_head(term, {binder: v}, [cur] * len(conts))
            return cur
        if isinstance(term, Conditional):
            return Conditional(
                self.resolve_expr(term.guard, {}),
                self.resolve_ref(term.role, {}),
                self.expand_term(term.then_term),
                self.expand_term(term.else_term),
            )
        if isinstance(term, AllSynch):
            entries = tuple(
                AllSynchEntry(
                    self.resolve_ref(e.role, {}),
                    self.resolve_expr(e.guard, {}),
                    self.resolve_expr(e.weight, {}),
                    tuple(Assign(self.resolve_ref(a.var, {}),
                                 self.resolve_expr(a.expr, {})) for a in e.update),
                )
                for e in term.entries
            )
            return AllSynch(entries, self.expand_term(term.cont))
        return term


def expand_indices(prog: SurfaceProgram) -> SurfaceProgram:
    """Concretise families and replicate indexed statements.

    Each indexed statement becomes one copy per index value, copies chained
    in sequence; a statement's original continuation follows the last copy.
    Literal indices must lie within the family range; binder arithmetic wraps
    around it. Family ranges are kept (``family_ranges``) for expand_foreach.
    """
    ex = _Expander(prog)
    roles = list(prog.roles)
    for f in prog.role_families:
        roles.extend(f"{f.base}{i}" for i in range(f.lo, f.hi + 1))
    var_decls = []
    for d in prog.var_decls:
        var_decls.append(dataclasses.replace(d, owner=ex.resolve_ref(d.owner, {})))
    for f in prog.var_families:
        fam_roles = {rf.base: rf for rf in prog.role_families}
        if f.owner_base not in fam_roles:
            raise WellFormednessError(
                f"variable family {f.base} owned by non-family {f.owner_base}"
            )
        rf = fam_roles[f.owner_base]
        if (rf.lo, rf.hi) != (f.lo, f.hi):
            raise WellFormednessError(
                f"variable family {f.base}[{f.lo}..{f.hi}] does not match "
                f"owner family {f.owner_base}[{rf.lo}..{rf.hi}]"
            )
        from .syntax import VarDecl
        var_decls.extend(
            VarDecl(f"{f.base}{i}", f"{f.owner_base}{i}", f.init, f.vlo, f.vhi, f.is_bool)
            for i in range(f.lo, f.hi + 1)
        )
    defs = {name: ex.expand_term(body) for name, body in prog.defs.items()}
    out = SurfaceProgram(
        kind=prog.kind,
        constants=dict(prog.constants),
        roles=roles,
        role_families=[],
        var_decls=var_decls,
        var_families=[],
        defs=defs,
        main=prog.main,
    )
    out.family_ranges = dict(getattr(prog, "family_ranges", {}))
    out.family_ranges.update(ex.families)
    return out


def _cmp(a: int, op: str, b: int) -> bool:
    return {
        "=": a == b, "!=": a != b,
        "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
    }[op]


def expand_foreach(prog: SurfaceProgram) -> SurfaceProgram:
    """Instantiate foreach clauses over their variable family's index range."""
    ranges: dict[str, tuple[int, int]] = dict(getattr(prog, "family_ranges", {}))
    for f in prog.var_families:
        ranges[f.base] = (f.lo, f.hi)
    ex = _Expander(prog)
    ex.families.update(ranges)

    def lower_item(item) -> list[Assign]:
        if not isinstance(item, ForeachAssign):
            return [item]
        base, idx = split_ref(item.var)
        if idx != item.binder:
            raise WellFormednessError(
                f"foreach over {item.binder} must assign {base}[{item.binder}]"
            )
        if base not in ranges:
            raise WellFormednessError(f"{base} is not a declared family")
        bound = item.bound
        if isinstance(bound, str):
            if bound not in prog.constants:
                raise NonStaticIndex(
                    f"foreach bound {bound} is not a constant or enclosing index"
                )
            bound = prog.constants[bound]
        if not isinstance(bound, int):
            raise NonStaticIndex(f"foreach bound {bound} is not an integer")
        lo, hi = ranges[base]
        return [
            Assign(f"{base}{k}", ex.resolve_expr(item.expr, {item.binder: k}))
            for k in range(lo, hi + 1)
            if _cmp(k, item.op, bound)
        ]

    def walk(term: ChorTerm) -> ChorTerm:
        if isinstance(term, Interaction):
            branches = tuple(
                Branch(
                    b.weight,
                    tuple(a for item in b.update for a in lower_item(item)),
                    walk(b.cont),
                    b.label,
                )
                for b in term.branches
            )
            return dataclasses.replace(term, branches=branches)
        if isinstance(term, Conditional):
            return dataclasses.replace(
                term, then_term=walk(term.then_term), else_term=walk(term.else_term)
            )
        if isinstance(term, AllSynch):
            return AllSynch(term.entries, walk(term.cont))
        return term

    out = SurfaceProgram(
        kind=prog.kind,
        constants=dict(prog.constants),
        roles=list(prog.roles),
        role_families=list(prog.role_families),
        var_decls=list(prog.var_decls),
        var_families=list(prog.var_families),
        defs={name: walk(body) for name, body in prog.defs.items()},
        main=prog.main,
    )
    out.family_ranges = ranges
    return out


def _fold_mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Lit) and isinstance(b, Lit) \
            and not isinstance(a.value, bool) and not isinstance(b.value, bool):
        return Lit(a.value * b.value)
    return Binary("*", a, b)


def desugar_allsynch(prog: SurfaceProgram) -> SurfaceProgram:
    """Rewrite allsynch blocks into nested conditionals over per-role choices.

    Roles are considered in order of first appearance; a role's alternatives
    are tried in source order. Every combination of satisfied guards yields
    one interaction (initiated by the first role) whose weight is the product
    of the chosen weights and whose update concatenates the chosen updates;
    falling off a role's alternatives ends the protocol. A literal ``true``
    guard short-circuits its ladder, pruning the conditional around it.
    """

    def lower(node: AllSynch) -> ChorTerm:
        cont = walk(node.cont)
        order: list[str] = []
        groups: dict[str, list[AllSynchEntry]] = {}
        for e in node.entries:
            if e.role not in groups:
                order.append(e.role)
                groups[e.role] = []
            groups[e.role].append(e)

        def build(i: int, chosen: list[AllSynchEntry]) -> ChorTerm:
            if i == len(order):
                weight = chosen[0].weight
                update: tuple[Assign, ...] = chosen[0].update
                for e in chosen[1:]:
                    weight = _fold_mul(weight, e.weight)
                    update = update + e.update
                return Interaction(
                    order[0],
                    tuple(order[1:]),
                    (Branch(weight, update, cont),),
                )
            ladder: ChorTerm = Inact()
            for e in reversed(groups[order[i]]):
                taken = build(i + 1, chosen + [e])
                if e.guard == Lit(True):
                    ladder = taken
                else:
                    ladder = Conditional(e.guard, order[i], taken, ladder)
            return ladder

        return build(0, [])

    def walk(term: ChorTerm) -> ChorTerm:
        if isinstance(term, AllSynch):
            return lower(term)
        if isinstance(term, Interaction):
            branches = tuple(
                dataclasses.replace(b, cont=walk(b.cont)) for b in term.branches
            )
            return dataclasses.replace(term, branches=branches)
        if isinstance(term, Conditional):
            return dataclasses.replace(
                term, then_term=walk(term.then_term), else_term=walk(term.else_term)
            )
        return term

    return SurfaceProgram(
        kind=prog.kind,
        constants=dict(prog.constants),
        roles=list(prog.roles),
        role_families=list(prog.role_families),
        var_decls=list(prog.var_decls),
        var_families=list(prog.var_families),
        defs={name: walk(body) for name, body in prog.defs.items()},
        main=prog.main,
    )


# ---------------------------------------------------------------------------
# annotation
# ---------------------------------------------------------------------------

def auto_annotate(program: ChorProgram, scheme: str = "deterministic",
                  seed: int | None = None) -> ChorProgram:
    """Give every unannotated interaction a fresh label.

    The deterministic scheme numbers interactions ``A1, A2, …`` in preorder
    over the definitions; the seeded-random scheme draws five uppercase
    letters. Existing labels are kept and never collided with.
    """
    used = set()
    for _, body in program.defs.items():
        for t in _all_interactions(body):
            if t.annotation:
                used.add(t.annotation)
            for b in t.branches:
                if b.label:
                    used.add(b.label)

    rng = random.Random(seed)
    counter = [0]

    def fresh() -> str:
        while True:
            if scheme == "seeded-random":
                name = "".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ") for _ in range(5))
            else:
                counter[0] += 1
                name = f"A{counter[0]}"
            if name not in used:
                used.add(name)
                return name

    def walk(term: ChorTerm) -> ChorTerm:
        if isinstance(term, Interaction):
            ann = term.annotation or fresh()
            branches = tuple(
                dataclasses.replace(b, cont=walk(b.cont)) for b in term.branches
            )
            return Interaction(term.initiator, term.receivers, branches, ann)
        if isinstance(term, Conditional):
            return dataclasses.replace(
                term, then_term=walk(term.then_term), else_term=walk(term.else_term)
            )
        return term

    defs = {name: walk(body) for name, body in program.defs.items()}
    return dataclasses.replace(program, defs=defs)


def _all_interactions(term: ChorTerm):
    if isinstance(term, Interaction):
        yield term
        for b in term.branches:
            yield from _all_interactions(b.cont)
    elif isinstance(term, Conditional):
        yield from _all_interactions(term.then_term)
        yield from _all_interactions(term.else_term)


def branch_label(inter: Interaction, j: int) -> str:
    """Synchronisation label of branch ``j`` (0-based): explicit, or derived
    from the interaction's annotation as ``<annotation>_<j+1>``."""
    b = inter.branches[j]
    if b.label:
        return b.label
    if not inter.annotation:
        raise WellFormednessError("interaction has neither labels nor annotation")
    return f"{inter.annotation}_{j + 1}"


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def surface_to_core(prog: SurfaceProgram) -> ChorProgram:
    return to_core(desugar_allsynch(expand_foreach(expand_indices(prog))))


def load_program(text: str) -> ChorProgram:
    return surface_to_core(parse(text))
