"""Guarded-command networks in the PRISM style.

A network is a tree of modules composed in parallel; each parallel node
carries the set of labels the two sides synchronize on. The semantics of a
network is obtained by flattening it into a single list of commands
(synchronized pairs are combined into product commands) and exploring the
induced Markov chain over the joint valuation of all module variables.

Updates inside a single alternative apply left to right, each assignment
seeing the effect of the previous one — the same discipline the source
language uses, which is what makes the two chains comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chain import MarkovChain
from .errors import EvalError, RangeViolation, StateBudgetExceeded, TypeMismatch
from .semantics import (
    DEFAULT_MAX_STATES,
    apply_assignments,
    eval_expr,
    eval_weight,
)
from .syntax import Assign, Binary, Expr, Lit, VarDecl

#: one probabilistic alternative of a command: (weight, assignments)
Alt = tuple[Expr, tuple[Assign, ...]]


@dataclass(frozen=True)
class PrismCommand:
    """A guarded command ``[label] guard -> w1:u1 + w2:u2 + ...``.

    ``label`` is ``None`` for a silent command that never synchronizes.
    Weights stay symbolic so emitted models keep their named constants.
    """

    label: str | None
    guard: Expr
    alts: tuple[Alt, ...]


@dataclass(frozen=True)
class PrismModule:
    name: str
    var_decls: tuple[VarDecl, ...]
    commands: tuple[PrismCommand, ...]


@dataclass(frozen=True)
class NilNet:
    """The empty network."""


@dataclass(frozen=True)
class ModNet:
    module: PrismModule


@dataclass(frozen=True)
class ParNet:
    sync_set: frozenset[str]
    left: Network
    right: Network


Network = NilNet | ModNet | ParNet


def network_modules(net: Network) -> list[PrismModule]:
    """Modules of the network, left to right."""
    if isinstance(net, NilNet):
        return []
    if isinstance(net, ModNet):
        return [net.module]
    return network_modules(net.left) + network_modules(net.right)


def network_var_decls(net: Network) -> tuple[VarDecl, ...]:
    return tuple(d for m in network_modules(net) for d in m.var_decls)


def alphabet(net: Network) -> frozenset[str]:
    """All synchronization labels occurring in the network."""
    return frozenset(
        c.label for m in network_modules(net) for c in m.commands if c.label is not None
    )


def compose_network(modules: list[PrismModule]) -> Network:
    """Left fold of the modules, synchronizing each new module with the
    labels it shares with everything composed so far."""
    net: Network = NilNet()
    for m in modules:
        leaf = ModNet(m)
        if isinstance(net, NilNet):
            net = leaf
        else:
            net = ParNet(alphabet(net) & alphabet(leaf), net, leaf)
    return net


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Lit) and not isinstance(a.value, bool):
        if a.value == 1:
            return b
        if isinstance(b, Lit) and not isinstance(b.value, bool):
            return Lit(a.value * b.value)
    if isinstance(b, Lit) and not isinstance(b.value, bool) and b.value == 1:
        return a
    return Binary("*", a, b)


def derive_commands(net: Network) -> tuple[PrismCommand, ...]:
    """Flatten the network into the commands of an equivalent single module.

    Silent commands and labels outside the synchronization set pass through
    untouched; for each shared label, every pair of commands (one per side)
    combines into one command whose guard is the conjunction, and whose
    alternatives are the cross product with multiplied weights and
    concatenated updates (left side first).
    """
    if isinstance(net, NilNet):
        return ()
    if isinstance(net, ModNet):
        return net.module.commands
    left = derive_commands(net.left)
    right = derive_commands(net.right)
    out = [c for c in left if c.label is None or c.label not in net.sync_set]
    out.extend(c for c in right if c.label is None or c.label not in net.sync_set)
    for label in sorted(net.sync_set):
        for cl in (c for c in left if c.label == label):
            for cr in (c for c in right if c.label == label):
                alts = tuple(
                    (_mul(wl, wr), ul + ur)
                    for wl, ul in cl.alts
                    for wr, ur in cr.alts
                )
                out.append(PrismCommand(label, Binary("and", cl.guard, cr.guard), alts))
    return tuple(out)


def mu(
    cmd: PrismCommand,
    src: dict,
    dst: dict,
    decl_of,
    constants: dict,
) -> float:
    """Total weight the command moves from valuation ``src`` to ``dst``:
    the sum of the weights of all alternatives whose update maps ``src`` to
    ``dst``, or 0 when the guard is false."""
    env = dict(constants)
    env.update(src)
    g = eval_expr(cmd.guard, env)
    if not isinstance(g, bool):
        raise TypeMismatch("command guard is not boolean")
    if not g:
        return 0.0
    total = 0.0
    for w, upd in cmd.alts:
        if apply_assignments(upd, src, decl_of, constants) == dst:
            total += eval_weight(w, constants)
    return total


def _decl_lookup(decls: dict[str, VarDecl]):
    def decl_of(name: str) -> VarDecl:
        d = decls.get(name)
        if d is None:
            raise EvalError(f"assignment to undeclared variable {name}")
        return d

    return decl_of


def _step(
    commands: tuple[PrismCommand, ...],
    valuation: dict,
    kind: str,
    decl_of,
    constants: dict,
    var_names: tuple[str, ...],
) -> tuple[list[tuple[dict, float]], float | None]:
    """One-step successors with merged weights.

    Returns the moves and, in discrete mode, the raw outgoing mass whenever
    it had to be renormalized to 1.
    """
    acc: dict[tuple, tuple[dict, float]] = {}
    env = dict(constants)
    env.update(valuation)
    for cmd in commands:
        g = eval_expr(cmd.guard, env)
        if not isinstance(g, bool):
            raise TypeMismatch("command guard is not boolean")
        if not g:
            continue
        for w, upd in cmd.alts:
            wv = eval_weight(w, constants)
            if wv == 0.0:
                continue
            nxt = apply_assignments(upd, valuation, decl_of, constants)
            k = tuple(nxt[n] for n in var_names)
            prev = acc.get(k)
            acc[k] = (nxt, wv if prev is None else prev[1] + wv)
    moves = [(v, w) for v, w in acc.values() if w != 0.0]
    renormalized_from = None
    if kind == "dtmc":
        if not moves:
            moves = [(dict(valuation), 1.0)]
        else:
            mass = sum(w for _, w in moves)
            if abs(mass - 1.0) > 1e-9:
                renormalized_from = mass
                moves = [(v, w / mass) for v, w in moves]
    return moves, renormalized_from


def step_network(
    net: Network, valuation: dict, kind: str, constants: dict
) -> list[tuple[dict, float]]:
    """Successor distribution of the whole network from one valuation."""
    decls = {d.name: d for d in network_var_decls(net)}
    var_names = tuple(decls)
    moves, _ = _step(
        derive_commands(net), valuation, kind, _decl_lookup(decls), constants, var_names
    )
    return moves


def initial_network_valuation(
    decls: tuple[VarDecl, ...], overrides: dict | None = None
) -> dict:
    val = {d.name: d.init for d in decls}
    by_name = {d.name: d for d in decls}
    for name, v in (overrides or {}).items():
        decl = by_name.get(name)
        if decl is None:
            raise EvalError(f"no variable named {name} in the network")
        if decl.is_bool:
            if not isinstance(v, bool):
                raise TypeMismatch(f"initial override for {name} is not bool")
        elif not decl.contains(v):
            raise RangeViolation(name, v, decl.lo, decl.hi, "initial override")
        val[name] = v
    return val


def build_network_chain(
    net: Network,
    kind: str,
    constants: dict,
    *,
    max_states: int = DEFAULT_MAX_STATES,
    init_overrides: dict | None = None,
) -> MarkovChain:
    """Breadth-first exploration of the network's joint state space.

    State variables are ordered module by module, declaration order within
    each. In discrete mode, command races can push the outgoing mass of a
    state past 1; the distribution is renormalized and the first occurrence
    is reported in the chain's findings.
    """
    decls_list = network_var_decls(net)
    decls = {d.name: d for d in decls_list}
    var_names = tuple(d.name for d in decls_list)
    decl_of = _decl_lookup(decls)
    commands = derive_commands(net)
    init = initial_network_valuation(decls_list, init_overrides)

    index: dict[tuple, int] = {}
    states: list[tuple] = []
    valuations: list[dict] = []
    edges: list[dict[int, float]] = []
    findings: list[str] = []

    def intern(v: dict) -> int:
        k = tuple(v[n] for n in var_names)
        sid = index.get(k)
        if sid is None:
            if len(states) >= max_states:
                raise StateBudgetExceeded(max_states)
            sid = len(states)
            index[k] = sid
            states.append(k)
            valuations.append(v)
            edges.append({})
        return sid

    intern(init)
    frontier = 0
    noted_renorm = False
    while frontier < len(states):
        sid = frontier
        frontier += 1
        moves, renorm = _step(commands, valuations[sid], kind, decl_of, constants, var_names)
        if renorm is not None and not noted_renorm:
            noted_renorm = True
            where = ",".join(f"{n}={v}" for n, v in zip(var_names, states[sid]))
            findings.append(
                f"dtmc_renormalized: outgoing probability mass {renorm:.10g} at state {where}"
            )
        for v, w in moves:
            dst = intern(v)
            edges[sid][dst] = edges[sid].get(dst, 0.0) + w

    return MarkovChain(kind, var_names, states, 0, edges, findings)
