"""Machine-check that a compiled network behaves like its source program.

The two chains are never equal on the nose: the network takes extra
administrative steps (counter resets after a call, the per-role bookkeeping
of a decision) that the source takes as one move or none. The comparison
therefore runs in three stages:

1. collapse — contract runs of administrative moves: a state whose outgoing
   edges all have weight 1 and change no observable variable, and whose
   successors all contract to one common state, is replaced by that state.
2. (discrete only) jump chains — replace each state's distribution with the
   distribution over where the *first observation-changing* move lands;
   probability of never changing the observation becomes a self-loop.
3. partition-refinement bisimulation on the disjoint union, starting from
   observation equality. In continuous mode the refinement ignores each
   state's rate into its own class (ordinary lumpability), which is what
   tolerates pending-reset interleavings that merely reshuffle inside a
   class; in discrete mode the jump chains are compared in full.

Observable means: the program's declared variables. Counters are invisible.
"""

from __future__ import annotations

import numpy as np

from .analysis import s_conn
from .chain import MarkovChain, render_value
from .errors import NotStronglyConnected
from .prism import build_network_chain
from .projection import project
from .semantics import DEFAULT_MAX_STATES, build_chain
from .sugar import auto_annotate
from .syntax import ChorProgram

TOL = 1e-9


# ---------------------------------------------------------------------------
# stage 1: administrative-step collapse
# ---------------------------------------------------------------------------

def collapse(chain: MarkovChain, obs_names: tuple[str, ...]) -> MarkovChain:
    """Contract administrative moves (weight 1, observation unchanged).

    A state is contracted only when every outgoing edge is administrative
    and all successors normalize to a single common state; diamonds of
    interleaved administrative moves therefore fold into their join, while
    genuine branching (or administrative cycles) is kept. Idempotent.
    """
    n = chain.num_states
    obs = [chain.observation(s, obs_names) for s in range(n)]

    def admin(x: int, y: int, w: float) -> bool:
        return abs(w - 1.0) <= TOL and obs[x] == obs[y]

    contractible = [
        bool(chain.edges[x]) and all(admin(x, y, w) for y, w in chain.edges[x].items())
        for x in range(n)
    ]
    nf: dict[int, int] = {x: x for x in range(n) if not contractible[x]}
    pending = [x for x in range(n) if contractible[x]]
    progress = True
    while progress and pending:
        progress = False
        still = []
        for x in pending:
            targets = set()
            for y in chain.edges[x]:
                r = nf.get(y)
                if r is None:
                    targets = None
                    break
                targets.add(r)
            if targets is None:
                still.append(x)
            else:
                nf[x] = targets.pop() if len(targets) == 1 else x
                progress = True
        pending = still
    for x in pending:  # administrative cycles: every member stays
        nf[x] = x

    start = nf[chain.init]
    order = [start]
    idx = {start: 0}
    merged: list[dict[int, float]] = []
    qi = 0
    while qi < len(order):
        x = order[qi]
        qi += 1
        out: dict[int, float] = {}
        for y, w in chain.edges[x].items():
            r = nf[y]
            out[r] = out.get(r, 0.0) + w
        for r in out:
            if r not in idx:
                idx[r] = len(order)
                order.append(r)
        merged.append(out)
    return MarkovChain(
        chain.kind,
        chain.var_names,
        [chain.states[x] for x in order],
        0,
        [{idx[r]: w for r, w in out.items()} for out in merged],
        list(chain.findings),
    )


# ---------------------------------------------------------------------------
# stage 2 (discrete): first-observable-move jump chains
# ---------------------------------------------------------------------------

def jump_chain(chain: MarkovChain, obs_names: tuple[str, ...]) -> MarkovChain:
    """Replace each state's one-step distribution with the distribution of
    where the first observation-changing move lands.

    Within each group of states connected by observation-preserving edges
    the jump probabilities solve (I - P)X = B, restricted to states that
    can actually reach an observation change; the remaining probability
    mass (never changing the observation) sits on a self-loop, a slot no
    genuine jump can occupy.
    """
    n = chain.num_states
    obs = [chain.observation(s, obs_names) for s in range(n)]
    stutter = [
        {y: w for y, w in chain.edges[x].items() if obs[y] == obs[x]} for x in range(n)
    ]
    exits = [
        {y: w for y, w in chain.edges[x].items() if obs[y] != obs[x]} for x in range(n)
    ]

    adj: list[list[int]] = [[] for _ in range(n)]
    for x in range(n):
        for y in stutter[x]:
            if y != x:
                adj[x].append(y)
                adj[y].append(x)
    comp = [-1] * n
    groups: list[list[int]] = []
    for s in range(n):
        if comp[s] != -1:
            continue
        members = [s]
        comp[s] = len(groups)
        qi = 0
        while qi < len(members):
            for y in adj[members[qi]]:
                if comp[y] == -1:
                    comp[y] = len(groups)
                    members.append(y)
            qi += 1
        groups.append(members)

    new_edges: list[dict[int, float]] = [dict() for _ in range(n)]
    for members in groups:
        can = {x for x in members if exits[x]}
        changed = True
        while changed:
            changed = False
            for x in members:
                if x not in can and any(y in can for y in stutter[x]):
                    can.add(x)
                    changed = True
        for x in members:
            if x not in can:
                new_edges[x][x] = 1.0  # diverges inside one observation
        solvable = [x for x in members if x in can]
        if not solvable:
            continue
        pos = {x: i for i, x in enumerate(solvable)}
        targets = sorted({t for x in solvable for t in exits[x]})
        tpos = {t: j for j, t in enumerate(targets)}
        P = np.zeros((len(solvable), len(solvable)))
        B = np.zeros((len(solvable), len(targets)))
        for i, x in enumerate(solvable):
            for y, w in stutter[x].items():
                j = pos.get(y)
                if j is not None:
                    P[i, j] += w
            for t, w in exits[x].items():
                B[i, tpos[t]] += w
        X = np.linalg.solve(np.eye(len(solvable)) - P, B)
        for i, x in enumerate(solvable):
            total = 0.0
            for j, t in enumerate(targets):
                v = float(X[i, j])
                if v > 1e-12:
                    new_edges[x][t] = new_edges[x].get(t, 0.0) + v
                    total += v
            if total < 1.0 - TOL:
                new_edges[x][x] = new_edges[x].get(x, 0.0) + (1.0 - total)

    return MarkovChain(
        "dtmc",
        chain.var_names,
        list(chain.states),
        chain.init,
        new_edges,
        list(chain.findings),
    )


# ---------------------------------------------------------------------------
# stage 3: partition-refinement bisimulation
# ---------------------------------------------------------------------------

def bisimilar(
    c1: MarkovChain,
    c2: MarkovChain,
    obs_names: tuple[str, ...],
    *,
    exclude_own_block: bool = False,
) -> tuple[bool, list[int]]:
    """Refine the disjoint union of the two chains, starting from
    observation equality, until block-wise outgoing weights stabilize.

    With ``exclude_own_block`` the weight a state sends into its own block
    is ignored (ordinary lumpability for rate chains). Returns whether the
    two initial states share a block, plus the final block of every state
    (first chain's states first).
    """
    n1, n2 = c1.num_states, c2.num_states
    obs = [c1.observation(s, obs_names) for s in range(n1)]
    obs += [c2.observation(s, obs_names) for s in range(n2)]
    edges = [dict(c1.edges[s]) for s in range(n1)]
    edges += [{t + n1: w for t, w in c2.edges[s].items()} for s in range(n2)]
    total = n1 + n2

    keys: dict = {}
    blocks = []
    for x in range(total):
        k = obs[x]
        if k not in keys:
            keys[k] = len(keys)
        blocks.append(keys[k])

    while True:
        sig_ids: dict = {}
        new_blocks = []
        for x in range(total):
            sums: dict[int, float] = {}
            for y, w in edges[x].items():
                b = blocks[y]
                sums[b] = sums.get(b, 0.0) + w
            if exclude_own_block:
                sums.pop(blocks[x], None)
            sig = (
                blocks[x],
                tuple(sorted((b, round(v, 9)) for b, v in sums.items() if round(v, 9) != 0)),
            )
            if sig not in sig_ids:
                sig_ids[sig] = len(sig_ids)
            new_blocks.append(sig_ids[sig])
        if new_blocks == blocks:
            break
        blocks = new_blocks

    return blocks[c1.init] == blocks[n1 + c2.init], blocks


def _obs_text(obs: tuple, obs_names: tuple[str, ...]) -> str:
    return ",".join(f"{n}={render_value(v)}" for n, v in zip(obs_names, obs)) or "<empty>"


def explain_difference(
    c1: MarkovChain,
    c2: MarkovChain,
    blocks: list[int],
    obs_names: tuple[str, ...],
    *,
    exclude_own_block: bool = False,
) -> str:
    """Human-readable reason the two initial states ended in different
    blocks of the final (stable) partition."""
    n1 = c1.num_states
    o1 = c1.observation(c1.init, obs_names)
    o2 = c2.observation(c2.init, obs_names)
    if o1 != o2:
        return (
            f"initial states disagree on the observable variables: "
            f"source starts at {_obs_text(o1, obs_names)}, "
            f"network at {_obs_text(o2, obs_names)}"
        )

    def block_sums(chain: MarkovChain, offset: int) -> dict[int, float]:
        sums: dict[int, float] = {}
        for y, w in chain.edges[chain.init].items():
            b = blocks[y + offset]
            sums[b] = sums.get(b, 0.0) + w
        if exclude_own_block:
            sums.pop(blocks[chain.init + offset], None)
        return sums

    s1 = block_sums(c1, 0)
    s2 = block_sums(c2, n1)

    def block_obs(b: int) -> tuple:
        for x in range(n1):
            if blocks[x] == b:
                return c1.observation(x, obs_names)
        for x in range(c2.num_states):
            if blocks[x + n1] == b:
                return c2.observation(x, obs_names)
        raise AssertionError("empty block")

    for b in sorted(set(s1) | set(s2)):
        w1 = round(s1.get(b, 0.0), 9)
        w2 = round(s2.get(b, 0.0), 9)
        if w1 != w2:
            return (
                f"from the initial state, total weight into states observing "
                f"{_obs_text(block_obs(b), obs_names)} (and behaving alike afterwards) "
                f"is {w1:.10g} in the source but {w2:.10g} in the network"
            )
    return (
        "the initial states agree on their immediate moves but reach "
        "observationally equal classes that behave differently later on"
    )


# ---------------------------------------------------------------------------
# top level
# ---------------------------------------------------------------------------

def verify_projection(
    prog: ChorProgram,
    *,
    max_states: int = DEFAULT_MAX_STATES,
    init_overrides: dict | None = None,
    require_sconn: bool = True,
) -> dict:
    """Project the program, build both chains, and decide equivalence.

    Returns a report: ``equivalent``, ``kind``, ``sconn``, raw/collapsed
    state counts for both sides, accumulated findings, and a
    ``counterexample`` description when the check fails.
    """
    prog = auto_annotate(prog)
    findings: list[str] = []
    sconn_ok = s_conn(prog)
    if not sconn_ok:
        if require_sconn:
            raise NotStronglyConnected(
                "program is outside the certified fragment; "
                "disable the strong-connectivity requirement to verify anyway"
            )
        findings.append(
            "sconn: program is outside the certified fragment; "
            "the result below is informational, not covered by the projection theorem"
        )
    net, _ctx = project(prog, require_sconn=False)
    chor_raw = build_chain(prog, max_states=max_states, init_overrides=init_overrides)
    net_raw = build_network_chain(
        net, prog.kind, prog.constants, max_states=max_states, init_overrides=init_overrides
    )
    findings.extend(chor_raw.findings)
    findings.extend(net_raw.findings)
    obs_names = tuple(d.name for d in prog.var_decls)
    c1 = collapse(chor_raw, obs_names)
    c2 = collapse(net_raw, obs_names)
    if prog.kind == "dtmc":
        j1 = jump_chain(c1, obs_names)
        j2 = jump_chain(c2, obs_names)
        equivalent, blocks = bisimilar(j1, j2, obs_names)
        witness = (j1, j2, False)
    else:
        equivalent, blocks = bisimilar(c1, c2, obs_names, exclude_own_block=True)
        witness = (c1, c2, True)
    report = {
        "equivalent": equivalent,
        "kind": prog.kind,
        "sconn": sconn_ok,
        "states": {
            "chor_raw": chor_raw.num_states,
            "chor_collapsed": c1.num_states,
            "net_raw": net_raw.num_states,
            "net_collapsed": c2.num_states,
        },
        "findings": findings,
        "counterexample": None,
    }
    if not equivalent:
        w1, w2, excl = witness
        report["counterexample"] = explain_difference(
            w1, w2, blocks, obs_names, exclude_own_block=excl
        )
    return report
