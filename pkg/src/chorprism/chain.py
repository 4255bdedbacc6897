"""Explicit-state Markov chains and their export formats.

Both the choreography semantics and the network semantics produce values of
:class:`MarkovChain`; the equivalence checker compares them structurally, so
the container is deliberately plain: integer state ids, valuation tuples, and
per-state weight maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def render_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render_weight(w: float) -> str:
    return f"{w:.10g}"


@dataclass
class MarkovChain:
    kind: str  # "ctmc" or "dtmc"
    var_names: tuple[str, ...]
    states: list[tuple]  # state id -> valuation tuple, aligned with var_names
    init: int
    edges: list[dict[int, float]]  # state id -> {successor: weight}
    findings: list[str] = field(default_factory=list)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_transitions(self) -> int:
        return sum(len(e) for e in self.edges)

    def valuation_str(self, sid: int) -> str:
        return ",".join(
            f"{n}={render_value(v)}" for n, v in zip(self.var_names, self.states[sid])
        )

    def observation(self, sid: int, names: tuple[str, ...]) -> tuple:
        """Valuation restricted to ``names`` (the observable variables)."""
        pos = [self.var_names.index(n) for n in names]
        row = self.states[sid]
        return tuple(row[p] for p in pos)

    def to_text(self) -> str:
        lines = [f"# {self.kind} {self.num_states} states {self.num_transitions} transitions"]
        for sid in range(self.num_states):
            tag = " init" if sid == self.init else ""
            lines.append(f"STATE {sid} {self.valuation_str(sid)}{tag}")
        for src, succ in enumerate(self.edges):
            for dst in sorted(succ):
                lines.append(f"TRANS {src} {dst} {render_weight(succ[dst])}")
        return "\n".join(lines) + "\n"

    def to_dot(self) -> str:
        lines = ["digraph chain {", "  rankdir=LR;", "  node [shape=circle];"]
        for sid in range(self.num_states):
            shape = ", shape=doublecircle" if sid == self.init else ""
            lines.append(f'  s{sid} [label="{self.valuation_str(sid)}"{shape}];')
        for src, succ in enumerate(self.edges):
            for dst in sorted(succ):
                lines.append(
                    f'  s{src} -> s{dst} [label="{render_weight(succ[dst])}"];'
                )
        lines.append("}")
        return "\n".join(lines) + "\n"
