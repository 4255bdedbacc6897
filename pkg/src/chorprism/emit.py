"""Serialize a compiled network to PRISM source text.

Output shape: the model-kind keyword, one ``const double`` per named
constant, then one ``module … endmodule`` block per role holding the
counter declaration, the role's own variables, and its commands. No
``system`` block is emitted: PRISM's default composition synchronizes
modules on shared labels, which is exactly how the network was built.

State expressions use PRISM's operators (``&``, ``|``, ``!``); integer
division becomes ``floor(a/b)`` since PRISM's ``/`` is real division,
whereas weight expressions keep ``/`` (weights divide exactly).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ChorError
from .parser import render_number
from .prism import Network, PrismCommand, network_modules
from .syntax import Assign, Binary, ChorProgram, Expr, Lit, Unary, Var, VarDecl


class UnrepresentableWeight(ChorError):
    """A numeric weight does not survive the configured output precision."""


@dataclass(frozen=True)
class EmitConfig:
    precision: int = 17  # significant digits for numeric literals

    def __post_init__(self):
        if self.precision < 6:
            raise ValueError("emission precision below 6 significant digits")


_PREC = {
    "|": 1, "&": 2, "!": 3,
    "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "neg": 7,
}
_OPS = {"or": "|", "and": "&", "not": "!"}


def _num(v, config: EmitConfig) -> str:
    if isinstance(v, int):
        return str(v)
    if v.is_integer():
        return str(int(v))
    s = f"{v:.{config.precision}g}"
    if float(s) != v:
        raise UnrepresentableWeight(
            f"weight {v!r} does not round-trip at {config.precision} significant digits"
        )
    return s


def render_expr(e: Expr, config: EmitConfig, *, weight: bool = False, parent_prec: int = 0) -> str:
    if isinstance(e, Lit):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return _num(e.value, config)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        op = _OPS.get(e.op, e.op)
        p = _PREC["!" if op == "!" else "neg"]
        inner = render_expr(e.operand, config, weight=weight, parent_prec=p)
        s = f"{op}{inner}"
        return f"({s})" if p < parent_prec else s
    if e.op in ("mod", "min", "max"):
        left = render_expr(e.left, config, weight=weight)
        right = render_expr(e.right, config, weight=weight)
        return f"{e.op}({left},{right})"
    if e.op == "/" and not weight:
        left = render_expr(e.left, config)
        right = render_expr(e.right, config)
        return f"floor({left}/{right})"
    op = _OPS.get(e.op, e.op)
    p = _PREC[op]
    left = render_expr(e.left, config, weight=weight, parent_prec=p)
    right = render_expr(e.right, config, weight=weight, parent_prec=p + 1)
    s = f"{left}{op}{right}"
    return f"({s})" if p < parent_prec else s


def render_update(update: tuple[Assign, ...], config: EmitConfig) -> str:
    if not update:
        return "true"
    return "&".join(f"({a.var}'={render_expr(a.expr, config)})" for a in update)


def render_command(c: PrismCommand, config: EmitConfig) -> str:
    alts = " + ".join(
        f"{render_expr(w, config, weight=True)} : {render_update(u, config)}"
        for w, u in c.alts
    )
    return f"[{c.label or ''}] ({render_expr(c.guard, config)}) -> {alts};"


def _render_decl(d: VarDecl, config: EmitConfig) -> str:
    if d.is_bool:
        return f"{d.name} : bool init {'true' if d.init else 'false'};"
    return f"{d.name} : [{d.lo}..{d.hi}] init {_num(d.init, config)};"


def emit(net: Network, prog: ChorProgram, config: EmitConfig | None = None) -> str:
    """Render the network as a complete PRISM model, deterministically."""
    config = config or EmitConfig()
    lines = [prog.kind]
    if prog.constants:
        lines.append("")
        for name, value in prog.constants.items():
            lines.append(f"const double {name} = {_num(value, config)};")
    for m in network_modules(net):
        lines.append("")
        lines.append(f"module {m.name}")
        for d in m.var_decls:
            lines.append("  " + _render_decl(d, config))
        for c in m.commands:
            lines.append("  " + render_command(c, config))
        lines.append("endmodule")
    lines.append("")
    return "\n".join(lines)


def output_extension(kind: str) -> str:
    return ".sm" if kind == "ctmc" else ".pm"
