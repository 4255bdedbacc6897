"""Compile probabilistic choreographies to PRISM models and machine-check
that the compiled network behaves like the source program."""

from .analysis import (
    check_annotations,
    check_well_formed,
    nodes,
    require_annotated,
    require_well_formed,
    s_conn,
)
from .chain import MarkovChain
from .emit import EmitConfig, emit
from .equivalence import bisimilar, collapse, jump_chain, verify_projection
from .errors import (
    AnnotationError,
    ChorError,
    EvalError,
    NotStronglyConnected,
    ParseError,
    RangeViolation,
    StateBudgetExceeded,
    TypeMismatch,
    UnguardedRecursion,
    WellFormednessError,
)
from .parser import parse, pretty_print
from .prism import (
    PrismCommand,
    PrismModule,
    alphabet,
    build_network_chain,
    compose_network,
    derive_commands,
    mu,
    step_network,
)
from .projection import ProjectionContext, fuse_resets, proj_role, proj_update, project
from .semantics import build_chain, eval_expr, eval_weight, step
from .sugar import (
    auto_annotate,
    desugar_allsynch,
    expand_foreach,
    expand_indices,
    load_program,
    surface_to_core,
)
from .syntax import ChorProgram

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "ChorError",
    "ChorProgram",
    "EmitConfig",
    "EvalError",
    "MarkovChain",
    "NotStronglyConnected",
    "ParseError",
    "PrismCommand",
    "PrismModule",
    "ProjectionContext",
    "RangeViolation",
    "StateBudgetExceeded",
    "TypeMismatch",
    "UnguardedRecursion",
    "WellFormednessError",
    "alphabet",
    "auto_annotate",
    "bisimilar",
    "build_chain",
    "build_network_chain",
    "check_annotations",
    "check_well_formed",
    "collapse",
    "compose_network",
    "derive_commands",
    "desugar_allsynch",
    "emit",
    "eval_expr",
    "eval_weight",
    "expand_foreach",
    "expand_indices",
    "fuse_resets",
    "jump_chain",
    "load_program",
    "mu",
    "nodes",
    "parse",
    "pretty_print",
    "proj_role",
    "proj_update",
    "project",
    "require_annotated",
    "require_well_formed",
    "s_conn",
    "step",
    "step_network",
    "surface_to_core",
    "verify_projection",
]
