"""Behavioural semantics: expression evaluation, update application, and
exhaustive chain construction."""

from __future__ import annotations

import pytest

from chorprism import (
    EvalError,
    RangeViolation,
    StateBudgetExceeded,
    TypeMismatch,
    build_chain,
    eval_expr,
    eval_weight,
    load_program,
)
from chorprism.semantics import apply_update, initial_valuation, step
from chorprism.syntax import (
    Assign,
    Binary,
    Branch,
    CallTerm,
    ChorProgram,
    Conditional,
    Inact,
    Interaction,
    Lit,
    Unary,
    Var,
    VarDecl,
)


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

def test_eval_expr_arithmetic():
    env = {"x": 7}
    assert eval_expr(Binary("mod", Var("x"), Lit(3)), env) == 1
    assert eval_expr(Binary("/", Var("x"), Lit(2)), env) == 3  # rounds down
    assert eval_expr(Binary("/", Lit(-7), Lit(2)), env) == -4
    assert eval_expr(Binary("min", Var("x"), Lit(3)), env) == 3
    assert eval_expr(Binary("max", Var("x"), Lit(3)), env) == 7
    assert eval_expr(Unary("neg", Lit(5)), env) == -5


def test_eval_expr_booleans():
    env = {"b": True}
    assert eval_expr(Binary("and", Var("b"), Lit(False)), env) is False
    assert eval_expr(Binary("or", Var("b"), Lit(False)), env) is True
    assert eval_expr(Binary("=", Lit(2), Lit(2)), env) is True
    assert eval_expr(Binary("<=", Lit(2), Lit(3)), env) is True


def test_eval_expr_errors():
    with pytest.raises(EvalError):
        eval_expr(Var("ghost"), {})
    with pytest.raises(EvalError):
        eval_expr(Binary("/", Lit(1), Lit(0)), {})
    with pytest.raises(TypeMismatch):
        eval_expr(Binary("and", Lit(1), Lit(True)), {})
    with pytest.raises(TypeMismatch):
        eval_expr(Binary("<", Lit(True), Lit(1)), {})


def test_eval_weight_divides_exactly():
    assert eval_weight(Binary("/", Lit(1), Lit(2)), {}) == 0.5
    assert eval_weight(Binary("*", Var("lambda1"), Lit(2)), {"lambda1": 3}) == 6.0
    with pytest.raises(TypeMismatch):
        eval_weight(Binary("=", Lit(1), Lit(1)), {})


# ---------------------------------------------------------------------------
# updates
# ---------------------------------------------------------------------------

def two_var_program(**kw):
    return ChorProgram(
        kind=kw.get("kind", "ctmc"),
        roles=("p", "q"),
        var_decls=(
            VarDecl("x", "p", 0, 0, 3),
            VarDecl("y", "q", 0, 0, 3),
        ),
        defs={"M": kw.get("body", Inact())},
        main="M",
    )


def test_updates_apply_left_to_right():
    prog = two_var_program()
    upd = (Assign("x", Lit(1)), Assign("y", Binary("+", Var("x"), Lit(1))))
    assert apply_update(upd, {"x": 0, "y": 0}, prog) == {"x": 1, "y": 2}
    # swapping the assignments changes the result: y reads the old x
    assert apply_update(upd[::-1], {"x": 0, "y": 0}, prog) == {"x": 1, "y": 1}


def test_update_out_of_range_is_rejected():
    prog = two_var_program()
    with pytest.raises(RangeViolation):
        apply_update((Assign("x", Lit(4)),), {"x": 0, "y": 0}, prog)


def test_update_type_errors():
    prog = two_var_program()
    with pytest.raises(TypeMismatch):
        apply_update((Assign("x", Lit(True)),), {"x": 0, "y": 0}, prog)


def test_initial_valuation_overrides():
    prog = two_var_program()
    assert initial_valuation(prog) == {"x": 0, "y": 0}
    assert initial_valuation(prog, {"x": 2}) == {"x": 2, "y": 0}
    with pytest.raises(RangeViolation):
        initial_valuation(prog, {"x": 9})


# ---------------------------------------------------------------------------
# small steps
# ---------------------------------------------------------------------------

def test_unfolding_a_call_is_an_explicit_move():
    body = Interaction("p", ("q",), (Branch(Lit(1), (), Inact()),))
    prog = two_var_program(body=body)
    prog.defs["M"] = body
    moves = step(CallTerm("M"), {"x": 0, "y": 0}, prog)
    assert moves == [(1.0, {"x": 0, "y": 0}, body)]


def test_deciding_a_conditional_is_an_explicit_move():
    t = Conditional(Binary("=", Var("x"), Lit(0)), "p", Inact(), CallTerm("M"))
    prog = two_var_program(body=t)
    assert step(t, {"x": 0, "y": 0}, prog) == [(1.0, {"x": 0, "y": 0}, Inact())]
    assert step(t, {"x": 1, "y": 0}, prog) == [(1.0, {"x": 1, "y": 0}, CallTerm("M"))]


def test_non_boolean_guard_fails_at_evaluation_time():
    t = Conditional(Lit(1), "p", Inact(), Inact())
    prog = two_var_program(body=t)
    with pytest.raises(TypeMismatch):
        step(t, {"x": 0, "y": 0}, prog)


def test_zero_weight_branches_are_dropped():
    body = Interaction(
        "p",
        ("q",),
        (
            Branch(Lit(0), (Assign("x", Lit(1)),), Inact()),
            Branch(Lit(2), (Assign("x", Lit(2)),), Inact()),
        ),
    )
    prog = two_var_program(body=body)
    moves = step(body, {"x": 0, "y": 0}, prog)
    assert len(moves) == 1 and moves[0][1]["x"] == 2


# ---------------------------------------------------------------------------
# whole chains
# ---------------------------------------------------------------------------

def test_two_message_chain_shape(data_text):
    c = build_chain(load_program(data_text("example1.chor")))
    assert c.kind == "ctmc"
    assert c.num_states == 3
    assert c.num_transitions == 2
    assert c.states[0] == (0, 0)
    # both messages write the same value; the states differ in progress only
    assert c.states[1] == (1, 0) and c.states[2] == (1, 0)
    assert c.edges[0] == {1: 2.0}
    assert c.edges[1] == {2: 3.0}
    assert c.edges[2] == {}


def test_recursive_exchange_chain_shape(data_text):
    c = build_chain(load_program(data_text("example2.chor")))
    assert c.num_states == 5
    assert len(set(c.states)) == 3  # three distinct valuations
    assert c.states[0] == (0, 0)
    # the two post-message states are call states with one weight-1 exit
    assert c.edges[1] == {3: 1.0}
    assert c.edges[2] == {4: 1.0}
    # the unfolded bodies branch exactly like the root does
    assert c.edges[3] == {1: 2.0, 2: 3.0}
    assert c.edges[4] == {1: 2.0, 2: 3.0}


def test_exploration_starts_at_the_entry_body():
    src = "ctmc;\nrole p;\ndef Z = end;\nmain Z;\n"
    c = build_chain(load_program(src))
    assert c.num_states == 1 and c.num_transitions == 0


def test_terminal_states_absorb_in_discrete_mode():
    src = (
        "dtmc;\nrole p, q;\nvar x @ p : [0..1] init 0;\n"
        "def M = p -> q : { rate 1 : {x'=1}; end };\nmain M;\n"
    )
    c = build_chain(load_program(src))
    assert c.edges[1] == {1: 1.0}


def test_parallel_edges_merge_by_summing_weights():
    src = (
        "ctmc;\nrole p, q;\nvar x @ p : [0..1] init 0;\n"
        "def M = p -> q : { rate 2 : {x'=1}; end | rate 3 : {x'=1}; end };\n"
        "main M;\n"
    )
    c = build_chain(load_program(src))
    assert c.num_states == 2
    assert c.edges[0] == {1: 5.0}


def test_state_budget_is_enforced(data_text):
    with pytest.raises(StateBudgetExceeded) as exc:
        build_chain(load_program(data_text("example2.chor")), max_states=3)
    assert exc.value.exit_code == 3


def test_initial_overrides_flow_into_the_chain(data_text):
    c = build_chain(
        load_program(data_text("example2.chor")), init_overrides={"x": 3, "y": 1}
    )
    assert c.states[c.init] == (3, 1)
    # (3,1) is also a reachable interior valuation, so the chain shrinks
    assert c.num_states == 4
