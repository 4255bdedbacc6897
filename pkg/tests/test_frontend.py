"""Surface syntax: parsing, pretty-printing, family expansion, the
guarded-choice table lowering, and automatic labelling."""

from __future__ import annotations

import pytest

from chorprism import (
    ParseError,
    auto_annotate,
    expand_foreach,
    expand_indices,
    load_program,
    parse,
    pretty_print,
)
from chorprism.errors import IndexOutOfFamily
from chorprism.parser import term_to_str
from chorprism.sugar import branch_label, surface_to_core
from chorprism.syntax import (
    Assign,
    Binary,
    CallTerm,
    Conditional,
    Inact,
    Interaction,
    Lit,
    Var,
    subterms,
)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def test_parse_recursive_exchange_structure(data_text):
    prog = load_program(data_text("example2.chor"))
    assert prog.kind == "ctmc"
    assert prog.roles == ("p", "q")
    assert prog.constants == {"lambda1": 2, "lambda2": 3}
    x = prog.var("x")
    assert (x.owner, x.lo, x.hi, x.init) == ("p", 0, 3, 0)
    y = prog.var("y")
    assert (y.owner, y.lo, y.hi, y.init) == ("q", 0, 2, 0)

    body = prog.defs["C"]
    assert isinstance(body, Interaction)
    assert body.initiator == "p" and body.receivers == ("q",)
    b1, b2 = body.branches
    assert b1.weight == Var("lambda1")
    assert b1.update == (Assign("x", Lit(1)), Assign("y", Lit(2)))
    assert b1.cont == CallTerm("C")
    assert b2.weight == Var("lambda2")
    assert b2.update == (Assign("x", Lit(3)), Assign("y", Lit(1)))
    assert prog.main == "C"


def test_parse_keeps_branch_labels_and_annotations(data_text):
    prog = load_program(data_text("annot_ok.chor"))
    outer = prog.defs["Main"]
    assert outer.annotation == "a"
    inner = [
        t for t in subterms(outer)
        if isinstance(t, Interaction) and t.annotation == "b"
    ]
    assert len(inner) == 1

    tt = load_program(data_text("thinkteam.chor"))
    labels = [b.label for b in tt.defs["C0"].branches]
    assert labels == ["MMHOL", "FFSFW"]


def test_self_message_normalizes_to_no_receivers():
    prog = load_program(
        "ctmc;\nrole p;\nvar x @ p : [0..1] init 0;\n"
        "def M = p -> p : { rate 1 : {x'=1}; end };\nmain M;\n"
    )
    t = prog.defs["M"]
    assert t.initiator == "p" and t.receivers == ()


def test_operator_precedence_and_floor_division():
    prog = load_program(
        "ctmc;\nrole p, q;\nvar x @ p : [0..9] init 0;\n"
        "def M = if x+1*2 = 3 and not x>5 @ p then { end } else { end };\nmain M;\n"
    )
    g = prog.defs["M"].guard
    # and(=(+(x, *(1,2)), 3), not(>(x,5)))
    assert g.op == "and"
    assert g.left == Binary("=", Binary("+", Var("x"), Binary("*", Lit(1), Lit(2))), Lit(3))
    assert g.right.op == "not" and g.right.operand == Binary(">", Var("x"), Lit(5))


@pytest.mark.parametrize(
    "src",
    [
        "ctmc\nrole p;",  # missing semicolon after the kind
        "ctmc;\nrole p\ndef M = end;\nmain M;",  # missing semicolon after roles
        "ctmc;\nrole p, q;\ndef M = p -> ;\nmain M;",
        "ctmc;\nrole p, q;\ndef M = p -> q : { rate 1 {}; end };\nmain M;",
        "ctmc;\nrole p, q;\ndef M = end;\nmain M",  # missing final semicolon
        "ctmc;\nrole p, q;\ndef M = end;\n$$$\nmain M;",
    ],
)
def test_parse_errors_carry_positions(src):
    with pytest.raises(ParseError) as exc:
        parse(src)
    assert exc.value.exit_code == 2
    # positions are part of the message, "line:col: reason"
    head = str(exc.value).split(" ")[0]
    assert head.count(":") == 2


def test_comments_and_whitespace_are_ignored(data_text):
    stripped = "\n".join(
        line for line in data_text("example2.chor").splitlines()
        if not line.lstrip().startswith("//")
    )
    assert load_program(stripped) == load_program(data_text("example2.chor"))


# ---------------------------------------------------------------------------
# pretty-printer round trips
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "name",
    [
        "example1.chor",
        "example2.chor",
        "example2_dtmc.chor",
        "thinkteam.chor",
        "sconn_pos.chor",
        "annot_ok.chor",
        "allsynch.chor",
        "parametric.chor",
        "p2p.chor",
    ],
)
def test_pretty_print_round_trips(name, data_text):
    prog = load_program(data_text(name))
    assert load_program(pretty_print(prog)) == prog
    annotated = auto_annotate(prog)
    assert load_program(pretty_print(annotated)) == annotated


# ---------------------------------------------------------------------------
# indexed families
# ---------------------------------------------------------------------------

def test_expand_indices_order_and_wraparound(data_text):
    prog = load_program(data_text("parametric.chor"))
    assert prog.roles == ("p1", "p2", "p3", "q1", "q2", "q3")
    assert [d.name for d in prog.var_decls] == ["x1", "x2", "x3"]
    assert [d.owner for d in prog.var_decls] == ["p1", "p2", "p3"]

    pairs = [
        (t.initiator, t.receivers[0])
        for t in subterms(prog.defs["X"])
        if isinstance(t, Interaction)
    ]
    # one block per instantiation of the pings, then the wrapped-around replies
    assert pairs == [
        ("p1", "q1"), ("p2", "q2"), ("p3", "q3"),
        ("q2", "p1"), ("q3", "p2"), ("q1", "p3"),
    ]


def test_expand_indices_is_idempotent(data_text):
    surf = expand_indices(parse(data_text("parametric.chor")))
    assert expand_indices(surf).defs == surf.defs


def test_literal_index_out_of_range_is_an_error():
    src = (
        "ctmc;\nrole c[1..2], m;\n"
        "def M = c[3] -> m : { rate 1 : {}; end };\nmain M;\n"
    )
    with pytest.raises(IndexOutOfFamily):
        load_program(src)


def test_foreach_expands_over_the_family_range():
    src = (
        "ctmc;\nrole c[1..3], m;\n"
        "var f[1..3] @ c[i] : [0..1] init 0;\n"
        "def M = c[1] -> m : { rate 1 : { foreach (j <= 2) f[j]'=1 }; end };\n"
        "main M;\n"
    )
    surf = expand_foreach(expand_indices(parse(src)))
    upd = surf.defs["M"].branches[0].update
    assert upd == (Assign("f1", Lit(1)), Assign("f2", Lit(1)))


# ---------------------------------------------------------------------------
# guarded-choice tables
# ---------------------------------------------------------------------------

def test_allsynch_lowers_to_nested_conditionals(data_text):
    prog = load_program(data_text("allsynch.chor"))
    t = prog.defs["Main"]

    assert isinstance(t, Conditional)
    assert (t.guard, t.role) == (Binary("=", Var("x"), Lit(5)), "p")

    inner = t.then_term
    assert isinstance(inner, Conditional)
    assert (inner.guard, inner.role) == (Binary("=", Var("y"), Lit(1)), "q")
    hit = inner.then_term
    assert isinstance(hit, Interaction)
    assert (hit.initiator, hit.receivers) == ("p", ("q",))
    (b,) = hit.branches
    assert b.weight == Lit(10)
    assert b.update == (Assign("x", Lit(0)), Assign("y", Lit(0)))
    assert b.cont == Inact()
    assert inner.else_term == Inact()

    low = t.else_term
    assert isinstance(low, Conditional)
    assert (low.guard, low.role) == (Binary("=", Var("x"), Lit(1)), "p")
    hit2 = low.then_term.then_term
    (b2,) = hit2.branches
    assert b2.weight == Lit(5)
    assert b2.update == (Assign("x", Lit(100)), Assign("y", Lit(0)))
    assert low.else_term == Inact()


def test_allsynch_matches_its_manual_expansion(data_text):
    # the behaviour of the lowered table equals the hand-written cascade
    manual = """
    ctmc;
    role p, q;
    var x @ p : [0..100] init 5;
    var y @ q : [0..1] init 1;
    def Main =
      if x=5 @ p then {
        if y=1 @ q then { p -> q : { rate 10 : {x'=0, y'=0}; end } } else { end }
      } else {
        if x=1 @ p then {
          if y=1 @ q then { p -> q : { rate 5 : {x'=100, y'=0}; end } } else { end }
        } else { end }
      };
    main Main;
    """
    assert load_program(data_text("allsynch.chor")) == load_program(manual)


def test_allsynch_true_guard_short_circuits():
    src = (
        "ctmc;\nrole p, q;\n"
        "var x @ p : [0..1] init 0;\nvar y @ q : [0..1] init 0;\n"
        "def M = allsynch { p : true -> rate 2 : {x'=1}\n"
        "                 | q : true -> rate 1 : {y'=1} }; end;\n"
        "main M;\n"
    )
    t = load_program(src).defs["M"]
    # no conditional survives: both ladders collapse onto the interaction
    assert isinstance(t, Interaction)
    (b,) = t.branches
    assert b.weight == Lit(2)
    assert b.update == (Assign("x", Lit(1)), Assign("y", Lit(1)))


# ---------------------------------------------------------------------------
# labelling
# ---------------------------------------------------------------------------

def test_auto_annotate_numbers_interactions_in_preorder(data_text):
    prog = auto_annotate(load_program(data_text("sconn_pos.chor")))
    anns = [
        t.annotation for t in subterms(prog.defs["X"]) if isinstance(t, Interaction)
    ]
    assert anns == ["A1", "A2"]


def test_auto_annotate_keeps_existing_and_avoids_collisions():
    src = (
        "ctmc;\nrole p, q;\n"
        "def M = p -> q : [A2] { rate 1 : {};"
        " p -> q : { rate 1 : {}; end } };\nmain M;\n"
    )
    prog = auto_annotate(load_program(src))
    anns = [
        t.annotation for t in subterms(prog.defs["M"]) if isinstance(t, Interaction)
    ]
    assert anns == ["A2", "A1"]


def test_seeded_labels_are_reproducible(data_text):
    prog = load_program(data_text("example2.chor"))
    a = auto_annotate(prog, scheme="seeded-random", seed=7)
    b = auto_annotate(prog, scheme="seeded-random", seed=7)
    assert a == b
    ann = a.defs["C"].annotation
    assert len(ann) == 5 and ann.isalpha() and ann.isupper()
    c = auto_annotate(prog, scheme="seeded-random", seed=8)
    assert c.defs["C"].annotation != ann


def test_branch_labels_derive_from_the_annotation(data_text):
    prog = auto_annotate(load_program(data_text("example2.chor")))
    t = prog.defs["C"]
    assert branch_label(t, 0) == f"{t.annotation}_1"
    assert branch_label(t, 1) == f"{t.annotation}_2"

    tt = load_program(data_text("thinkteam.chor"))
    assert branch_label(tt.defs["C0"], 0) == "MMHOL"
    assert branch_label(tt.defs["C2"], 1) == "XWSAO"
