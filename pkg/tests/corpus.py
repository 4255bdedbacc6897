"""Seeded generator of small choreographies for round-trip checking.

The draw is deliberately tame: at most three roles, two branches per
exchange, two definitions, nesting depth four, variables over [0..3].
Every exchange involves all declared roles, so the recursion stays
strongly connected and no role can run ahead while another is still
finishing bookkeeping.  Continuous rates avoid the value 1, which the
administrative-move contraction would mistake for bookkeeping whenever
the update happens to leave the observation unchanged.  Updates assign
each variable at most once per branch.

``random_program_pair`` returns the same skeleton twice — once with
rates, once with probabilities — so a property run can exercise both
model kinds on identical control structure.
"""

from __future__ import annotations

import random

from chorprism.syntax import (
    Assign,
    Binary,
    Branch,
    CallTerm,
    ChorProgram,
    Inact,
    Interaction,
    Lit,
    Var,
    VarDecl,
)

ROLE_NAMES = ("p", "q", "r")
VAR_NAMES = ("u", "v", "w")

CTMC_RATES = (0.5, 1.5, 2.0, 2.5, 3.0)
DTMC_SPLITS = ((0.5, 0.5), (0.25, 0.75), (0.75, 0.25), (0.375, 0.625))


def random_program_pair(rng: random.Random) -> tuple[ChorProgram, ChorProgram]:
    n_roles = rng.randint(1, 3)
    roles = ROLE_NAMES[:n_roles]
    names = VAR_NAMES[:n_roles]
    var_decls = tuple(
        VarDecl(names[i], roles[i], rng.randint(0, 3), 0, 3)
        for i in range(n_roles)
    )
    def_names = ("Main", "Aux")[: rng.randint(1, 2)]

    def update() -> tuple[Assign, ...]:
        out = []
        for v in rng.sample(names, rng.randint(0, min(2, len(names)))):
            if rng.random() < 0.5:
                out.append(Assign(v, Lit(rng.randint(0, 3))))
            else:
                out.append(
                    Assign(v, Binary("mod", Binary("+", Var(v), Lit(1)), Lit(4)))
                )
        return tuple(out)

    def tail():
        if rng.random() < 0.6:
            return CallTerm(rng.choice(def_names))
        return Inact()

    def body(depth: int):
        if depth == 0:
            t = tail()
            return t, t
        initiator = rng.choice(roles)
        receivers = tuple(x for x in roles if x != initiator)
        n = rng.randint(1, 2)
        rates = tuple(rng.choice(CTMC_RATES) for _ in range(n))
        probs = (1.0,) if n == 1 else rng.choice(DTMC_SPLITS)
        cbranches, dbranches = [], []
        for j in range(n):
            upd = update()
            ccont, dcont = body(depth - 1 if rng.random() < 0.7 else 0)
            cbranches.append(Branch(Lit(rates[j]), upd, ccont))
            dbranches.append(Branch(Lit(probs[j]), upd, dcont))
        return (
            Interaction(initiator, receivers, tuple(cbranches)),
            Interaction(initiator, receivers, tuple(dbranches)),
        )

    cdefs, ddefs = {}, {}
    for name in def_names:
        cdefs[name], ddefs[name] = body(rng.randint(1, 4))
    main = def_names[0]
    return (
        ChorProgram("ctmc", roles, {}, var_decls, cdefs, main),
        ChorProgram("dtmc", roles, {}, var_decls, ddefs, main),
    )


def random_program(rng: random.Random, kind: str) -> ChorProgram:
    pair = random_program_pair(rng)
    return pair[0] if kind == "ctmc" else pair[1]
