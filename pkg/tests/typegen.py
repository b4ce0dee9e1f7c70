"""Random canonical type terms over the builtin hierarchy."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from mdl.types import BOTTOM, TOP, Const, Exists, Nominal, TupleType, UnionType, Var, base_registry

REG = base_registry()

ATOMS = [Nominal(n) for n in ("Int64", "Float64", "Bool", "String", "Number", "Real", "Integer",
                              "Signed", "AbstractFloat")] + [TOP, BOTTOM]
ABSTRACT_BOUNDS = [TOP] + [Nominal(n) for n in ("Number", "Real", "Integer", "AbstractFloat")]


def random_type(rng: random.Random, depth: int = 2):
    if depth <= 0:
        return rng.choice(ATOMS)
    k = rng.randrange(7)
    if k <= 1:
        return rng.choice(ATOMS)
    if k == 2:
        return REG.canon(Nominal("Array", (random_type(rng, depth - 1), Const(rng.choice((1, 2))))))
    if k == 3:
        return REG.canon(UnionType([random_type(rng, depth - 1) for _ in range(rng.randint(2, 3))]))
    if k == 4:
        n = rng.randint(0, 3)
        va = random_type(rng, depth - 1) if rng.random() < 0.3 else None
        return REG.canon(TupleType([random_type(rng, depth - 1) for _ in range(n)], va))
    if k == 5:
        v = Var("T", BOTTOM, rng.choice(ABSTRACT_BOUNDS))
        return REG.canon(Exists(v, Nominal("Array", (v, Const(rng.choice((1, 2)))))))
    return REG.canon(Nominal("Type", (random_type(rng, depth - 1),)))


types = st.builds(random_type, st.randoms(use_true_random=False), st.integers(0, 3))
