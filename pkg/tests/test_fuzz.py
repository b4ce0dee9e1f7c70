from __future__ import annotations

import pytest

from conftest import corpus_path
from proggen import check_program, outcome, random_program
from mdl.engine import Engine


@pytest.mark.parametrize("block", range(10))
def test_modes_agree_on_generated_programs(block):
    kinds = set()
    for seed in range(block * 20, block * 20 + 20):
        ref = check_program(seed)
        kinds.add(ref[0] if ref[0] == "ok" else ref[1])
    assert "ok" in kinds


def test_generator_is_deterministic():
    assert random_program(11) == random_program(11)
    assert random_program(11) != random_program(12)


def test_optimizer_is_exercised():
    e = Engine()
    e.load_file(corpus_path("promotion.mdl"))
    e.load_source(random_program(0), "<fuzz>")
    _, dyn = outcome(e, "dynamic")
    _, opt = outcome(e, "optimized")
    assert opt.dynamic_dispatches < dyn.dynamic_dispatches
