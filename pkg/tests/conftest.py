from __future__ import annotations

import os
import sys

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)
CORPUS = os.path.join(ROOT, "corpus")
sys.path.insert(0, HERE)

from mdl.engine import Engine  # noqa: E402


def corpus_path(name: str) -> str:
    return os.path.join(CORPUS, name)


def engine_from(src: str, **kw) -> Engine:
    e = Engine(**kw)
    e.load_source(src, "<test>")
    return e


def run_all_modes(e: Engine, entry=None, args=(), seed: int = 42):
    """{mode: (value, stats)} for the three execution modes."""
    out = {}
    for mode in ("dynamic", "optimized", "checking"):
        out[mode] = e.run(entry, tuple(args), mode=mode, seed=seed)
    return out


@pytest.fixture(scope="session")
def lu_engine():
    e = Engine()
    e.load_file(corpus_path("lu.mdl"))
    return e
