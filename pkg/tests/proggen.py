"""Seeded random program generator for the mode-equivalence tests.

Programs mix Int64 and Float64 so that some variables end up with union
types, call small multi-method helpers, index arrays (sometimes out of
bounds) and divide integers (sometimes by zero).  Every generated program
defines ``fz()`` returning a tuple of its live variables.
"""

from __future__ import annotations

import io
import os
import random

from mdl.engine import Engine
from mdl.errors import MdlError
from mdl.values import values_identical

PROMOTION = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "corpus", "promotion.mdl")

HELPERS = """
h1(a::Int64, b::Int64) = a * 2 - b
h1(a::Float64, b) = a / 2.0 + b
h1(a, b::Float64) = a - b * 0.5
h1(a::Float64, b::Float64) = a * b
function h2(a, n::Int64)
    s = a
    for i = 1:n
        s = s + i
    end
    s
end
h3(x::Int64) = x % 7 == 0 ? 1.5 : x
h3(x::Float64) = x < 0.0 ? -x : x
"""


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.vars: list = []
        self.lines: list = []
        self.depth = 0

    def lit(self) -> str:
        r = self.rng
        if r.random() < 0.5:
            return str(r.randint(-9, 9))
        return repr(round(r.uniform(-9, 9), 2))

    def atom(self) -> str:
        r = self.rng
        if self.vars and r.random() < 0.7:
            return r.choice(self.vars)
        return self.lit()

    def expr(self, d: int = 0) -> str:
        r = self.rng
        if d >= 2 or r.random() < 0.3:
            return self.atom()
        k = r.randrange(9)
        a, b = self.expr(d + 1), self.expr(d + 1)
        if k <= 2:
            return f"({a} {r.choice('+-*')} {b})"
        if k == 3:
            return f"h1({a}, {b})"
        if k == 4:
            return f"h2({a}, {r.randint(0, 4)})"
        if k == 5:
            return f"h3({a})"
        if k == 6:
            return f"abs({a})"
        if k == 7:
            return f"div({r.randint(-20, 20)}, {r.randint(-2, 3)})"
        return f"A[{r.randint(1, 5)}]"

    def cond(self) -> str:
        return f"{self.expr(1)} {self.rng.choice(['<', '<=', '==', '!='])} {self.expr(1)}"

    def emit(self, s: str):
        self.lines.append("    " * (self.depth + 1) + s)

    def stmt(self):
        r = self.rng
        k = r.randrange(10)
        if k <= 4 or self.depth >= 2:
            if self.depth > 0 or (self.vars and r.random() < 0.5):
                v = r.choice(self.vars)
            else:
                v = f"x{len(self.vars)}"
            self.emit(f"{v} = {self.expr()}")
            if v not in self.vars and self.depth == 0:
                self.vars.append(v)
        elif k <= 6 and self.vars:
            self.emit(f"if {self.cond()}")
            self._block()
            if r.random() < 0.6:
                self.emit("else")
                self._block()
            self.emit("end")
        elif k <= 8 and self.vars:
            self.emit(f"for i = 1:{r.randint(0, 5)}")
            self._block()
            self.emit("end")
        else:
            self.emit(f"A[{r.randint(1, 4)}] = {self.expr()}")

    def _block(self):
        # only reassign variables that are already defined, so every path
        # leaves the same set of names bound
        self.depth += 1
        for _ in range(self.rng.randint(1, 3)):
            self.stmt()
        self.depth -= 1


def random_program(seed: int) -> str:
    g = _Gen(random.Random(seed))
    g.emit("A = zeros(4)")
    g.emit(f"x0 = {g.lit()}")
    g.vars.append("x0")
    for _ in range(g.rng.randint(3, 10)):
        g.stmt()
    g.emit("(" + ", ".join(g.vars + ["A"]) + ",)")
    return HELPERS + "function fz()\n" + "\n".join(g.lines) + "\nend\n"


def outcome(engine, mode, entry="fz", args=()):
    """(("ok", value) or ("error", kind), stats) for one call."""
    rt = engine.runtime(mode, 42, io.StringIO())
    try:
        return ("ok", rt.run(entry, tuple(args), run_main=False)), rt.stats
    except MdlError as e:
        return ("error", e.kind), rt.stats


def same_outcome(a, b) -> bool:
    return a[0] == b[0] and (values_identical(a[1], b[1]) if a[0] == "ok" else a[1] == b[1])


def check_program(seed: int):
    """Dynamic outcome of program ``seed``, after asserting the other modes agree with it."""
    e = Engine()
    e.load_file(PROMOTION)
    e.load_source(random_program(seed), "<fuzz>")
    ref, _ = outcome(e, "dynamic")
    for mode in ("optimized", "checking"):
        got, stats = outcome(e, mode)
        assert same_outcome(ref, got), (seed, mode, ref, got)
        assert stats.check_violations == [], (seed, stats.check_violations[:1])
    return ref
