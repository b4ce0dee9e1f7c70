from __future__ import annotations

import functools
import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_path, engine_from
from mdl import ir as I
from mdl.engine import Engine
from mdl.errors import MdlError
from mdl.infer import FrameResult, Limits
from mdl.types import BOTTOM, TOP, Nominal, TupleType
from typegen import random_type

F64 = Nominal("Float64")
I64 = Nominal("Int64")


@pytest.fixture(scope="module")
def bilinear():
    e = Engine()
    e.load_file(corpus_path("bilinear.mdl"))
    return e


def _slot_types(res, name):
    """Types of every reachable statement that writes the slot called ``name``."""
    irf = res.ir
    out = []
    for b, blk in enumerate(irf.blocks):
        if not res.reachable(b):
            continue
        for i, s in enumerate(blk.stmts):
            if s.dst is not None and irf.slot_names[s.dst] == name:
                out.append(res.stmt_types[b][i])
    return out


def _vmv(e):
    return [e.parse_type(s) for s in ("Vector{Float64}", "Matrix{Float64}", "Vector{Float64}")]


def test_bilinear_stable_accumulator(bilinear):
    e = bilinear
    m, res = e.infer_call("*", _vmv(e))
    assert e.reg.show(res.ret) == "Float64"
    ts = _slot_types(res, "γ")
    assert ts and all(t == F64 for t in ts)


def test_bilinear_unstable_accumulator(bilinear):
    e = bilinear
    m, res = e.infer_call("bilinear_unstable", _vmv(e))
    assert e.reg.show(res.ret) == "Union(Int64,Float64)"
    ts = _slot_types(res, "γ")
    assert e.reg.show(e.reg.union(*ts)) == "Union(Int64,Float64)"


def test_identity_and_promotion(bilinear):
    e = engine_from("ident(x) = x\n")
    assert e.return_type("ident", [I64]) == I64
    b = bilinear
    assert b.return_type("*", [I64, F64]) == F64
    t_int = b.parse_type("Type{Int64}")
    t_flt = b.parse_type("Type{Float64}")
    assert b.reg.show(b.return_type("promote_type", [t_int, t_flt])) == "Type{Float64}"


def test_recursive_factorial():
    e = engine_from("fact(n) = n <= 1 ? 1 : n * fact(n - 1)\n")
    assert e.return_type("fact", [I64]) == I64


def test_mutual_recursion_terminates():
    src = (
        "even(n) = n == 0 ? true : odd(n - 1)\n"
        "odd(n) = n == 0 ? false : even(n - 1)\n"
    )
    e = engine_from(src)
    assert e.reg.show(e.return_type("even", [I64])) == "Bool"


def test_no_method_is_bottom_with_diagnostic():
    e = engine_from("h(x::Int64) = x\nk(s) = h(s)\n")
    _, res = e.infer_call("k", [e.parse_type("String")])
    assert res.ret == BOTTOM
    assert any("no successful method" in d for d in res.diagnostics)


def test_assertion_that_cannot_hold():
    e = engine_from("a(x) = x :: Int64\n")
    _, res = e.infer_call("a", [e.parse_type("String")])
    assert res.ret == BOTTOM
    assert any("always fails" in d for d in res.diagnostics)


def test_non_leaf_arguments_join_over_methods():
    e = engine_from("f(x::Int64) = 1.0\nf(x::Float64) = 1\nf(x::String) = true\n")
    t = e.return_type("f", [e.parse_type("Union(Int64,Float64)")])
    assert e.reg.show(t) == "Union(Int64,Float64)"
    t = e.return_type("f", [e.parse_type("Real")])
    assert e.reg.show(t) == "Union(Int64,Float64)"


def test_union_splitting_limit():
    lim = Limits(max_union=1)
    e2 = Engine(limits=lim)
    e2.load_source("g(x::Int64) = 1\ng(x::Float64) = 2.0\n", "<t>")
    t = e2.return_type("g", [e2.parse_type("Union(Int64,Float64)")])
    assert e2.reg.subtype(e2.reg.union(I64, F64), t)


# -- widening ----------------------------------------------------------------

def test_widen_union_to_common_supertype():
    decls = "".join(f"immutable I{k} <: Signed\n    v::Int64\nend\n" for k in range(5))
    e = engine_from(decls)
    u = e.reg.union(*[e.parse_type(f"I{k}") for k in range(5)])
    assert e.reg.show(e.inferencer.widen(u)) == "Signed"
    u4 = e.reg.union(*[e.parse_type(f"I{k}") for k in range(4)])
    assert e.inferencer.widen(u4) == u4


def test_widen_long_tuple():
    e = Engine()
    t = TupleType([I64] * 9)
    assert e.reg.show(e.inferencer.widen(t)) == "(Int64...,)"
    assert e.inferencer.widen(TupleType([I64] * 8)) == e.reg.canon(TupleType([I64] * 8))
    assert e.inferencer.widen(I64) == I64


def test_widen_deep_parameters():
    e = Engine()
    t = e.parse_type("Array{Array{Array{Array{Float64,1},1},1},1}")
    w = e.inferencer.widen(t)
    assert e.reg.subtype(t, w) and w != t


@functools.lru_cache(maxsize=None)
def _limited(mu, md, mt):
    return Engine(limits=Limits(max_union=mu, max_depth=md, max_tuple=mt), load_base=False)


@settings(max_examples=300, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(1, 4), st.integers(1, 3), st.integers(1, 4))
def test_widen_is_an_upper_bound(rnd, mu, md, mt):
    e = _limited(mu, md, mt)
    t = random_type(rnd, 3)
    w = e.inferencer.widen(t)
    assert e.reg.subtype(t, w)


# -- transfer ----------------------------------------------------------------

def _frame(e, stmt, nslots):
    irf = I.IRFunction("t", nslots, [f"s{k}" for k in range(nslots + 1)], [I.Block([stmt], I.Ret(nslots))])
    return FrameResult(irf, TOP, {}, True)


def _transfer(e, stmt, state):
    res = _frame(e, stmt, len(state))
    return e.inferencer.transfer(stmt, list(state) + [BOTTOM], res, 0, 0, {}, True, {})


def test_transfer_examples():
    e = Engine()
    assert _transfer(e, I.SConvert(1, F64, 0), [I64]) == F64
    u = e.reg.union(I64, F64)
    assert _transfer(e, I.SAssert(1, 0, I64), [u]) == I64
    assert _transfer(e, I.SMove(1, 0), [u]) == u
    assert _transfer(e, I.SConst(1, 2.5), [u]) == F64


def _statements():
    fnames = st.sampled_from(["+", "*", "abs", "getindex", "length", "zero", "==", "max", "size", "sqrt"])
    calls = st.tuples(fnames, st.integers(1, 2)).map(lambda t: I.SCall(2, t[0], [0, 1][: t[1]]))
    simple = st.sampled_from([
        I.SMove(2, 0),
        I.SConvert(2, F64, 0),
        I.SAssert(2, 0, I64),
        I.SAssert(2, 1, Nominal("Real")),
        I.SGetField(2, 0, "data"),
    ])
    return st.one_of(calls, simple)


@settings(max_examples=400, deadline=None)
@given(_statements(), st.randoms(use_true_random=False))
def test_transfer_is_monotone(stmt, rnd):
    e = _MONO
    a = [random_type(rnd, 2) for _ in range(2)]
    b = [random_type(rnd, 2) for _ in range(2)]
    lo = a
    hi = [e.reg.join(x, y) for x, y in zip(a, b)]
    t_lo = _transfer(e, stmt, lo)
    t_hi = _transfer(e, stmt, hi)
    assert e.reg.subtype(t_lo, t_hi), (stmt, [e.reg.show(x) for x in lo], [e.reg.show(x) for x in hi],
                                      e.reg.show(t_lo), e.reg.show(t_hi))


_MONO = Engine()


# -- whole-program properties -------------------------------------------------

CORPUS_FILES = ["bilinear.mdl", "generic_numbers.mdl", "lu.mdl", "outerproduct.mdl", "promotion.mdl",
                "sqrtm_pattern.mdl"]


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_fixpoint_stability(name):
    e = Engine()
    e.load_file(corpus_path(name))
    e.run("main", mode="checking")
    inf = e.inferencer
    assert inf.cache
    for (mid, argtuple), res in list(inf.cache.items()):
        again = inf.run_method(res.method, argtuple)
        assert again.stmt_types == res.stmt_types
        assert e.reg.subtype(again.ret, res.ret)


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_every_corpus_method_infers(name):
    e = Engine()
    e.load_file(corpus_path(name))
    for fname in sorted(e.user_functions):
        for m in e.table.get(fname).methods:
            if m.kind != "user":
                continue
            e.infer_call(fname, list(m.param_types().fixed) if isinstance(m.param_types(), TupleType)
                         and m.param_types().vararg is None and not m.sparams else [TOP] * m.ir.nargs)


def _recursive_program(rng: random.Random) -> str:
    """Mutually recursive functions whose argument types grow with each call."""
    n = rng.randint(1, 3)
    grow = ["(x, x)", "[x]", "x + x", "(x,)", "x * 1.5", "Union", "x"]
    lines = []
    for k in range(n):
        g = rng.choice(grow)
        nxt = f"f{rng.randrange(n)}"
        if g == "Union":
            body = f"d <= 0 ? x : (d % 2 == 0 ? {nxt}(1, d - 1) : {nxt}(1.0, d - 1))"
        else:
            body = f"d <= 0 ? x : {nxt}({g}, d - 1)"
        lines.append(f"f{k}(x, d::Int64) = {body}")
    return "\n".join(lines) + "\n"


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_inference_terminates_on_recursive_programs(rnd):
    src = _recursive_program(rnd)
    e = Engine()
    e.load_file(corpus_path("promotion.mdl"))
    e.load_source(src, "<gen>")
    e.return_type("f0", [I64, I64])
    assert e.inferencer.frames_run < 5000, src


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 4))
def test_recursive_programs_sound(rnd, depth):
    src = _recursive_program(rnd)
    e = Engine()
    e.load_file(corpus_path("promotion.mdl"))
    e.load_source(src, "<gen>")
    rt = e.runtime("checking", out=io.StringIO())
    try:
        rt.run("f0", (1, depth), run_main=False)
    except MdlError:
        pass  # e.g. no method for + on tuples; what ran so far must still be sound
    assert rt.stats.check_violations == []
