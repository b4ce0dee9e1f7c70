from __future__ import annotations

import pytest

from conftest import corpus_path, engine_from
from mdl import ir as I
from mdl.engine import Engine, OptOptions
from mdl.types import TupleType
from mdl.values import to_json


def _opt(e, fname, argtypes):
    at = e.parse_argtypes(argtypes)
    m, _ = e.table.dispatch(fname, at)
    inst = e.specialize(m, e.reg.canon(TupleType(at)))
    return e.optimized(inst), inst.report


def _stmts(irf):
    return [s for b in irf.blocks for s in b.stmts]


@pytest.fixture(scope="module")
def promo():
    e = Engine()
    e.load_file(corpus_path("promotion.mdl"))
    e.load_source(
        "g(x::Int64) = x + 1\n"
        "h() = undefined_thing(1)\n"
        "function emp()\nend\n"
        "fact(n) = n <= 1 ? 1 : n * fact(n - 1)\n"
        "m(x::Int64, y::Float64) = x * y\n"
        "function poly(x::Float64)\n    y = 3.0 * x\n    y * y + 1.0\nend\n",
        "<opt>",
    )
    return e


def test_wrapper_call_disappears(promo):
    irf, rep = _opt(promo, "g", "Int64")
    assert not any(isinstance(s, (I.SCall, I.SDirect)) for s in _stmts(irf))
    assert [s.name for s in _stmts(irf) if isinstance(s, I.SIntr)] == ["add_int"]
    assert rep.inlined == 1


def test_promotion_chain_collapses(promo):
    irf, rep = _opt(promo, "m", "Int64, Float64")
    assert not any(isinstance(s, (I.SCall, I.SDirect)) for s in _stmts(irf))
    names = [s.name for s in _stmts(irf) if isinstance(s, I.SIntr)]
    assert "sitofp" in names and "mul_float" in names


def test_recursive_target_not_inlined(promo):
    irf, rep = _opt(promo, "fact", "Int64")
    direct = [s for s in _stmts(irf) if isinstance(s, I.SDirect)]
    assert [s.fname for s in direct] == ["fact"]
    assert rep.dynamic == 0


def test_empty_function(promo):
    irf, rep = _opt(promo, "emp", "")
    assert rep.total_sites == 0 and rep.ratio == 1.0
    assert len(_stmts(irf)) == 1


def test_unknown_function(promo):
    _, rep = _opt(promo, "h", "")
    assert (rep.resolved, rep.dynamic) == (0, 1)
    assert rep.reasons == {"unknown-function": 1}


def test_monomorphic_kernel_fully_resolved(promo):
    _, rep = _opt(promo, "poly", "Float64")
    assert rep.dynamic == 0 and rep.total_sites > 0


def test_union_receiver_stays_dynamic():
    e = Engine()
    e.load_file(corpus_path("bilinear.mdl"))
    rep = e.report("bilinear_unstable", e.parse_argtypes("Vector{Float64}, Matrix{Float64}, Vector{Float64}"))
    plus = [s for s in rep.sites if s.fname == "+" and "Union" in s.argtypes]
    assert plus and all(s.status == "dynamic" for s in plus)
    stable = e.report("*", e.parse_argtypes("Vector{Float64}, Matrix{Float64}, Vector{Float64}"))
    assert stable.dynamic == 0


def test_lu_pivot_comparison_devirtualized(lu_engine):
    rep = lu_engine.report("lucompletepiv!", lu_engine.parse_argtypes("Matrix{Float64}"))
    ne = [s for s in rep.sites if s.fname in ("!=", "≠")]
    assert ne and all(s.status == "resolved" for s in ne)
    assert rep.ratio >= 0.9


def test_devirtualization_disabled():
    e = Engine(opts=OptOptions(devirt=False))
    e.load_file(corpus_path("lu.mdl"))
    rep = e.report("lucompletepiv!", e.parse_argtypes("Matrix{Float64}"))
    assert rep.resolved == 0 and rep.ratio == 0.0
    assert set(rep.reasons) == {"disabled"}


CORPUS = ["bilinear.mdl", "generic_numbers.mdl", "lu.mdl", "outerproduct.mdl", "promotion.mdl",
          "sqrtm_pattern.mdl"]


def _all_reports(path, **opts):
    e = Engine(opts=OptOptions(**opts))
    e.load_file(corpus_path(path))
    e.run("main", mode="optimized")
    out = {}
    for inst in list(e.instances.values()):
        if inst.report is not None:
            out[(inst.method.fname, e.reg.show(inst.argtypes), inst.method.line)] = inst.report
    return out


@pytest.mark.parametrize("path", CORPUS)
def test_report_counts_consistent(path):
    for rep in _all_reports(path).values():
        assert rep.resolved + rep.dynamic == rep.total_sites
        assert min(rep.resolved, rep.dynamic, rep.inlined) >= 0
        assert sum(rep.reasons.values()) == rep.dynamic
        assert len(rep.sites) == rep.total_sites


@pytest.mark.parametrize("path", CORPUS)
def test_inlining_keeps_site_classification(path):
    with_inline = _all_reports(path)
    without = _all_reports(path, inline=False)
    common = set(with_inline) & set(without)
    assert common
    for k in common:
        a, b = with_inline[k], without[k]
        assert [(s.block, s.index, s.status, s.reason) for s in a.sites] == \
               [(s.block, s.index, s.status, s.reason) for s in b.sites]


@pytest.mark.parametrize("inline_max", [0, 4, 24, 200])
def test_inline_threshold_preserves_results(inline_max, lu_engine):
    e = Engine(opts=OptOptions(inline_max=inline_max))
    e.load_file(corpus_path("lu.mdl"))
    a, _ = e.run("lu_random", (8,), mode="optimized", run_main=False)
    b, _ = lu_engine.run("lu_random", (8,), mode="dynamic", run_main=False)
    assert to_json(a) == to_json(b)


def test_optimized_equals_dynamic_on_floats():
    e = engine_from(
        "function acc(n::Int64)\n"
        "    s = 0.0\n"
        "    for i = 1:n\n"
        "        s = s + 0.1 / (s + 1.0) - s * 1e-3\n"
        "    end\n"
        "    s\n"
        "end\n"
    )
    a, _ = e.run("acc", (500,), mode="dynamic")
    b, _ = e.run("acc", (500,), mode="optimized")
    assert a == b  # same operation order, so bit-identical
