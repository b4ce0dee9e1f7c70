"""Lowering preserves meaning: the AST reference evaluator agrees with IR execution."""

from __future__ import annotations

import io
import warnings

import pytest

from ast_eval import AstEngine
from conftest import CORPUS
from proggen import PROMOTION, random_program, same_outcome
from mdl.corpus import corpus_files
from mdl.errors import MdlError

FILES = list(corpus_files(CORPUS))


def run_both(engine, entry, args=(), run_main=False):
    """Outcomes, stats and printed output from the IR runtime and the AST evaluator."""
    res = []
    for rt in (engine.runtime("dynamic", 42, io.StringIO()), engine.ast_runtime(42)):
        try:
            got = ("ok", rt.run(entry, tuple(args), run_main=run_main))
        except MdlError as e:
            got = ("error", e.kind)
        res.append((got, rt.stats, rt.out.getvalue()))
    return res


def assert_agree(engine, entry, args=(), run_main=False):
    (a, sa, oa), (b, sb, ob) = run_both(engine, entry, args, run_main)
    assert same_outcome(a, b), (entry, args, a, b)
    assert oa == ob
    assert (sa.allocations, sa.allocated_cells, sa.probes) == (sb.allocations, sb.allocated_cells, sb.probes)
    assert sa.dynamic_dispatches == sb.dynamic_dispatches
    return a


def load(path=None, src=None):
    e = AstEngine()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if path:
            e.load_file(path)
        if src:
            e.load_source(src, "<test>")
    return e


@pytest.mark.parametrize("cf", FILES, ids=[cf.name for cf in FILES])
def test_corpus_manifest_calls_agree(cf):
    e = load(cf.path)
    calls = [(r["entry"], r.get("args", [])) for r in cf.manifest.get("runs", []) + cf.manifest.get("errors", [])]
    assert calls
    for entry, args in calls:
        assert_agree(e, entry, args)
    if e.default_entry():
        assert_agree(e, None, (), run_main=True)


def test_lu_agrees_on_random_input():
    e = load(f"{CORPUS}/lu.mdl")
    for entry in ("lu_random", "lu_random_opt"):
        assert assert_agree(e, entry, (6,))[0] == "ok"


@pytest.mark.parametrize("seed", range(0, 60))
def test_generated_programs_agree(seed):
    e = load(PROMOTION, random_program(seed))
    assert_agree(e, "fz")


CONTROL = """
type Box
    v::Float64
end

function loops(n)
    acc = 0
    for i = 1:n, j = 1:n
        if j > i
            break
        end
        if (i + j) % 2 == 0
            continue
        end
        acc += i * j
    end
    k = 0
    while true
        k += 1
        if k >= 3
            break
        end
    end
    (acc, k)
end

function declared(x)
    y::Float64 = x
    y = 2
    b = Box(1)
    b.v += 3.0
    (y, b.v)
end

function caught(a)
    msg = "none"
    try
        a[10]
    catch err
        msg = err
    end
    try
        error("boom")
    catch
        msg = string(msg, "!")
    end
    msg
end

first_of(xs...) = xs[1]
count_args(xs...) = length(xs)
pick{T}(x::Vector{T}) = T
function ends(v)
    t = (v[end], v[end - 1])
    p, q = t
    first_of(t...) + count_args(p, q, 1) + q
end

function early(n)
    n < 0 && return -1
    n == 0 ? 0 : (n > 5 || return 5)
    10
end

main() = (loops(4), declared(1), caught([1, 2]), pick([1.0]), ends([1, 2, 3]), early(-2), early(3), early(9))
"""


def test_control_flow_program_agrees():
    e = load(src=CONTROL)
    got = assert_agree(e, "main")
    assert got[0] == "ok"
    loops, declared, caught, pick, ends, *early = got[1]
    assert loops == (24, 3)
    assert declared == (2.0, 4.0)
    assert caught.startswith("BoundsError") and caught.endswith("!")
    assert pick.t == e.parse_type("Float64")
    assert ends == 8
    assert early == [-1, 5, 10]


def test_top_level_statements_agree():
    e = load(src="x = 3\nfor i = 1:4\n    x = x * i\nend\nprintln(x)\n")
    assert_agree(e, None, (), run_main=True)


def test_reference_evaluator_does_not_use_lowered_code():
    e = load(f"{CORPUS}/generic_numbers.mdl")
    rt = e.ast_runtime()
    rt.run(e.default_entry(), (), run_main=True)
    assert rt.stats.dynamic_dispatches > 0
    compiled = {mid for mid, _ in rt._method_code}
    kinds = {m.kind for gf in e.table.functions.values() for m in gf.methods if m.id in compiled}
    assert kinds <= {"constructor"}
