from __future__ import annotations

import random

import pytest
from hypothesis import given, settings

from lattice_oracle import oracle_subtype, random_hierarchy, random_term
from mdl.errors import DeclarationMissing, MalformedType, UnsupportedError
from mdl.lower import parse_type_string
from mdl.types import BOTTOM, TOP, Const, Nominal, TupleType, TypeRegistry, UnionType, Var
from typegen import REG, types

N = Nominal
INT, FLT = N("Int64"), N("Float64")


def T(s):
    return parse_type_string(s, REG)


def fig2_registry():
    r = TypeRegistry()
    r.declare("Nat")
    r.declare("One", supertype=N("Nat"), kind="tag")
    r.declare("Two", supertype=N("Nat"), kind="tag")
    r.declare("S", params=(Var("T"),), kind="tag")
    return r


# ---- subtype examples

def test_float_is_real():
    assert REG.subtype(FLT, N("Real"))
    assert not REG.subtype(N("Real"), FLT)


def test_parametric_invariance_fig2():
    r = fig2_registry()
    assert r.subtype(N("One"), N("Nat"))
    assert not r.subtype(N("S", (N("One"),)), N("S", (N("Nat"),)))
    assert not r.subtype(N("S", (N("Nat"),)), N("S", (N("One"),)))


def test_tuple_against_vararg_union():
    idx = REG.union(INT, T("Range{Int64}"), T("UnitRange{Int64}"))
    assert REG.subtype(TupleType([INT, INT]), TupleType([], idx))
    assert REG.subtype(TupleType([]), TupleType([], idx))
    assert not REG.subtype(TupleType([INT, FLT]), TupleType([], idx))


def test_existential_right_needs_witness():
    assert REG.subtype(T("Array{Float64,1}"), T("AbstractVector{T} where T<:Real"))
    assert not REG.subtype(T("Array{String,1}"), T("AbstractVector{T} where T<:Real"))
    assert not REG.subtype(T("AbstractVector{T} where T<:Real"), T("Array{Float64,1}"))


def test_union_left_is_forall_right_is_exists():
    u = REG.union(INT, FLT)
    assert REG.subtype(u, N("Real"))
    assert not REG.subtype(u, N("Integer"))
    assert REG.subtype(INT, u)


def test_unknown_name_and_bad_arity():
    with pytest.raises(DeclarationMissing):
        REG.canon(N("Nope"))
    with pytest.raises(DeclarationMissing):
        REG.subtype(N("Nope"), N("Number"))
    with pytest.raises(MalformedType):
        REG.canon(N("Array", (INT,)))


# ---- meet and join

def test_meet_examples():
    assert REG.meet(INT, FLT) == BOTTOM
    assert REG.meet(N("Real"), INT) == INT
    assert REG.meet(FLT, TOP) == FLT
    assert REG.meet(REG.union(INT, FLT, N("String")), N("Real")) == REG.union(INT, FLT)


def test_join_examples():
    assert REG.show(REG.join(INT, FLT)) == "Union(Int64,Float64)"
    assert REG.join(BOTTOM, FLT) == FLT
    assert REG.join(INT, INT) == INT
    assert REG.join(INT, N("Real")) == N("Real")


def test_union_canonical_order_is_syntactic():
    a = REG.canon(UnionType([FLT, INT]))
    b = REG.canon(UnionType([INT, UnionType([FLT, BOTTOM]), INT]))
    assert a == b and isinstance(a, UnionType)
    assert len(a.members) == 2


# ---- leaves and instance counting

def test_is_leaf_fig2():
    r = fig2_registry()
    assert r.is_leaf(N("S", (TOP,)))
    assert not r.is_leaf(r.bare("S"))
    assert not r.is_leaf(r.union(N("One"), N("Two")))
    assert r.is_leaf(N("One"))
    assert not r.is_leaf(N("Nat"))


def test_count_instances_fig2():
    assert fig2_registry().count_instances("S") == 5


def test_count_instances_small_universes():
    r = TypeRegistry()
    r.declare("S", params=(Var("T"),), kind="tag")
    assert r.count_instances("S") == 2
    r.declare("K", kind="tag")
    assert r.count_instances("K") == 1


def test_count_instances_infinite_universe():
    r = fig2_registry()
    r.declare("P", params=(Var("T"),), kind="tag")
    with pytest.raises(UnsupportedError):
        r.count_instances("S")


def test_tuple_leafness():
    assert REG.is_leaf(TupleType([INT, FLT]))
    assert not REG.is_leaf(TupleType([INT], FLT))
    assert not REG.is_leaf(TupleType([N("Real")]))


# ---- declarations

def test_tag_types_cannot_be_supertypes():
    r = fig2_registry()
    with pytest.raises(MalformedType):
        r.declare("Three", supertype=N("One"), kind="tag")


def test_redeclaration_rejected():
    r = fig2_registry()
    with pytest.raises(MalformedType):
        r.declare("Nat")


# ---- printing

@given(types)
@settings(max_examples=200, deadline=None)
def test_print_parse_roundtrip(t):
    assert parse_type_string(REG.show(t), REG) == t


def test_const_params_print():
    assert REG.show(N("Array", (FLT, Const(2)))) == "Array{Float64,2}"


# ---- lattice laws

@given(types)
@settings(max_examples=200, deadline=None)
def test_reflexive(t):
    assert REG.subtype(t, t)
    assert REG.subtype(BOTTOM, t) and REG.subtype(t, TOP)


@given(types, types, types)
@settings(max_examples=300, deadline=None)
def test_transitive(a, b, c):
    if REG.subtype(a, b) and REG.subtype(b, c):
        assert REG.subtype(a, c)


@given(types, types)
@settings(max_examples=300, deadline=None)
def test_antisymmetric_on_canonical_forms(a, b):
    if REG.subtype(a, b) and REG.subtype(b, a):
        assert REG.canon(a) == REG.canon(b)


@given(types, types)
@settings(max_examples=300, deadline=None)
def test_meet_is_lower_bound(a, b):
    m = REG.meet(a, b)
    assert REG.subtype(m, a) and REG.subtype(m, b)


@given(types, types)
@settings(max_examples=300, deadline=None)
def test_join_is_upper_bound(a, b):
    j = REG.join(a, b)
    assert REG.subtype(a, j) and REG.subtype(b, j)
    if REG.subtype(a, b):
        assert REG.subtype(j, b)


@given(types, types)
@settings(max_examples=300, deadline=None)
def test_invariance(x, y):
    if REG.subtype(x, y) and not REG.subtype(y, x):
        assert not REG.subtype(N("Array", (x, Const(1))), N("Array", (y, Const(1))))
        assert not REG.subtype(N("Type", (x,)), N("Type", (y,)))


@given(types)
@settings(max_examples=200, deadline=None)
def test_canon_idempotent(t):
    assert REG.canon(REG.canon(t)) == REG.canon(t)


# ---- exhaustive oracle on small hierarchies

@pytest.mark.parametrize("seed", range(12))
def test_subtype_matches_bruteforce_oracle(seed):
    rng = random.Random(seed)
    u = random_hierarchy(rng)
    assert len(u.reg.decls) <= 6
    outcomes = set()
    for _ in range(80):
        a, b = random_term(u, rng), random_term(u, rng)
        want = oracle_subtype(u, a, b)
        assert u.reg.subtype(a, b) == want, (u.reg.show(a), u.reg.show(b))
        outcomes.add(want)
    # also every term against itself and its params
    for p in u.params:
        assert u.reg.subtype(p, p) == oracle_subtype(u, p, p)
