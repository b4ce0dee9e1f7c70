"""Primitive operations with their runtime implementations and transfer functions.

``impl(ctx, *args)`` runs the operation; ``tfunc(inf, argtypes)`` gives a sound
result type.  ``pure`` marks operations that have no effects and never throw,
which makes them candidates for constant folding and dead-code removal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import AmbiguityError, BoundsError, DivideError, MdlError, MethodError, TypeAssertError, UserError
from .types import (BOTTOM, TOP, Const, Exists, Nominal, TupleType, TypeTerm, UnionType, Var)
from .values import (BOOL, COLON_VAL, FLOAT64, INT64, NOTHING, STRING, UNITRANGE, ArrayVal, ColonVal,
                     FunctionVal, RangeVal, StructVal, TypeVal, display, typeof, wrap64)


class DomainError(MdlError):
    exit_code = 3
    kind = "DomainError"


class DimensionMismatch(MdlError):
    exit_code = 3
    kind = "DimensionMismatch"


@dataclass
class Intrinsic:
    name: str
    impl: Callable
    tfunc: Callable
    pure: bool = False
    needs_ctx: bool = False


INTRINSICS: dict = {}


def _reg(name, tfunc, pure=False, needs_ctx=False):
    def deco(fn):
        INTRINSICS[name] = Intrinsic(name, fn, tfunc, pure, needs_ctx)
        return fn
    return deco


def _const(t):
    return lambda inf, ats: t


ARRAY_ANY = None  # filled lazily (needs fresh vars)


def _array_of(elt: TypeTerm | None, rank: TypeTerm | None) -> TypeTerm:
    """Array{elt,rank}, existentially closing unknown components."""
    vs = []
    if elt is None:
        e = Var("E")
        vs.append(e)
        elt = e
    if rank is None:
        r = Var("R")
        vs.append(r)
        rank = r
    t: TypeTerm = Nominal("Array", (elt, rank))
    for v in reversed(vs):
        t = Exists(v, t)
    return t


def array_parts(t: TypeTerm):
    """(element type, rank) for a leaf Array type, else (None, None)."""
    if isinstance(t, Nominal) and t.name == "Array":
        return t.params[0], t.params[1]
    return None, None


def _is_leaf(inf, t) -> bool:
    return inf.reg.is_leaf(t)


# -- integer arithmetic -----------------------------------------------------------

_I2 = _const(INT64)
_F = _const(FLOAT64)
_B = _const(BOOL)


@_reg("add_int", _I2, pure=True)
def add_int(a, b):
    return wrap64(a + b)


@_reg("sub_int", _I2, pure=True)
def sub_int(a, b):
    return wrap64(a - b)


@_reg("mul_int", _I2, pure=True)
def mul_int(a, b):
    return wrap64(a * b)


@_reg("neg_int", _I2, pure=True)
def neg_int(a):
    return wrap64(-a)


@_reg("abs_int", _I2, pure=True)
def abs_int(a):
    return wrap64(abs(a))


@_reg("div_int", _I2)
def div_int(a, b):
    if b == 0:
        raise DivideError("integer division by zero")
    q = abs(a) // abs(b)
    return wrap64(q if (a >= 0) == (b >= 0) else -q)


@_reg("rem_int", _I2)
def rem_int(a, b):
    if b == 0:
        raise DivideError("integer division by zero")
    r = abs(a) % abs(b)
    return r if a >= 0 else -r


@_reg("pow_int", _I2)
def pow_int(a, b):
    if b < 0:
        raise DomainError("negative integer exponent")
    return wrap64(pow(a, b, 1 << 64))


@_reg("lt_int", _B, pure=True)
def lt_int(a, b):
    return a < b


@_reg("le_int", _B, pure=True)
def le_int(a, b):
    return a <= b


@_reg("eq_int", _B, pure=True)
def eq_int(a, b):
    return a == b


@_reg("sitofp", _F, pure=True)
def sitofp(a):
    return float(a)


# -- floating point ---------------------------------------------------------------

@_reg("add_float", _F, pure=True)
def add_float(a, b):
    return a + b


@_reg("sub_float", _F, pure=True)
def sub_float(a, b):
    return a - b


@_reg("mul_float", _F, pure=True)
def mul_float(a, b):
    return a * b


@_reg("div_float", _F, pure=True)
def div_float(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        if a != a or a == 0:
            return math.nan
        neg = (a < 0) != (math.copysign(1.0, b) < 0)
        return -math.inf if neg else math.inf


@_reg("pow_float", _F, pure=True)
def pow_float(a, b):
    try:
        r = a ** b
    except OverflowError:
        return math.inf
    except ZeroDivisionError:
        return math.inf
    if isinstance(r, complex):
        return math.nan
    return r


@_reg("neg_float", _F, pure=True)
def neg_float(a):
    return -a


@_reg("abs_float", _F, pure=True)
def abs_float(a):
    return abs(a)


@_reg("sqrt_float", _F)
def sqrt_float(a):
    if a < 0:
        raise DomainError("sqrt of a negative number")
    return math.sqrt(a)


@_reg("lt_float", _B, pure=True)
def lt_float(a, b):
    return a < b


@_reg("le_float", _B, pure=True)
def le_float(a, b):
    return a <= b


@_reg("eq_float", _B, pure=True)
def eq_float(a, b):
    return a == b


@_reg("not_bool", _B)
def not_bool(a):
    if a is not True and a is not False:
        raise TypeAssertError("non-boolean used in boolean context")
    return not a


# -- identity and types -----------------------------------------------------------

def egal_values(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if type(a) is float:
        return math.copysign(1.0, a) == math.copysign(1.0, b) and (a == b or (a != a and b != b))
    if type(a) is tuple:
        return len(a) == len(b) and all(egal_values(x, y) for x, y in zip(a, b))
    if isinstance(a, (ArrayVal, StructVal)):
        return a is b
    return a == b


@_reg("egal", _B, pure=True)
def egal(a, b):
    return egal_values(a, b)


def _typeof_t(inf, ats):
    t = ats[0]
    if _is_leaf(inf, t):
        return Nominal("Type", (t,))
    if isinstance(t, UnionType) and all(_is_leaf(inf, m) for m in t.members):
        return inf.reg.union(*[Nominal("Type", (m,)) for m in t.members])
    v = Var("X")
    return Exists(v, Nominal("Type", (v,)))


@_reg("typeof", _typeof_t, pure=True)
def typeof_(a):
    return TypeVal(typeof(a))


def _type_arg(v, what="type"):
    if not isinstance(v, TypeVal):
        raise TypeAssertError(f"expected a {what}, got {display(v)}")
    return v.t


@_reg("isa", _B, needs_ctx=True)
def isa(ctx, x, T):
    return ctx.reg.subtype(typeof(x), _type_arg(T))


@_reg("issubtype", _B, needs_ctx=True)
def issubtype(ctx, A, B):
    return ctx.reg.subtype(_type_arg(A), _type_arg(B))


def _typejoin_t(inf, ats):
    a, b = ats
    ta = a.params[0] if isinstance(a, Nominal) and a.name == "Type" else None
    tb = b.params[0] if isinstance(b, Nominal) and b.name == "Type" else None
    if ta is not None and tb is not None:
        return Nominal("Type", (inf.reg.join(ta, tb),))
    v = Var("X")
    return Exists(v, Nominal("Type", (v,)))


@_reg("typejoin", _typejoin_t, needs_ctx=True)
def typejoin(ctx, A, B):
    return TypeVal(ctx.reg.join(_type_arg(A), _type_arg(B)))


# -- tuples ------------------------------------------------------------------------

def _tuple_t(inf, ats):
    return TupleType(ats)


@_reg("tuple", _tuple_t, pure=True)
def tuple_(*xs):
    return tuple(xs)


def tuple_elem_type(inf, t: TypeTerm, index: int | None) -> TypeTerm:
    if isinstance(t, TupleType):
        if index is not None:
            if index - 1 < len(t.fixed):
                return t.fixed[index - 1] if index >= 1 else BOTTOM
            return t.vararg if t.vararg is not None else BOTTOM
        parts = list(t.fixed) + ([t.vararg] if t.vararg is not None else [])
        return inf.reg.union(*parts) if parts else BOTTOM
    if isinstance(t, UnionType):
        return inf.reg.union(*[tuple_elem_type(inf, m, index) for m in t.members])
    if isinstance(t, type(BOTTOM)):
        return BOTTOM
    return TOP


def _tupleref_t(inf, ats):
    return tuple_elem_type(inf, ats[0], None)


@_reg("tupleref", _tupleref_t)
def tupleref(t, i):
    if type(t) is not tuple:
        raise TypeAssertError("tupleref on a non-tuple")
    if not (type(i) is int and 1 <= i <= len(t)):
        raise BoundsError(f"tuple index {i} out of range")
    return t[i - 1]


@_reg("tuplelen", _I2)
def tuplelen(t):
    if type(t) is not tuple:
        raise TypeAssertError("tuplelen on a non-tuple")
    return len(t)


# -- ranges ------------------------------------------------------------------------

@_reg("new_range", _const(UNITRANGE), pure=True)
def new_range(a, b):
    return RangeVal(a, b)


@_reg("range_ref", _I2)
def range_ref(r, i):
    if not (1 <= i <= len(r)):
        raise BoundsError(f"range index {i} out of range")
    return r.start + i - 1


@_reg("range_len", _I2)
def range_len(r):
    return len(r)


# -- arrays ------------------------------------------------------------------------

def _count_alloc(ctx, n):
    st = ctx.stats
    st.allocations += 1
    st.allocated_cells += n


def _fill_t(inf, ats):
    T = ats[0]
    rank = Const(len(ats) - 2)
    if isinstance(T, Nominal) and T.name == "Type" and not isinstance(T.params[0], Var):
        return _array_of(T.params[0], rank)
    return _array_of(None, rank)


@_reg("fill_array", _fill_t, needs_ctx=True)
def fill_array(ctx, T, v, *dims):
    elt = _type_arg(T)
    dims = tuple(max(0, d) for d in dims)
    if not ctx.reg.subtype(typeof(v), elt):
        raise TypeAssertError(f"fill value {display(v)} is not a {elt}")
    n = math.prod(dims)
    _count_alloc(ctx, n)
    return ArrayVal(elt, dims, [v] * n)


def _check_array(a):
    if not isinstance(a, ArrayVal):
        raise TypeAssertError(f"expected an array, got {display(a)}")


def linear_index(a: ArrayVal, idx) -> int:
    dims = a.dims
    if len(idx) == 1:
        i = idx[0]
        if type(i) is not int or not (1 <= i <= len(a.data)):
            raise BoundsError(f"index {display(i)} out of bounds for array of size {dims}")
        return i - 1
    if len(idx) == 2 and len(dims) == 2:
        i, j = idx
        m, n = dims
        if type(i) is not int or type(j) is not int or not (1 <= i <= m) or not (1 <= j <= n):
            raise BoundsError(f"index ({display(i)}, {display(j)}) out of bounds for array of size {dims}")
        return (i - 1) + (j - 1) * m
    ext = list(dims) + [1] * (len(idx) - len(dims))
    if len(idx) < len(ext):
        ext = ext[: len(idx) - 1] + [math.prod(ext[len(idx) - 1:])]
    lin, stride = 0, 1
    for i, d in zip(idx, ext):
        if type(i) is not int or not (1 <= i <= d):
            raise BoundsError(f"index {tuple(idx)} out of bounds for array of size {dims}")
        lin += (i - 1) * stride
        stride *= d
    return lin


def _arrayref_t(inf, ats):
    elt, _ = array_parts(ats[0])
    return elt if elt is not None else TOP


@_reg("arrayref", _arrayref_t)
def arrayref(a, *idx):
    _check_array(a)
    return a.data[linear_index(a, idx)]


def store_value(ctx, a: ArrayVal, v):
    elt = a.elt
    tv = typeof(v)
    if tv is elt or tv == elt or ctx.reg.subtype(tv, elt):
        return v
    try:
        v2 = ctx.convert(elt, v)
    except AmbiguityError:
        raise
    except MethodError:
        raise TypeAssertError(f"cannot convert {display(v)} to {elt} for storing in an array") from None
    if not ctx.reg.subtype(typeof(v2), elt):
        raise TypeAssertError(f"cannot store {display(v)} in an array of {elt}")
    return v2


def _first_t(inf, ats):
    return ats[0]


def _second_t(inf, ats):
    return ats[1]


@_reg("arrayset", _first_t, needs_ctx=True)
def arrayset(ctx, a, v, *idx):
    _check_array(a)
    k = linear_index(a, idx)
    a.data[k] = store_value(ctx, a, v)
    return a


@_reg("arraysize", _I2)
def arraysize(a, d):
    _check_array(a)
    if type(d) is not int or d < 1:
        raise BoundsError(f"dimension {display(d)} out of range")
    return a.dims[d - 1] if d <= len(a.dims) else 1


def _size_all_t(inf, ats):
    _, rank = array_parts(ats[0])
    if isinstance(rank, Const):
        return TupleType([INT64] * rank.value)
    return TupleType([], INT64)


@_reg("arraysize_all", _size_all_t)
def arraysize_all(a):
    _check_array(a)
    return tuple(a.dims)


@_reg("arraylen", _I2)
def arraylen(a):
    _check_array(a)
    return len(a.data)


@_reg("array_copy", _first_t, needs_ctx=True)
def array_copy(ctx, a):
    _check_array(a)
    _count_alloc(ctx, len(a.data))
    return ArrayVal(a.elt, a.dims, list(a.data))


def _index_list(i, extent):
    """(list of 0-based positions, is_scalar) for one index argument."""
    if type(i) is int:
        if not (1 <= i <= extent):
            raise BoundsError(f"index {i} out of bounds for extent {extent}")
        return [i - 1], True
    if isinstance(i, RangeVal):
        if len(i) and (i.start < 1 or i.stop > extent):
            raise BoundsError(f"range {i} out of bounds for extent {extent}")
        return list(range(i.start - 1, i.stop)), False
    if isinstance(i, ColonVal):
        return list(range(extent)), False
    if isinstance(i, ArrayVal) and len(i.dims) == 1:
        out = []
        for x in i.data:
            if type(x) is not int or not (1 <= x <= extent):
                raise BoundsError(f"index {display(x)} out of bounds for extent {extent}")
            out.append(x - 1)
        return out, False
    raise TypeAssertError(f"invalid index {display(i)}")


def _slice_plan(a: ArrayVal, idx):
    dims = a.dims
    if len(idx) == 1:
        ext = [len(a.data)]
    else:
        ext = list(dims) + [1] * (len(idx) - len(dims))
        if len(idx) < len(ext):
            ext = ext[: len(idx) - 1] + [math.prod(ext[len(idx) - 1:])]
    lists, scalars = [], []
    for i, d in zip(idx, ext):
        l, s = _index_list(i, d)
        lists.append(l)
        scalars.append(s)
    strides = []
    st = 1
    for d in ext:
        strides.append(st)
        st *= d
    # enumerate result positions column-major
    positions = [0]
    for l, stride in zip(lists, strides):
        positions = [p + q * stride for q in l for p in positions]
    shape = [len(l) for l in lists]
    while shape and scalars[len(shape) - 1]:
        shape.pop()
    return positions, tuple(shape), all(scalars)


def _slice_rank(inf, ats):
    idx = ats[1:]
    if len(idx) == 1:
        t = idx[0]
        if t == INT64:
            return None
        return Const(1) if _is_leaf(inf, t) else "unknown"
    kinds = []
    for t in idx:
        if t == INT64:
            kinds.append(True)
        elif _is_leaf(inf, t):
            kinds.append(False)
        else:
            return "unknown"
    k = len(kinds)
    while k and kinds[k - 1]:
        k -= 1
    return None if k == 0 else Const(k)


def _slice_get_t(inf, ats):
    elt, _ = array_parts(ats[0])
    rank = _slice_rank(inf, ats)
    if rank is None:
        return elt if elt is not None else TOP
    if rank == "unknown":
        return inf.reg.union(elt, _array_of(elt, None)) if elt is not None else TOP
    return _array_of(elt, rank)


@_reg("slice_get", _slice_get_t, needs_ctx=True)
def slice_get(ctx, a, *idx):
    _check_array(a)
    positions, shape, scalar = _slice_plan(a, idx)
    data = a.data
    if scalar:
        return data[positions[0]]
    _count_alloc(ctx, len(positions))
    return ArrayVal(a.elt, shape, [data[p] for p in positions])


@_reg("slice_set", _first_t, needs_ctx=True)
def slice_set(ctx, a, x, *idx):
    _check_array(a)
    positions, _shape, _ = _slice_plan(a, idx)
    data = a.data
    if isinstance(x, ArrayVal):
        if len(x.data) != len(positions):
            raise DimensionMismatch(f"cannot assign {len(x.data)} elements to {len(positions)} destinations")
        src = list(x.data)
        for p, v in zip(positions, src):
            data[p] = store_value(ctx, a, v)
    else:
        v = store_value(ctx, a, x)
        for p in positions:
            data[p] = v
    return a


def _elt_of(t):
    e, _ = array_parts(t)
    return e


def _broadcast_t(inf, ats):
    f = ats[0]
    rank = None
    elts = []
    for t in ats[1:]:
        if isinstance(t, Nominal) and t.name == "Array":
            elts.append(t.params[0])
            rank = t.params[1] if rank is None or rank == t.params[1] else "mixed"
        elif isinstance(t, (Nominal, TupleType)) and _is_leaf(inf, t):
            elts.append(t)
        else:
            return _array_of(None, None)
    if rank == "mixed":
        rank = None
    if not (isinstance(f, Nominal) and f.name == "Function" and isinstance(f.params[0], Const)):
        return _array_of(None, rank)
    r = inf.call_type(f.params[0].value, elts)
    if isinstance(r, type(BOTTOM)):
        # every element call fails, so only an empty input can produce a result
        return _array_of(None, rank)
    if _is_leaf(inf, r):
        return _array_of(r, rank)
    return _array_of(None, rank)


@_reg("broadcast", _broadcast_t, needs_ctx=True)
def broadcast(ctx, f, *args):
    if not isinstance(f, FunctionVal):
        raise TypeAssertError("broadcast needs a function")
    dims = None
    arrays = []
    for x in args:
        if isinstance(x, ArrayVal):
            if dims is None:
                dims = x.dims
            elif x.dims != dims:
                raise DimensionMismatch(f"arrays could not be broadcast to a common size: {dims} vs {x.dims}")
            arrays.append(True)
        else:
            arrays.append(False)
    if dims is None:
        raise DimensionMismatch("broadcast needs at least one array argument")
    elts = tuple(x.elt if isinstance(x, ArrayVal) else typeof(x) for x in args)
    call = ctx.elementwise(f.name, elts)
    n = math.prod(dims)
    if len(args) == 2:
        a, b = args
        if arrays[0] and arrays[1]:
            ad, bd = a.data, b.data
            out = [call((ad[k], bd[k])) for k in range(n)]
        elif arrays[0]:
            ad = a.data
            out = [call((ad[k], b)) for k in range(n)]
        else:
            bd = b.data
            out = [call((a, bd[k])) for k in range(n)]
    elif len(args) == 1:
        ad = args[0].data
        out = [call((ad[k],)) for k in range(n)]
    else:
        out = [call(tuple(x.data[k] if isa_ else x for x, isa_ in zip(args, arrays))) for k in range(n)]
    elt = ctx.result_eltype(f.name, elts, out)
    _count_alloc(ctx, n)
    return ArrayVal(elt, dims, out)


def _matmul_t(inf, ats):
    a, b = ats
    ea, ra = array_parts(a)
    eb, rb = array_parts(b)
    rank = None
    if isinstance(ra, Const) and isinstance(rb, Const):
        rank = Const(1) if rb.value == 1 and ra.value == 2 else Const(2)
    if ea is not None and eb is not None:
        p = inf.call_type("*", [ea, eb])
        s = inf.call_type("+", [p, p]) if _is_leaf(inf, p) else TOP
        if _is_leaf(inf, p) and p == s:
            return _array_of(p, rank)
    return _array_of(None, rank)


@_reg("matmul", _matmul_t, needs_ctx=True)
def matmul(ctx, a, b):
    _check_array(a)
    _check_array(b)
    if len(a.dims) == 2:
        n, k = a.dims
    elif len(a.dims) == 1:
        n, k = a.dims[0], 1
    else:
        raise DimensionMismatch("matmul needs vectors or matrices")
    if len(b.dims) == 2:
        k2, m = b.dims
        vec_out = False
    elif len(b.dims) == 1:
        k2, m = b.dims[0], 1
        vec_out = True
    else:
        raise DimensionMismatch("matmul needs vectors or matrices")
    if k != k2:
        raise DimensionMismatch(f"inner dimensions differ: {a.dims} * {b.dims}")
    if len(a.dims) == 1 and vec_out:
        raise DimensionMismatch("vector * vector is undefined")
    if k == 0:
        raise DimensionMismatch("empty inner dimension")
    ad, bd = a.data, b.data
    out = [None] * (n * m)
    if a.elt == FLOAT64 and b.elt == FLOAT64:
        for j in range(m):
            col = bd[j * k:(j + 1) * k]
            for i in range(n):
                acc = ad[i] * col[0]
                for l in range(1, k):
                    acc = acc + ad[i + l * n] * col[l]
                out[i + j * n] = acc
        elt = FLOAT64
    else:
        mul = ctx.elementwise("*", (a.elt, b.elt))
        pt = ctx.infer_type("*", [a.elt, b.elt])
        add = ctx.elementwise("+", (pt, pt))
        for j in range(m):
            for i in range(n):
                acc = mul((ad[i], bd[j * k]))
                for l in range(1, k):
                    acc = add((acc, mul((ad[i + l * n], bd[l + j * k]))))
                out[i + j * n] = acc
        elt = ctx.result_eltype(None, None, out, matmul_of=(a.elt, b.elt))
    _count_alloc(ctx, n * m)
    return ArrayVal(elt, (n,) if vec_out else (n, m), out)


def _vect_t(inf, ats):
    if not ats:
        return Nominal("Array", (TOP, Const(1)))
    if all(_is_leaf(inf, t) for t in ats):
        return Nominal("Array", (inf.reg.union(*ats), Const(1)))
    return _array_of(None, Const(1))


def literal_eltype(reg, xs):
    if not xs:
        return TOP
    return reg.union(*[typeof(x) for x in xs])


@_reg("vect", _vect_t, needs_ctx=True)
def vect(ctx, *xs):
    _count_alloc(ctx, len(xs))
    return ArrayVal(literal_eltype(ctx.reg, xs), (len(xs),), list(xs))


def _hvcat_t(inf, ats):
    items = ats[1:]
    if all(_is_leaf(inf, t) for t in items):
        return Nominal("Array", (inf.reg.union(*items) if items else TOP, Const(2)))
    return _array_of(None, Const(2))


@_reg("hvcat", _hvcat_t, needs_ctx=True)
def hvcat(ctx, nrows, *xs):
    ncols = len(xs) // nrows if nrows else 0
    data = [xs[i * ncols + j] for j in range(ncols) for i in range(nrows)]
    _count_alloc(ctx, len(data))
    return ArrayVal(literal_eltype(ctx.reg, xs), (nrows, ncols), data)


# -- randomness --------------------------------------------------------------------

@_reg("rand_normal", lambda inf, ats: Nominal("Array", (FLOAT64, Const(len(ats)))), needs_ctx=True)
def rand_normal(ctx, *dims):
    dims = tuple(max(0, d) for d in dims)
    n = math.prod(dims)
    data = [float(x) for x in ctx.rng.standard_normal(n)]
    _count_alloc(ctx, n)
    return ArrayVal(FLOAT64, dims, data)


@_reg("rand_perm", _const(Nominal("Array", (INT64, Const(1)))), needs_ctx=True)
def rand_perm(ctx, n):
    data = [int(x) + 1 for x in ctx.rng.permutation(max(0, n))]
    _count_alloc(ctx, len(data))
    return ArrayVal(INT64, (len(data),), data)


# -- effects -----------------------------------------------------------------------

@_reg("probe", _const(NOTHING), needs_ctx=True)
def probe(ctx, name):
    p = ctx.stats.probes
    p[name] = p.get(name, 0) + 1
    return None


_ERROR_CLASSES = {"BoundsError": BoundsError, "DivideError": DivideError}


@_reg("throw", _const(BOTTOM))
def throw(x):
    if isinstance(x, StructVal):
        cls = _ERROR_CLASSES.get(x.tag.name)
        if cls is not None:
            raise cls(x.tag.name)
        if x.tag.name == "ErrorException" and x.fields:
            raise UserError(display(x.fields[0]))
    raise UserError(display(x))


@_reg("error", _const(BOTTOM))
def error(*msg):
    raise UserError("".join(display(m) for m in msg))


@_reg("println", _const(NOTHING), needs_ctx=True)
def println(ctx, *xs):
    ctx.out.write("".join(display(x) for x in xs) + "\n")
    return None


@_reg("string", _const(STRING), pure=True)
def string(*xs):
    return "".join(display(x) for x in xs)


@_reg("colon_value", _const(Nominal("Colon")), pure=True)
def colon_value():
    return COLON_VAL


@_reg("getfield_dyn", lambda inf, ats: TOP)
def getfield_dyn(obj, i):
    if not isinstance(obj, StructVal) or type(i) is not int or not (1 <= i <= len(obj.fields)):
        raise BoundsError("field index out of range")
    return obj.fields[i - 1]


INTRINSIC_NAMES = frozenset(INTRINSICS)
