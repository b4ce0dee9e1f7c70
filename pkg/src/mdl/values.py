"""Runtime values and their type tags.

Scalars are plain Python objects: ``int`` is Int64, ``float`` is Float64,
``bool`` is Bool, ``str`` is String and ``None`` is ``nothing``.  Tuples are
Python tuples.  Everything else has a class here.
"""

from __future__ import annotations


from .types import BOTTOM, TOP, Const, Nominal, TupleType, TypeTerm

INT64 = Nominal("Int64")
FLOAT64 = Nominal("Float64")
BOOL = Nominal("Bool")
STRING = Nominal("String")
NOTHING = Nominal("Nothing")
COLON = Nominal("Colon")
UNITRANGE = Nominal("UnitRange", (INT64,))

_MASK = (1 << 64) - 1
_SIGN = 1 << 63


def wrap64(x: int) -> int:
    """Two's-complement wraparound to 64 bits."""
    if -_SIGN <= x < _SIGN:
        return x
    x &= _MASK
    return x - (1 << 64) if x & _SIGN else x


class TypeVal:
    __slots__ = ("t", "tag")

    def __init__(self, t: TypeTerm):
        self.t = t
        self.tag = Nominal("Type", (t,))

    def __eq__(self, other):
        return isinstance(other, TypeVal) and self.t == other.t

    def __hash__(self):
        return hash(("TypeVal", self.t))

    def __repr__(self):
        return str(self.t)


class FunctionVal:
    __slots__ = ("name", "tag")

    def __init__(self, name: str):
        self.name = name
        self.tag = Nominal("Function", (Const(name),))

    def __eq__(self, other):
        return isinstance(other, FunctionVal) and self.name == other.name

    def __hash__(self):
        return hash(("FunctionVal", self.name))

    def __repr__(self):
        return self.name


class ColonVal:
    __slots__ = ()
    tag = COLON

    def __repr__(self):
        return ":"


COLON_VAL = ColonVal()


_ARRAY_TAGS: dict = {}  # interned so dispatch-cache keys compare by identity


class ArrayVal:
    """Dense column-major array; ``data`` is a flat Python list."""

    __slots__ = ("elt", "dims", "data", "tag")

    def __init__(self, elt: TypeTerm, dims: tuple, data: list):
        self.elt = elt
        self.dims = tuple(dims)
        self.data = data
        key = (elt, len(self.dims))
        tag = _ARRAY_TAGS.get(key)
        if tag is None:
            tag = _ARRAY_TAGS[key] = Nominal("Array", (elt, Const(len(self.dims))))
        self.tag = tag

    def __repr__(self):
        return f"ArrayVal({self.elt}, {self.dims}, {self.data!r})"


class StructVal:
    __slots__ = ("tag", "fields")

    def __init__(self, tag: Nominal, fields: list):
        self.tag = tag
        self.fields = fields

    def __repr__(self):
        return f"StructVal({self.tag}, {self.fields!r})"


class RangeVal:
    __slots__ = ("start", "stop")
    tag = UNITRANGE

    def __init__(self, start: int, stop: int):
        self.start = start
        self.stop = stop

    def __len__(self):
        return max(0, self.stop - self.start + 1)

    def __eq__(self, other):
        return isinstance(other, RangeVal) and len(self) == len(other) and (len(self) == 0 or self.start == other.start)

    def __hash__(self):
        return hash(("Range", self.start, len(self)))

    def __repr__(self):
        return f"{self.start}:{self.stop}"


_SCALAR_TAGS = {int: INT64, float: FLOAT64, bool: BOOL, str: STRING, type(None): NOTHING}


def typeof(v) -> TypeTerm:
    t = _SCALAR_TAGS.get(type(v))
    if t is not None:
        return t
    if type(v) is tuple:
        return TupleType([typeof(x) for x in v])
    return v.tag


def tkey(v):
    """Cheap hashable key that determines ``typeof(v)``; used by dispatch caches."""
    t = type(v)
    if t in _SCALAR_TAGS:
        return t
    if t is tuple:
        return tuple(tkey(x) for x in v)
    return v.tag


def is_tuple(v) -> bool:
    return type(v) is tuple


# -- display -------------------------------------------------------------------

def fmt_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return "Inf" if x > 0 else "-Inf"
    r = repr(x)
    if "e" in r:
        mant, exp = r.split("e")
        if "." not in mant:
            mant += ".0"
        return f"{mant}e{int(exp)}"
    return r


def display(v) -> str:
    if v is None:
        return "nothing"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if type(v) is int:
        return str(v)
    if type(v) is float:
        return fmt_float(v)
    if type(v) is str:
        return v
    if type(v) is tuple:
        if len(v) == 1:
            return "(" + show_value(v[0]) + ",)"
        return "(" + ", ".join(show_value(x) for x in v) + ")"
    if isinstance(v, ArrayVal):
        if len(v.dims) == 1:
            return "[" + ", ".join(show_value(x) for x in v.data) + "]"
        if len(v.dims) == 2:
            m, n = v.dims
            rows = []
            for i in range(m):
                rows.append(" ".join(show_value(v.data[i + j * m]) for j in range(n)))
            return "[" + "; ".join(rows) + "]"
        return f"Array{{{v.elt},{len(v.dims)}}}{v.dims}{[show_value(x) for x in v.data]}"
    if isinstance(v, StructVal):
        return str(v.tag) + "(" + ", ".join(show_value(x) for x in v.fields) + ")"
    return repr(v)


def show_value(v) -> str:
    """Like ``display`` but strings are quoted (used inside containers)."""
    if type(v) is str:
        return '"' + v + '"'
    return display(v)


def to_json(v):
    """Plain-JSON form of a runtime value."""
    if v is None or type(v) in (bool, int, str):
        return v
    if type(v) is float:
        if v != v or v in (float("inf"), float("-inf")):
            return fmt_float(v)
        return v
    if type(v) is tuple:
        return [to_json(x) for x in v]
    if isinstance(v, ArrayVal):
        if len(v.dims) == 2:
            m, n = v.dims
            return [[to_json(v.data[i + j * m]) for j in range(n)] for i in range(m)]
        return [to_json(x) for x in v.data]
    if isinstance(v, StructVal):
        return {"type": str(v.tag), "fields": [to_json(x) for x in v.fields]}
    return display(v)


def values_identical(a, b) -> bool:
    """Bitwise identity used by the mode-equivalence oracle."""
    if type(a) is not type(b):
        return False
    if type(a) is float:
        return a == b or (a != a and b != b)
    if type(a) is tuple:
        return len(a) == len(b) and all(values_identical(x, y) for x, y in zip(a, b))
    if isinstance(a, ArrayVal):
        return (a.elt == b.elt and a.dims == b.dims
                and all(values_identical(x, y) for x, y in zip(a.data, b.data)))
    if isinstance(a, StructVal):
        return a.tag == b.tag and all(values_identical(x, y) for x, y in zip(a.fields, b.fields))
    return a == b


__all__ = [
    "INT64", "FLOAT64", "BOOL", "STRING", "NOTHING", "COLON", "UNITRANGE", "wrap64",
    "TypeVal", "FunctionVal", "ColonVal", "COLON_VAL", "ArrayVal", "StructVal", "RangeVal",
    "typeof", "tkey", "display", "show_value", "to_json", "values_identical", "TOP", "BOTTOM",
]
