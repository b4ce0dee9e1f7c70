"""Generic functions, method tables and multiple dispatch.

A method is more specific than another when its signature is a strict
subtype.  A call selects the unique most specific applicable method; two or
more incomparable candidates make the call ambiguous.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

from .errors import AmbiguityError, MethodError
from .types import Bottom, Const, Exists, Top, TupleType, TypeRegistry, TypeTerm


@dataclass(eq=False)
class Method:
    fname: str
    sig: TypeTerm
    sparams: list
    ir: object  # IRFunction
    line: int = 0
    id: int = 0
    kind: str = "user"  # user | constructor | base
    path: str = ""

    def binder_ids(self) -> list:
        out = []
        t = self.sig
        while isinstance(t, Exists):
            out.append(t.var.id)
            t = t.body
        return out

    def param_types(self) -> TypeTerm:
        t = self.sig
        while isinstance(t, Exists):
            t = t.body
        return t

    def sparam_env(self, reg: TypeRegistry, argtuple: TypeTerm) -> Optional[dict]:
        """Static parameter bindings for a call with ``argtuple``; None if not applicable."""
        m = reg.match(argtuple, self.sig)
        if m is None:
            return None
        env = {}
        for name, bid in zip(self.sparams, self.binder_ids()):
            b = m.get(bid)
            if b is not None:
                env[name] = b
        return env

    def describe(self, reg: TypeRegistry) -> str:
        pt = self.param_types()
        if isinstance(pt, TupleType):
            parts = [reg.show(x) for x in pt.fixed]
            if pt.vararg is not None:
                parts.append(reg.show(pt.vararg) + "...")
            s = f"{self.fname}({', '.join(parts)})"
        else:
            s = f"{self.fname}{reg.show(pt)}"
        names = []
        t = self.sig
        while isinstance(t, Exists):
            v = t.var
            names.append(reg.show(v) + ("" if isinstance(v.upper, Top) else "<:" + reg.show(v.upper)))
            t = t.body
        if names:
            s += " where {" + ", ".join(names) + "}"
        return s

    def __repr__(self):
        return f"<method {self.fname}#{self.id}>"


def show_argtypes(reg: TypeRegistry, argtypes) -> str:
    return ", ".join("::" + reg.show(t) for t in argtypes)


class GenericFunction:
    def __init__(self, name: str):
        self.name = name
        self.methods: list[Method] = []  # topological: more specific first
        self.cache: dict = {}
        self.dispatch_count = 0

    def __repr__(self):
        return f"<generic {self.name} ({len(self.methods)} methods)>"

    def more_specific(self, reg: TypeRegistry, a: Method, b: Method) -> bool:
        return reg.subtype(a.sig, b.sig) and not reg.subtype(b.sig, a.sig)

    def add(self, reg: TypeRegistry, m: Method, warn: bool = True) -> Optional[Method]:
        """Insert ``m``; returns the replaced method if one had an identical signature."""
        self.cache.clear()
        for k, old in enumerate(self.methods):
            if old.sig == m.sig:
                if warn and old.path == m.path:
                    warnings.warn(f"method {m.describe(reg)} overwritten", stacklevel=2)
                self.methods[k] = m
                return old
        for k, old in enumerate(self.methods):
            if self.more_specific(reg, m, old):
                self.methods.insert(k, m)
                return None
        self.methods.append(m)
        return None

    def ambiguous_pair(self, reg: TypeRegistry, a: Method, b: Method) -> bool:
        """Neither is more specific, they provably overlap, and no third method covers the overlap.

        Overlaps that cannot be computed exactly (signatures with static
        parameters) are not reported; calls that hit them still raise.
        """
        if a is b or self.more_specific(reg, a, b) or self.more_specific(reg, b, a):
            return False
        if not reg.may_intersect(a.sig, b.sig):
            return False
        both = reg.meet(a.sig, b.sig)
        if isinstance(both, Bottom):
            return False
        for c in self.methods:
            if c is a or c is b:
                continue
            if self.more_specific(reg, c, a) and self.more_specific(reg, c, b) and reg.subtype(both, c.sig):
                return False
        return True

    def ambiguities(self, reg: TypeRegistry) -> list:
        ms = self.methods
        return [(ms[i], ms[j]) for i in range(len(ms)) for j in range(i + 1, len(ms))
                if self.ambiguous_pair(reg, ms[i], ms[j])]

    def select(self, reg: TypeRegistry, argtuple: TypeTerm):
        """(method, env) for a leaf argument tuple, or raise."""
        applicable = []
        for m in self.methods:
            env = m.sparam_env(reg, argtuple)
            if env is not None:
                applicable.append((m, env))
        if not applicable:
            raise MethodError(f"no method matching {self.name}({_args_str(reg, argtuple)})")
        best, env = applicable[0]
        rivals = [m for m, _ in applicable[1:] if not self.more_specific(reg, best, m)]
        if rivals:
            cands = "; ".join(x.describe(reg) for x in [best] + rivals)
            raise AmbiguityError(f"{self.name}({_args_str(reg, argtuple)}) is ambiguous. Candidates: {cands}")
        return best, env

    def lookup(self, reg: TypeRegistry, key, argtuple_fn):
        """Cached :meth:`select`, keyed by a hashable leaf key."""
        r = self.cache.get(key)
        if r is None:
            r = self.select(reg, argtuple_fn())
            self.cache[key] = r
        return r

    def candidates(self, reg: TypeRegistry, argtuple: TypeTerm) -> list:
        """Methods that may apply to some value of ``argtuple`` (topological order).

        Methods shadowed by a more specific method that covers the whole of
        ``argtuple`` are dropped.
        """
        out = []
        covering = []
        for m in self.methods:
            if any(self.more_specific(reg, c, m) for c in covering):
                continue
            if not reg.may_intersect(argtuple, m.sig):
                continue
            out.append(m)
            if reg.subtype(argtuple, m.sig):
                covering.append(m)
        return out


def specificity(reg: TypeRegistry, a: TypeTerm, b: TypeTerm) -> str:
    """Compare two signatures: ``more``, ``less``, ``equal`` or ``incomparable``."""
    ab, ba = reg.subtype(a, b), reg.subtype(b, a)
    if ab and ba:
        return "equal"
    if ab:
        return "more"
    if ba:
        return "less"
    return "incomparable"


def _args_str(reg, argtuple) -> str:
    if isinstance(argtuple, TupleType):
        return show_argtypes(reg, argtuple.fixed)
    return reg.show(argtuple)


@dataclass
class MethodTable:
    reg: TypeRegistry
    functions: dict = field(default_factory=dict)
    _next_id: int = 0

    def get(self, name: str) -> Optional[GenericFunction]:
        return self.functions.get(name)

    def function(self, name: str) -> GenericFunction:
        gf = self.functions.get(name)
        if gf is None:
            gf = self.functions[name] = GenericFunction(name)
        return gf

    def add(self, m: Method, warn: bool = True):
        """Insert ``m``; returns the methods it is currently ambiguous with."""
        self._next_id += 1
        m.id = self._next_id
        gf = self.function(m.fname)
        gf.add(self.reg, m, warn)
        return [o for o in gf.methods if gf.ambiguous_pair(self.reg, m, o)]

    def matching_methods(self, name: str, argtypes: TypeTerm) -> list:
        """Every method whose signature may intersect ``argtypes``, most specific first."""
        gf = self.functions.get(name)
        if gf is None:
            return []
        if self.reg.is_leaf(argtypes):
            return [m for m in gf.methods if self.reg.subtype(argtypes, m.sig)]
        return [m for m in gf.methods if self.reg.may_intersect(argtypes, m.sig)]

    def dispatch(self, name: str, argtypes: list):
        gf = self.functions.get(name)
        if gf is None:
            raise MethodError(f"no function named {name}")
        return gf.select(self.reg, TupleType(argtypes))

    def ambiguities(self) -> dict:
        out = {}
        for name, gf in self.functions.items():
            a = gf.ambiguities(self.reg)
            if a:
                out[name] = a
        return out


def sparam_value(binding):
    """Runtime value of a static parameter binding."""
    from .values import TypeVal

    if isinstance(binding, Const):
        return binding.value
    return TypeVal(binding)
