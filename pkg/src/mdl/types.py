"""Type terms, the declaration registry, and the lattice decision procedures.

Terms are immutable and hash-consed only by value; every term that reaches
``subtype``/``meet``/``join`` is expected to be canonical (see
:meth:`TypeRegistry.canon`).  Union members are sorted by a length-prefixed
structural encoding, so ``Union(Int64,Float64)`` is the canonical spelling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import DeclarationMissing, MalformedType, UnsupportedError

__all__ = [
    "TypeTerm", "Top", "Bottom", "Nominal", "UnionType", "TupleType", "Var",
    "Exists", "Const", "TOP", "BOTTOM", "TypeDecl", "TypeRegistry",
    "base_registry",
]


class TypeTerm:
    __slots__ = ("_h",)

    def __repr__(self) -> str:
        return show(self)

    __str__ = __repr__

    def __hash__(self) -> int:
        try:
            return self._h
        except AttributeError:
            h = self._h = hash(self._key())
            return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def _key(self):  # pragma: no cover - overridden
        raise NotImplementedError


class Top(TypeTerm):
    __slots__ = ()

    def _key(self):
        return ("Top",)


class Bottom(TypeTerm):
    __slots__ = ()

    def _key(self):
        return ("Bottom",)


TOP = Top()
BOTTOM = Bottom()


class Nominal(TypeTerm):
    __slots__ = ("name", "params")

    def __init__(self, name: str, params: Iterable[TypeTerm] = ()):
        self.name = name
        self.params = tuple(params)

    def _key(self):
        return ("N", self.name, self.params)


class UnionType(TypeTerm):
    __slots__ = ("members",)

    def __init__(self, members: Iterable[TypeTerm]):
        self.members = tuple(members)

    def _key(self):
        return ("U", self.members)


class TupleType(TypeTerm):
    __slots__ = ("fixed", "vararg")

    def __init__(self, fixed: Iterable[TypeTerm] = (), vararg: Optional[TypeTerm] = None):
        self.fixed = tuple(fixed)
        self.vararg = vararg

    def _key(self):
        return ("T", self.fixed, self.vararg)


class Var(TypeTerm):
    __slots__ = ("id", "lower", "upper")

    def __init__(self, id: str, lower: TypeTerm = BOTTOM, upper: TypeTerm = TOP):
        self.id = id
        self.lower = lower
        self.upper = upper

    def _key(self):
        return ("V", self.id, self.lower, self.upper)


class Exists(TypeTerm):
    __slots__ = ("var", "body")

    def __init__(self, var: Var, body: TypeTerm):
        self.var = var
        self.body = body

    def _key(self):
        return ("E", self.var, self.body)


class Const(TypeTerm):
    """A value-level type parameter: an array rank or a function name."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def _key(self):
        return ("C", type(self.value).__name__, self.value)


_fresh_ids = itertools.count(1)


def fresh_var(v: Var) -> Var:
    return Var(f"%{next(_fresh_ids)}", v.lower, v.upper)


# -- generic term utilities ----------------------------------------------

def subst(t: TypeTerm, m: dict) -> TypeTerm:
    """Replace free Vars by id according to ``m``."""
    if not m:
        return t
    if isinstance(t, Var):
        if t.id in m:
            return m[t.id]
        lo, up = subst(t.lower, m), subst(t.upper, m)
        if lo is t.lower and up is t.upper:
            return t
        return Var(t.id, lo, up)
    if isinstance(t, Nominal):
        if not t.params:
            return t
        return Nominal(t.name, [subst(p, m) for p in t.params])
    if isinstance(t, UnionType):
        return UnionType([subst(x, m) for x in t.members])
    if isinstance(t, TupleType):
        va = subst(t.vararg, m) if t.vararg is not None else None
        return TupleType([subst(x, m) for x in t.fixed], va)
    if isinstance(t, Exists):
        inner = {k: v for k, v in m.items() if k != t.var.id}
        var = subst(t.var, inner)
        return Exists(var, subst(t.body, inner))
    return t


def free_vars(t: TypeTerm, acc: Optional[set] = None, bound: frozenset = frozenset()) -> set:
    if acc is None:
        acc = set()
    if isinstance(t, Var):
        if t.id not in bound:
            acc.add(t.id)
        free_vars(t.lower, acc, bound)
        free_vars(t.upper, acc, bound)
    elif isinstance(t, Nominal):
        for p in t.params:
            free_vars(p, acc, bound)
    elif isinstance(t, UnionType):
        for x in t.members:
            free_vars(x, acc, bound)
    elif isinstance(t, TupleType):
        for x in t.fixed:
            free_vars(x, acc, bound)
        if t.vararg is not None:
            free_vars(t.vararg, acc, bound)
    elif isinstance(t, Exists):
        free_vars(t.var.lower, acc, bound)
        free_vars(t.var.upper, acc, bound)
        free_vars(t.body, acc, bound | {t.var.id})
    return acc


def is_closed(t: TypeTerm) -> bool:
    return not free_vars(t)


def encode(t: TypeTerm) -> str:
    """Stable structural encoding; names are length-prefixed."""
    if t is TOP or isinstance(t, Top):
        return "A"
    if isinstance(t, Bottom):
        return "B"
    if isinstance(t, Nominal):
        inner = ",".join(encode(p) for p in t.params)
        return f"N{len(t.name)}:{t.name}{{{inner}}}"
    if isinstance(t, UnionType):
        return "U(" + ",".join(encode(x) for x in t.members) + ")"
    if isinstance(t, TupleType):
        va = encode(t.vararg) if t.vararg is not None else ""
        return "T(" + ",".join(encode(x) for x in t.fixed) + ";" + va + ")"
    if isinstance(t, Var):
        return f"V{len(t.id)}:{t.id}"
    if isinstance(t, Exists):
        v = t.var
        return f"E{len(v.id)}:{v.id}[{encode(v.lower)},{encode(v.upper)}]" + encode(t.body)
    if isinstance(t, Const):
        s = str(t.value)
        return f"C{type(t.value).__name__[0]}{len(s)}:{s}"
    raise TypeError(t)


def type_depth(t: TypeTerm) -> int:
    """Nesting depth of Nominal parameter positions (Int64 has depth 0)."""
    if isinstance(t, Nominal):
        return 1 + max((type_depth(p) for p in t.params), default=-1) if t.params else 0
    if isinstance(t, UnionType):
        return max((type_depth(x) for x in t.members), default=0)
    if isinstance(t, TupleType):
        xs = list(t.fixed) + ([t.vararg] if t.vararg is not None else [])
        return max((type_depth(x) for x in xs), default=0)
    if isinstance(t, Exists):
        return type_depth(t.body)
    return 0


# -- printing ------------------------------------------------------------

def show(t: TypeTerm, registry: "TypeRegistry | None" = None) -> str:
    reg = registry if registry is not None else _default_registry()
    return _show(t, reg, False)


def _show(t, reg, nested):
    if isinstance(t, Top):
        return "Any"
    if isinstance(t, Bottom):
        return "Union()"
    if isinstance(t, Nominal):
        if not t.params:
            return t.name
        return t.name + "{" + ",".join(_show(p, reg, True) for p in t.params) + "}"
    if isinstance(t, UnionType):
        return "Union(" + ",".join(_show(x, reg, True) for x in t.members) + ")"
    if isinstance(t, TupleType):
        parts = [_show(x, reg, True) for x in t.fixed]
        if t.vararg is not None:
            parts.append(_show(t.vararg, reg, True) + "...")
        if len(parts) == 1:
            return "(" + parts[0] + ",)"
        return "(" + ",".join(parts) + ")"
    if isinstance(t, Var):
        return t.id
    if isinstance(t, Const):
        return str(t.value) if isinstance(t.value, int) else ":" + str(t.value)
    if isinstance(t, Exists):
        bare = reg.bare_name(t) if reg is not None else None
        if bare is not None:
            return bare
        vars_ = []
        body = t
        while isinstance(body, Exists):
            vars_.append(body.var)
            body = body.body
        binders = []
        for v in vars_:
            s = v.id
            if not isinstance(v.upper, Top):
                s = f"{s}<:{_show(v.upper, reg, True)}"
            if not isinstance(v.lower, Bottom):
                s = f"{_show(v.lower, reg, True)}<:{s}"
            binders.append(s)
        text = _show(body, reg, True) + " where " + ",".join(binders)
        return "(" + text + ")" if nested else text
    raise TypeError(t)


# -- declarations --------------------------------------------------------

@dataclass
class TypeDecl:
    name: str
    params: tuple  # tuple[Var, ...] with declared bounds
    supertype: TypeTerm
    kind: str = "abstract"  # "abstract" | "tag"
    fields: Optional[tuple] = None  # tuple[(name, TypeTerm)] for tag types
    builtin: bool = False

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass
class Alias:
    name: str
    params: tuple  # Vars
    body: TypeTerm


# -- the subtype engine --------------------------------------------------

class _Sub:
    """Subtyping with existential witness search.

    ``env`` maps a variable id to ``[var, binding, level, is_uvar]``.  Vars
    introduced by an Exists on the right are unification variables; vars
    introduced on the left are rigid skolems.  Envs are copied on write.
    """

    def __init__(self, reg: "TypeRegistry"):
        self.reg = reg
        self.level = 0

    def open(self, t: Exists, env: dict, uvar: bool):
        self.level += 1
        v = t.var
        nv = fresh_var(v)
        body = subst(t.body, {v.id: nv})
        env = dict(env)
        env[nv.id] = (nv, None, self.level, uvar)
        return nv, body, env

    def resolve(self, t, env):
        if not env:
            return t
        m = {}
        for k, (v, b, _lvl, _u) in env.items():
            if b is not None:
                m[k] = b
        if not m:
            return t
        # bindings may refer to other bound vars
        for _ in range(4):
            t2 = subst(t, m)
            if t2 == t:
                break
            t = t2
        return t

    def bind(self, var_entry, val, env):
        v, _b, lvl, u = var_entry
        for fv in free_vars(val):
            e = env.get(fv)
            if e is not None and not e[3] and e[2] > lvl:
                return None  # skolem escaping its scope
        lo = self.resolve(v.lower, env)
        up = self.resolve(v.upper, env)
        if not isinstance(lo, Bottom):
            env = self.sub(lo, val, env)
            if env is None:
                return None
        if not isinstance(up, Top):
            env = self.sub(val, up, env)
            if env is None:
                return None
        env = dict(env)
        env[v.id] = (v, val, lvl, u)
        return env

    def eq(self, a, b, env):
        if a == b and not env:
            return env
        e = self.sub(a, b, env)
        if e is None:
            return None
        return self.sub(b, a, e)

    def sub(self, a: TypeTerm, b: TypeTerm, env: dict):
        if a is b or a == b:
            return env
        if isinstance(b, Top) or isinstance(a, Bottom):
            return env
        if isinstance(b, Var):
            e = env.get(b.id)
            if e is not None and e[3]:
                if e[1] is None:
                    return self.bind(e, a, env)
                return self.sub(a, e[1], env)
        if isinstance(a, Var):
            e = env.get(a.id)
            if e is not None and e[3]:
                if e[1] is None:
                    return self.bind(e, b, env)
                return self.sub(e[1], b, env)
        if isinstance(a, Exists):
            _nv, body, env = self.open(a, env, uvar=False)
            return self.sub(body, b, env)
        if isinstance(a, UnionType):
            for m in a.members:
                env = self.sub(m, b, env)
                if env is None:
                    return None
            return env
        if isinstance(b, Exists):
            _nv, body, env2 = self.open(b, env, uvar=True)
            r = self.sub(a, body, env2)
            if r is None:
                return None
            # drop the local unification variable, keep outer bindings
            r = dict(r)
            r.pop(_nv.id, None)
            return r
        if isinstance(b, UnionType):
            if isinstance(a, TupleType) and any(isinstance(x, UnionType) for x in a.fixed):
                return self.sub(_distribute(a), b, env)
            for m in b.members:
                r = self.sub(a, m, env)
                if r is not None:
                    return r
            return None
        if isinstance(a, Var):
            return self.sub(a.upper, b, env)
        if isinstance(b, Var):
            if isinstance(b.lower, Bottom):
                return None
            return self.sub(a, b.lower, env)
        if isinstance(b, Bottom) or isinstance(a, Top):
            return None
        if isinstance(a, TupleType):
            if isinstance(b, TupleType):
                return self.sub_tuple(a, b, env)
            return None
        if isinstance(a, Nominal) and isinstance(b, Nominal):
            return self.sub_nominal(a, b, env)
        return None

    def _is_uvar(self, t, env):
        if isinstance(t, Var):
            e = env.get(t.id)
            return e is not None and e[3]
        return False

    def sub_tuple(self, a: TupleType, b: TupleType, env):
        fa, fb = a.fixed, b.fixed
        pairs = []
        if b.vararg is None:
            if a.vararg is not None or len(fa) != len(fb):
                return None
            pairs = list(zip(fa, fb))
        else:
            if len(fa) < len(fb):
                return None
            pairs = list(zip(fa[: len(fb)], fb))
            pairs += [(x, b.vararg) for x in fa[len(fb):]]
            if a.vararg is not None:
                pairs.append((a.vararg, b.vararg))
        # bare unification vars bind last so invariant positions fix them first
        pairs.sort(key=lambda p: self._is_uvar(p[1], env))
        for x, y in pairs:
            env = self.sub(x, y, env)
            if env is None:
                return None
        return env

    def sub_nominal(self, a: Nominal, b: Nominal, env):
        reg = self.reg
        while a.name != b.name:
            a = reg.supertype(a)
            if not isinstance(a, Nominal):
                return None
        for x, y in zip(a.params, b.params):
            env = self.eq(x, y, env)
            if env is None:
                return None
        return env


def _distribute(t: TupleType) -> TypeTerm:
    choices = [x.members if isinstance(x, UnionType) else (x,) for x in t.fixed]
    return UnionType([TupleType(c, t.vararg) for c in itertools.product(*choices)])


# -- registry ------------------------------------------------------------

class TypeRegistry:
    """Frozen-after-load table of nominal declarations plus the lattice ops."""

    def __init__(self):
        self.decls: dict[str, TypeDecl] = {}
        self.aliases: dict[str, Alias] = {}
        self._super_cache: dict = {}
        self._sub_cache: dict = {}

    # ---- declarations
    def declare(self, name: str, params=(), supertype: TypeTerm = TOP, kind: str = "abstract",
                fields=None, builtin: bool = False) -> TypeDecl:
        if name in self.decls or name in self.aliases:
            raise MalformedType(f"type {name} already declared")
        params = tuple(params)
        if not isinstance(supertype, Top):
            head = supertype.body if isinstance(supertype, Exists) else supertype
            while isinstance(head, Exists):
                head = head.body
            if not isinstance(head, Nominal):
                raise MalformedType(f"supertype of {name} must be a nominal type")
            sd = self.decl(head.name)
            if sd.kind != "abstract":
                raise MalformedType(f"cannot subtype tag type {sd.name}")
            if len(head.params) != sd.arity:
                raise MalformedType(f"supertype {head.name} expects {sd.arity} parameters")
        d = TypeDecl(name, params, supertype, kind, tuple(fields) if fields is not None else None, builtin)
        self.decls[name] = d
        self._super_cache.clear()
        self._sub_cache.clear()
        return d

    def alias(self, name: str, params, body: TypeTerm) -> None:
        if name in self.decls or name in self.aliases:
            raise MalformedType(f"type {name} already declared")
        self.aliases[name] = Alias(name, tuple(params), body)

    def decl(self, name: str) -> TypeDecl:
        try:
            return self.decls[name]
        except KeyError:
            raise DeclarationMissing(f"type {name} is not declared") from None

    def is_abstract(self, t: TypeTerm) -> bool:
        return isinstance(t, Nominal) and self.decl(t.name).kind == "abstract"

    def supertype(self, t: Nominal) -> TypeTerm:
        r = self._super_cache.get(t)
        if r is None:
            d = self.decl(t.name)
            if len(t.params) != d.arity:
                raise MalformedType(f"{t.name} expects {d.arity} parameters, got {len(t.params)}")
            r = subst(d.supertype, {v.id: p for v, p in zip(d.params, t.params)})
            self._super_cache[t] = r
        return r

    def field_types(self, t: Nominal) -> list:
        d = self.decl(t.name)
        m = {v.id: p for v, p in zip(d.params, t.params)}
        return [(n, subst(ft, m)) for n, ft in (d.fields or ())]

    def bare(self, name: str) -> TypeTerm:
        """The existential form of a parametric declaration, e.g. ``S``."""
        d = self.decl(name)
        if not d.params:
            return Nominal(name)
        vs = list(d.params)
        m = {}
        newvs = []
        for v in vs:
            nv = Var(f"%{next(_fresh_ids)}", subst(v.lower, m), subst(v.upper, m))
            m[v.id] = nv
            newvs.append(nv)
        t: TypeTerm = Nominal(name, newvs)
        for nv in reversed(newvs):
            t = Exists(nv, t)
        return self.canon(t)

    def bare_name(self, t: Exists) -> Optional[str]:
        vars_ = []
        body = t
        while isinstance(body, Exists):
            vars_.append(body.var)
            body = body.body
        if not isinstance(body, Nominal) or body.name not in self.decls:
            return None
        if len(body.params) != len(vars_) or any(p != v for p, v in zip(body.params, vars_)):
            return None
        try:
            return body.name if self.bare(body.name) == t else None
        except Exception:
            return None

    def show(self, t: TypeTerm) -> str:
        return show(t, self)

    # ---- canonical forms
    def canon(self, t: TypeTerm, depth: int = 0) -> TypeTerm:
        if isinstance(t, (Top, Bottom, Const)):
            return t
        if isinstance(t, Var):
            lo, up = self.canon(t.lower, depth), self.canon(t.upper, depth)
            return Var(t.id, lo, up)
        if isinstance(t, Nominal):
            d = self.decl(t.name)
            if len(t.params) != d.arity:
                raise MalformedType(f"{t.name} expects {d.arity} parameters, got {len(t.params)}")
            if not t.params:
                return t
            return Nominal(t.name, [self.canon(p, depth) for p in t.params])
        if isinstance(t, TupleType):
            fixed = [self.canon(x, depth) for x in t.fixed]
            va = self.canon(t.vararg, depth) if t.vararg is not None else None
            if any(isinstance(x, Bottom) for x in fixed):
                return BOTTOM
            if isinstance(va, Bottom):
                va = None
            tt = TupleType(fixed, va)
            if any(isinstance(x, UnionType) for x in fixed):
                return self.canon(_distribute(tt), depth)
            return tt
        if isinstance(t, UnionType):
            return self._canon_union([self.canon(x, depth) for x in t.members])
        if isinstance(t, Exists):
            v = t.var
            cid = f"T{depth + 1}"
            nv = Var(cid, self.canon(v.lower, depth), self.canon(v.upper, depth))
            body = self.canon(subst(t.body, {v.id: nv}), depth + 1)
            if nv.id not in free_vars(body):
                return body
            if isinstance(body, (Top, Bottom)):
                return body
            return Exists(nv, body)
        raise TypeError(t)

    def _canon_union(self, members: list) -> TypeTerm:
        flat: list = []
        for m in members:
            if isinstance(m, UnionType):
                flat.extend(m.members)
            elif isinstance(m, Bottom):
                continue
            elif isinstance(m, Top):
                return TOP
            else:
                flat.append(m)
        uniq: list = []
        seen = set()
        for m in sorted(flat, key=encode):
            if m not in seen:
                seen.add(m)
                uniq.append(m)
        kept = []
        for i, m in enumerate(uniq):
            absorbed = False
            for j, n in enumerate(uniq):
                if i != j and self.subtype(m, n):
                    # on mutual subtyping keep the first by encoding order
                    if not self.subtype(n, m) or j < i:
                        absorbed = True
                        break
            if not absorbed:
                kept.append(m)
        if not kept:
            return BOTTOM
        if len(kept) == 1:
            return kept[0]
        return UnionType(kept)

    def union(self, *members: TypeTerm) -> TypeTerm:
        return self._canon_union(list(members))

    # ---- lattice operations
    def subtype(self, a: TypeTerm, b: TypeTerm) -> bool:
        if a is b:
            return True
        key = (a, b)
        r = self._sub_cache.get(key)
        if r is None:
            r = _Sub(self).sub(a, b, {}) is not None
            if len(self._sub_cache) > 200_000:
                self._sub_cache.clear()
            self._sub_cache[key] = r
        return r

    def match(self, a: TypeTerm, sig: TypeTerm) -> Optional[dict]:
        """Decide ``a <: sig`` and return the witness for sig's outer vars.

        Returns None when ``a`` is not a subtype; otherwise a dict mapping the
        signature's binder names to their witnessed types (None if unconstrained).
        """
        s = _Sub(self)
        env: dict = {}
        names = []
        body = sig
        while isinstance(body, Exists):
            nv, body, env = s.open(body, env, uvar=True)
            names.append(nv.id)
        # recover the original names in binder order
        orig = []
        t = sig
        while isinstance(t, Exists):
            orig.append(t.var.id)
            t = t.body
        r = s.sub(a, body, env)
        if r is None:
            return None
        out = {}
        for o, fid in zip(orig, names):
            b = r[fid][1]
            out[o] = s.resolve(b, r) if b is not None else None
        return out

    def meet(self, a: TypeTerm, b: TypeTerm) -> TypeTerm:
        if isinstance(a, Top):
            return b
        if isinstance(b, Top):
            return a
        if isinstance(a, Bottom) or isinstance(b, Bottom):
            return BOTTOM
        if self.subtype(a, b):
            return a
        if self.subtype(b, a):
            return b
        if isinstance(a, UnionType):
            return self._canon_union([self.meet(m, b) for m in a.members])
        if isinstance(b, UnionType):
            return self._canon_union([self.meet(a, m) for m in b.members])
        if isinstance(a, TupleType) and isinstance(b, TupleType):
            return self._meet_tuple(a, b)
        return BOTTOM

    def _meet_tuple(self, a: TupleType, b: TupleType) -> TypeTerm:
        n = max(len(a.fixed), len(b.fixed))

        def elt(t, i):
            if i < len(t.fixed):
                return t.fixed[i]
            return t.vararg

        if (a.vararg is None and len(a.fixed) < n) or (b.vararg is None and len(b.fixed) < n):
            return BOTTOM
        fixed = []
        for i in range(n):
            m = self.meet(elt(a, i), elt(b, i))
            if isinstance(m, Bottom):
                return BOTTOM
            fixed.append(m)
        va = None
        if a.vararg is not None and b.vararg is not None:
            va = self.meet(a.vararg, b.vararg)
        return self.canon(TupleType(fixed, va))

    def join(self, a: TypeTerm, b: TypeTerm) -> TypeTerm:
        if isinstance(a, Bottom):
            return b
        if isinstance(b, Bottom):
            return a
        if a == b:
            return a
        return self._canon_union([a, b])

    def is_leaf(self, t: TypeTerm) -> bool:
        if isinstance(t, Nominal):
            d = self.decls.get(t.name)
            return d is not None and d.kind == "tag" and all(is_closed(p) for p in t.params)
        if isinstance(t, TupleType):
            return t.vararg is None and all(self.is_leaf(x) for x in t.fixed)
        return False

    def may_intersect(self, a: TypeTerm, b: TypeTerm) -> bool:
        """Conservative test for a non-empty intersection (never a false 'no')."""
        return _intersects(self, a, b, {})

    def common_supertype(self, ts: Iterable[TypeTerm]) -> TypeTerm:
        """Nearest nominal ancestor shared by all ``ts`` (Top if none)."""
        chains = []
        for t in ts:
            if not isinstance(t, Nominal):
                return TOP
            chain = []
            x: TypeTerm = t
            while isinstance(x, Nominal):
                chain.append(x)
                x = self.supertype(x)
            chains.append(chain)
        if not chains:
            return BOTTOM
        first = chains[0]
        for anc in first:
            heads = []
            for ch in chains[1:]:
                hit = next((c for c in ch if c.name == anc.name), None)
                if hit is None:
                    break
                heads.append(hit)
            else:
                if all(h == anc for h in heads):
                    return anc
                return self.bare(anc.name)
        return TOP

    def count_instances(self, head: str) -> int:
        d = self.decl(head)
        if d.arity == 0:
            return 1
        for other in self.decls.values():
            if other.name != head and other.params:
                raise UnsupportedError("universe is infinite: parametric declaration " + other.name)
        atoms = {TOP, BOTTOM}
        for other in self.decls.values():
            if other.name != head:
                atoms.add(Nominal(other.name))
        inst = {self.canon(Nominal(head, ps)) for ps in itertools.product(sorted(atoms, key=encode), repeat=d.arity)}
        return len(inst)


def _intersects(reg: TypeRegistry, a, b, env) -> bool:
    if isinstance(a, Bottom) or isinstance(b, Bottom):
        return False
    if isinstance(a, Top) or isinstance(b, Top):
        return True
    if isinstance(a, Var) or isinstance(b, Var):
        return True
    if isinstance(a, Exists):
        return _intersects(reg, a.body, b, env)
    if isinstance(b, Exists):
        return _intersects(reg, a, b.body, env)
    if isinstance(a, UnionType):
        return any(_intersects(reg, m, b, env) for m in a.members)
    if isinstance(b, UnionType):
        return any(_intersects(reg, a, m, env) for m in b.members)
    if isinstance(a, Const) or isinstance(b, Const):
        return a == b
    if isinstance(a, TupleType) and isinstance(b, TupleType):
        n = max(len(a.fixed), len(b.fixed))
        if (a.vararg is None and len(a.fixed) < n) or (b.vararg is None and len(b.fixed) < n):
            return False
        if a.vararg is None and b.vararg is None and len(a.fixed) != len(b.fixed):
            return False
        binds: dict = {}
        for i in range(n):
            x = a.fixed[i] if i < len(a.fixed) else a.vararg
            y = b.fixed[i] if i < len(b.fixed) else b.vararg
            if not _intersects_bind(reg, x, y, binds):
                return False
        return True
    if isinstance(a, Nominal) and isinstance(b, Nominal):
        return _intersects_bind(reg, a, b, {})
    return False


def _intersects_bind(reg, x, y, binds: dict) -> bool:
    """Like ``_intersects`` but tracks bare vars so ``(Type{T}, T)`` is joint-checked."""
    if isinstance(y, Var) and not isinstance(x, Var):
        if y.id in binds:
            return _intersects(reg, x, binds[y.id], {})
        binds[y.id] = x
        return True
    if isinstance(x, Var) and not isinstance(y, Var):
        return _intersects_bind(reg, y, x, binds)
    if isinstance(x, Nominal) and isinstance(y, Nominal):
        a, b = x, y
        if a.name != b.name:
            # lift whichever side reaches the other's head
            a2: TypeTerm = a
            while isinstance(a2, Nominal) and a2.name != b.name:
                a2 = reg.supertype(a2)
            if isinstance(a2, Nominal):
                a = a2
            else:
                b2: TypeTerm = b
                while isinstance(b2, Nominal) and b2.name != a.name:
                    b2 = reg.supertype(b2)
                if not isinstance(b2, Nominal):
                    return False
                b = b2
        for p, q in zip(a.params, b.params):
            if not _param_may_equal(reg, p, q, binds):
                return False
        return True
    if isinstance(x, Exists):
        return _intersects_bind(reg, x.body, y, binds)
    if isinstance(y, Exists):
        return _intersects_bind(reg, x, y.body, binds)
    return _intersects(reg, x, y, {})


def _param_may_equal(reg, p, q, binds) -> bool:
    if isinstance(q, Var):
        if q.id in binds:
            return _param_may_equal(reg, p, binds[q.id], {})
        binds[q.id] = p
        return True
    if isinstance(p, Var):
        if p.id in binds:
            return _param_may_equal(reg, binds[p.id], q, {})
        binds[p.id] = q
        return True
    if free_vars(p) or free_vars(q):
        if isinstance(p, Nominal) and isinstance(q, Nominal):
            return p.name == q.name and all(_param_may_equal(reg, x, y, binds) for x, y in zip(p.params, q.params))
        return True
    if p == q:
        return True
    return reg.subtype(p, q) and reg.subtype(q, p)


# -- builtin declarations ------------------------------------------------

def _v(name, upper=TOP):
    return Var(name, BOTTOM, upper)


def base_registry() -> TypeRegistry:
    """Registry with the builtin nominal hierarchy used by the runtime."""
    r = TypeRegistry()
    N = Nominal
    r.declare("Number", builtin=True)
    r.declare("Real", supertype=N("Number"), builtin=True)
    r.declare("Integer", supertype=N("Real"), builtin=True)
    r.declare("Signed", supertype=N("Integer"), builtin=True)
    r.declare("AbstractFloat", supertype=N("Real"), builtin=True)
    r.declare("Int64", supertype=N("Signed"), kind="tag", builtin=True)
    r.declare("Float64", supertype=N("AbstractFloat"), kind="tag", builtin=True)
    r.declare("Bool", kind="tag", builtin=True)
    r.declare("String", kind="tag", builtin=True)
    r.declare("Nothing", kind="tag", builtin=True)
    r.declare("Colon", kind="tag", builtin=True)
    T, Nv = _v("T"), _v("N")
    r.declare("Type", params=(T,), kind="tag", builtin=True)
    r.declare("Function", params=(_v("F"),), kind="tag", builtin=True)
    r.declare("AbstractArray", params=(T, Nv), builtin=True)
    r.declare("DenseArray", params=(T, Nv), supertype=N("AbstractArray", (T, Nv)), builtin=True)
    r.declare("Array", params=(T, Nv), supertype=N("DenseArray", (T, Nv)), kind="tag", builtin=True)
    r.declare("Range", params=(T,), supertype=N("AbstractArray", (T, Const(1))), builtin=True)
    r.declare("UnitRange", params=(T,), supertype=N("Range", (T,)), kind="tag", builtin=True)
    for e in ("BoundsError", "DivideError", "ErrorException"):
        r.declare(e, kind="tag", fields=(), builtin=True)
    r.alias("Int", (), N("Int64"))
    r.alias("Any", (), TOP)
    r.alias("Vector", (T,), N("Array", (T, Const(1))))
    r.alias("Matrix", (T,), N("Array", (T, Const(2))))
    r.alias("AbstractVector", (T,), N("AbstractArray", (T, Const(1))))
    r.alias("AbstractMatrix", (T,), N("AbstractArray", (T, Const(2))))
    r.alias("StridedVector", (T,), N("DenseArray", (T, Const(1))))
    r.alias("StridedMatrix", (T,), N("DenseArray", (T, Const(2))))
    return r


_DEFAULT: list = []


def _default_registry() -> TypeRegistry:
    if not _DEFAULT:
        _DEFAULT.append(base_registry())
    return _DEFAULT[0]
