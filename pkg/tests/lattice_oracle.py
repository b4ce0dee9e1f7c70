"""Brute-force semantic oracle for subtyping on small finite hierarchies.

A type denotes the set of leaf types it contains.  Denotations are computed
level by level: parameters of depth d are compared by their denotations over
the level-d universe, so invariance is decided semantically without ever
calling the registry's subtype, meet or join.  ``a <: b`` holds exactly when
denot(a) is a subset of denot(b).

Sentinel leaves stand for everything outside the enumerated universe:
``OTHER`` belongs only to Top, ``SDEEP`` is an ``S{p}`` whose parameter is not
enumerated (and lies below no nominal atom), and ``("OPEN", A)`` is a subtype
of abstract ``A`` that the program has not declared yet.  The last keeps the
oracle nominal: an abstract type never equals the union of its known children.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from mdl.types import BOTTOM, TOP, Bottom, Exists, Nominal, Top, TupleType, TypeRegistry, UnionType, Var

OTHER = "OTHER"
SDEEP = "SDEEP"


@dataclass
class Universe:
    reg: TypeRegistry
    abstracts: list
    tags: list
    chains: dict  # decl name -> ancestor names (inclusive)
    levels: list = field(default_factory=list)  # per depth: (params, leaves)
    _memo: dict = field(default_factory=dict)

    @property
    def atoms(self) -> list:
        return self.abstracts + self.tags

    @property
    def params(self) -> list:
        return self.levels[1][0]


def bare_s(upper=TOP) -> Exists:
    v = Var("T", BOTTOM, upper)
    return Exists(v, Nominal("S", (v,)))


def random_hierarchy(rng: random.Random, max_decls: int = 6) -> Universe:
    """A random single-inheritance hierarchy with one parametric tag ``S{T}``.

    Every abstract type gets a private tag child so no abstract type is empty.
    """
    reg = TypeRegistry()
    chains = {}
    abstracts = []
    for k in range(rng.randint(0, 2)):
        name = f"A{k}"
        sup = rng.choice([None] + abstracts)
        reg.declare(name, supertype=Nominal(sup) if sup else TOP)
        chains[name] = {name} | (chains[sup] if sup else set())
        abstracts.append(name)
    tags = []
    for a in abstracts:
        name = f"W{a}"
        reg.declare(name, supertype=Nominal(a), kind="tag")
        chains[name] = {name} | chains[a]
        tags.append(name)
    room = max_decls - len(reg.decls) - 1
    for k in range(rng.randint(1, max(1, room))):
        name = f"C{k}"
        sup = rng.choice([None] + abstracts)
        reg.declare(name, supertype=Nominal(sup) if sup else TOP, kind="tag")
        chains[name] = {name} | (chains[sup] if sup else set())
        tags.append(name)
    ssup = rng.choice([None] + abstracts)
    reg.declare("S", params=(Var("T"),), supertype=Nominal(ssup) if ssup else TOP, kind="tag")
    chains["S"] = {"S"} | (chains[ssup] if ssup else set())
    u = Universe(reg, [Nominal(n) for n in abstracts], [Nominal(n) for n in tags], chains)
    _build_levels(u)
    return u


def _build_levels(u: Universe) -> None:
    reg = u.reg
    atoms = u.atoms
    p0 = {TOP, BOTTOM, *atoms}
    p0.update(reg.canon(UnionType([x, y])) for x, y in itertools.combinations(atoms, 2))
    p0 = sorted(p0, key=repr)
    opens = [("OPEN", a.name) for a in u.abstracts]
    leaves0 = list(u.tags) + opens + [SDEEP, OTHER]
    u.levels.append((p0, leaves0))
    p1 = set(p0)
    p1.update(reg.canon(Nominal("S", (p,))) for p in p0)
    p1.update(reg.canon(bare_s(b)) for b in [TOP] + u.abstracts)
    p1 = sorted(p1, key=repr)
    leaves1 = list(u.tags) + [reg.canon(Nominal("S", (p,))) for p in p0] + opens + [SDEEP, OTHER]
    u.levels.append((p1, leaves1))
    single = list(u.tags) + [reg.canon(Nominal("S", (p,))) for p in p1]
    single += opens + [SDEEP, OTHER]
    leaves2 = single + [TupleType(())]
    leaves2 += [TupleType((x,)) for x in single]
    leaves2 += [TupleType((x, y)) for x in single for y in single]
    u.levels.append((None, leaves2))


def denot(u: Universe, t, level: int = 2) -> frozenset:
    key = (t, level)
    r = u._memo.get(key)
    if r is None:
        r = u._memo[key] = frozenset(_denot(u, t, level))
    return r


def _is_s(x) -> bool:
    return x == SDEEP or (isinstance(x, Nominal) and x.name == "S")


def _denot(u: Universe, t, level: int):
    leaves = u.levels[level][1]
    if isinstance(t, Top):
        return leaves
    if isinstance(t, Bottom):
        return []
    if isinstance(t, UnionType):
        out = set()
        for m in t.members:
            out |= denot(u, m, level)
        return out
    if isinstance(t, Nominal) and not t.params:
        return [x for x in leaves if (isinstance(x, Nominal) and t.name in u.chains[x.name])
                or (x == SDEEP and t.name in u.chains["S"])
                or (isinstance(x, tuple) and x[0] == "OPEN" and t.name in u.chains[x[1]])]
    if isinstance(t, Nominal):
        assert level > 0, "S{...} does not occur at depth 0"
        target = denot(u, t.params[0], level - 1)
        return [x for x in leaves if isinstance(x, Nominal) and x.name == "S"
                and denot(u, x.params[0], level - 1) == target]
    if isinstance(t, Exists):
        assert level > 0
        body = t.body
        assert isinstance(body, Nominal) and body.name == "S" and body.params[0] == t.var
        up = denot(u, t.var.upper, level - 1)
        out = [x for x in leaves if isinstance(x, Nominal) and x.name == "S"
               and denot(u, x.params[0], level - 1) <= up]
        if isinstance(t.var.upper, Top):
            out.append(SDEEP)
        return out
    if isinstance(t, TupleType):
        out = []
        for x in leaves:
            if not isinstance(x, TupleType):
                continue
            n = len(x.fixed)
            if n < len(t.fixed) or (t.vararg is None and n != len(t.fixed)):
                continue
            if all(e in denot(u, t.fixed[k] if k < len(t.fixed) else t.vararg, level)
                   for k, e in enumerate(x.fixed)):
                out.append(x)
        return out
    raise TypeError(f"oracle cannot interpret {t!r}")


def random_term(u: Universe, rng: random.Random, depth: int = 2):
    """A canonical term of nesting depth <= ``depth`` from the oracle grammar."""
    reg = u.reg
    if depth <= 0:
        return rng.choice(u.levels[0][0])
    k = rng.randrange(6 if depth >= 2 else 4)
    if k == 0:
        return rng.choice(u.levels[depth - 1][0])
    if k == 1:
        return rng.choice([TOP, BOTTOM] + u.atoms)
    if k == 2:
        return reg.canon(Nominal("S", (rng.choice(u.levels[depth - 1][0]),)))
    if k == 3:
        return reg.canon(bare_s(rng.choice([TOP] + u.abstracts)))
    if k == 4:
        return reg.canon(UnionType([random_term(u, rng, depth - 1), random_term(u, rng, depth - 1)]))
    n = rng.randint(0, 2)
    fixed = [random_term(u, rng, depth - 1) for _ in range(n)]
    va = random_term(u, rng, depth - 1) if (rng.random() < 0.3 and n <= 1) else None
    return reg.canon(TupleType(fixed, va))


def oracle_subtype(u: Universe, a, b) -> bool:
    return denot(u, a) <= denot(u, b)
