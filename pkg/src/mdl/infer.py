"""Forward dataflow type inference over the block IR.

Each method instance (method plus argument tuple type) is analysed with a
worklist over blocks.  Slot states are joined at block entry and widened so
the analysis terminates.  Calls are resolved by dispatch on leaf argument
types, by union splitting, or by joining over every method that may apply.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import ir as I
from .dispatch import Method, MethodTable
from .errors import AmbiguityError, MethodError
from .intrinsics import INTRINSICS
from .types import (BOTTOM, TOP, Bottom, Const, Exists, Nominal, Top, TupleType, TypeRegistry, TypeTerm,
                    UnionType, Var, free_vars, fresh_var, is_closed, subst)
from .values import BOOL, STRING, typeof


@dataclass
class Limits:
    max_union: int = 4
    max_depth: int = 3
    max_tuple: int = 8
    max_call_recursion: int = 3
    max_block_visits: int = 50
    max_fix_iters: int = 20


@dataclass
class CallSite:
    block: int
    index: int
    fname: str
    argtypes: TypeTerm  # TupleType
    result: TypeTerm


@dataclass
class FrameResult:
    ir: I.IRFunction
    argtypes: TypeTerm
    env: dict
    leaf: bool
    ret: TypeTerm = BOTTOM
    stmt_types: list = field(default_factory=list)  # per block, per statement
    block_in: list = field(default_factory=list)  # per block state or None if unreachable
    sites: dict = field(default_factory=dict)  # (block, index) -> CallSite
    diagnostics: list = field(default_factory=list)
    method: Optional[Method] = None

    def reachable(self, b: int) -> bool:
        return self.block_in[b] is not None


class Inferencer:
    def __init__(self, reg: TypeRegistry, table: MethodTable, limits: Optional[Limits] = None):
        self.reg = reg
        self.table = table
        self.limits = limits or Limits()
        self.cache: dict = {}
        self.in_progress: dict = {}
        self.stack: list = []  # [key, method, deps set]
        self.frames_run = 0
        # how often each kind of widening fired, for the infer report
        self.widenings = {"union": 0, "tuple": 0, "depth": 0, "call_split": 0, "recursion": 0}

    # ---- lattice helpers
    def join(self, a: TypeTerm, b: TypeTerm) -> TypeTerm:
        return self.widen(self.reg.join(a, b))

    def widen(self, t: TypeTerm) -> TypeTerm:
        lim = self.limits
        if isinstance(t, UnionType):
            ms = [self.widen(m) for m in t.members]
            u = self.reg.union(*ms)
            if isinstance(u, UnionType) and len(u.members) > lim.max_union:
                self.widenings["union"] += 1
                return self.reg.common_supertype(u.members)
            return u
        if isinstance(t, TupleType):
            fixed = [self.widen(x) for x in t.fixed]
            va = self.widen(t.vararg) if t.vararg is not None else None
            if len(fixed) > lim.max_tuple:
                self.widenings["tuple"] += 1
                parts = fixed + ([va] if va is not None else [])
                j = self.reg.union(*parts)
                if isinstance(j, UnionType) and len(j.members) > lim.max_union:
                    j = self.reg.common_supertype(j.members)
                return self.reg.canon(TupleType([], j))
            return self.reg.canon(TupleType(fixed, va))
        if isinstance(t, Nominal) and t.params and self._too_deep(t, 0):
            self.widenings["depth"] += 1
            vars_: list = []
            body = self._cut(t, 0, vars_)
            for v in reversed(vars_):
                body = Exists(v, body)
            return self.reg.canon(body)
        return t

    def _too_deep(self, t, d) -> bool:
        if isinstance(t, Nominal):
            if d >= self.limits.max_depth and t.params:
                return True
            return any(self._too_deep(p, d + 1) for p in t.params)
        if isinstance(t, TupleType):
            xs = list(t.fixed) + ([t.vararg] if t.vararg is not None else [])
            return any(self._too_deep(x, d) for x in xs)
        if isinstance(t, UnionType):
            return any(self._too_deep(x, d) for x in t.members)
        if isinstance(t, Exists):
            return self._too_deep(t.body, d)
        return False

    def _cut(self, t: Nominal, d: int, vars_: list) -> TypeTerm:
        decl = self.reg.decl(t.name)
        out = []
        for k, p in enumerate(t.params):
            if isinstance(p, Nominal) and p.params:
                if d + 1 >= self.limits.max_depth:
                    up = decl.params[k].upper if k < len(decl.params) else TOP
                    if not is_closed(up):
                        up = TOP
                    v = fresh_var(Var("W", BOTTOM, up))
                    vars_.append(v)
                    out.append(v)
                else:
                    out.append(self._cut(p, d + 1, vars_))
            elif isinstance(p, (TupleType, UnionType, Exists)) and self._too_deep(p, d + 1):
                up = decl.params[k].upper if k < len(decl.params) else TOP
                v = fresh_var(Var("W", BOTTOM, up if is_closed(up) else TOP))
                vars_.append(v)
                out.append(v)
            else:
                out.append(p)
        return Nominal(t.name, out)

    def narrow(self, a: TypeTerm, t: TypeTerm) -> TypeTerm:
        """Sound over-approximation of the intersection of ``a`` and ``t``."""
        reg = self.reg
        if isinstance(a, Bottom):
            return BOTTOM
        if reg.subtype(a, t):
            return a
        if not reg.may_intersect(a, t):
            return BOTTOM
        if isinstance(a, UnionType):
            return reg.union(*[self.narrow(m, t) for m in a.members])
        body, vars_ = t, []
        while isinstance(body, Exists):
            vars_.append(body.var)
            body = body.body
        if isinstance(a, TupleType) and isinstance(body, TupleType):
            n = len(a.fixed)
            if a.vararg is None and (len(body.fixed) > n or (body.vararg is None and len(body.fixed) != n)):
                return BOTTOM
            fixed = []
            for i in range(n):
                e = body.fixed[i] if i < len(body.fixed) else body.vararg
                fixed.append(self.narrow(a.fixed[i], self._close(e, vars_)))
            va = a.vararg
            if va is not None:
                e = body.vararg if body.vararg is not None else None
                if e is None:
                    fixed_extra = [self._close(x, vars_) for x in body.fixed[n:]]
                    return reg.canon(TupleType(fixed + [self.narrow(va, x) for x in fixed_extra]))
                va = self.narrow(va, self._close(e, vars_))
            return reg.canon(TupleType(fixed, va))
        if isinstance(a, Top) or not isinstance(a, (Nominal, TupleType)):
            return self._close(t, []) if is_closed(t) else TOP
        return t if is_closed(t) else a

    def _close(self, t: TypeTerm, vars_: list) -> TypeTerm:
        fv = free_vars(t)
        for v in reversed(vars_):
            if v.id in fv:
                t = Exists(v, t)
        return self.reg.canon(t) if is_closed(t) else TOP

    # ---- public entry points
    def call_type(self, fname: str, argtypes: list) -> TypeTerm:
        return self.call(fname, self.reg.canon(TupleType(list(argtypes))))

    def call(self, fname: str, argtuple: TypeTerm) -> TypeTerm:
        reg = self.reg
        if isinstance(argtuple, Bottom):
            return BOTTOM
        gf = self.table.get(fname)
        if gf is None:
            return BOTTOM
        if isinstance(argtuple, UnionType):
            return self._join_all(self.call(fname, m) for m in argtuple.members)
        if reg.is_leaf(argtuple):
            try:
                m, _env = gf.lookup(reg, argtuple, lambda: argtuple)
            except (MethodError, AmbiguityError):
                return BOTTOM
            return self.infer_instance(m, argtuple)
        leaves = self.leaf_expansions(argtuple)
        if leaves is not None:
            return self._join_all(self.call(fname, x) for x in leaves)
        cands = gf.candidates(reg, argtuple)
        if len(cands) > self.limits.max_union:
            self.widenings["call_split"] += 1
            return TOP
        out = BOTTOM
        for m in cands:
            nt = self.narrow(argtuple, m.sig)
            if isinstance(nt, Bottom):
                continue
            out = self.join(out, self.infer_instance(m, nt))
        return out

    def _join_all(self, ts) -> TypeTerm:
        out = BOTTOM
        for t in ts:
            out = self.join(out, t)
        return out

    def leaf_expansions(self, argtuple: TypeTerm) -> Optional[list]:
        if not isinstance(argtuple, TupleType) or argtuple.vararg is not None:
            return None
        opts = []
        for x in argtuple.fixed:
            if self.reg.is_leaf(x):
                opts.append([x])
            elif isinstance(x, UnionType) and all(self.reg.is_leaf(m) for m in x.members):
                opts.append(list(x.members))
            else:
                return None
        total = 1
        for o in opts:
            total *= len(o)
        if total > self.limits.max_union:
            return None
        return [TupleType(list(p)) for p in itertools.product(*opts)]

    def result(self, m: Method, argtuple: TypeTerm) -> FrameResult:
        """Final (cached) frame result for an instance, inferring it if needed."""
        key = (m.id, argtuple)
        if key not in self.cache:
            self.infer_instance(m, argtuple)
        r = self.cache.get(key)
        if r is None:  # tainted by an outer in-progress frame: run standalone
            saved = (self.in_progress, self.stack)
            self.in_progress, self.stack = {}, []
            try:
                self.infer_instance(m, argtuple)
            finally:
                self.in_progress, self.stack = saved
            r = self.cache[key]
        return r

    def infer_instance(self, m: Method, argtuple: TypeTerm, force: bool = False) -> TypeTerm:
        key = (m.id, argtuple)
        hit = self.cache.get(key)
        if hit is not None:
            return hit.ret
        if key in self.in_progress:
            pos = next(i for i, e in enumerate(self.stack) if e[0] == key)
            for e in self.stack[pos:]:
                e[2].add(key)
            return self.in_progress[key]
        if not force and sum(1 for e in self.stack if e[1] is m) >= self.limits.max_call_recursion:
            # too deep: analyse once at the declared signature so the cycle closes there
            self.widenings["recursion"] += 1
            wide = self.declared_bound(m, argtuple)
            if wide is None or wide == argtuple:
                return TOP
            return self.infer_instance(m, wide, force=True)
        self.in_progress[key] = BOTTOM
        entry = [key, m, set()]
        self.stack.append(entry)
        try:
            res = None
            for _ in range(self.limits.max_fix_iters):
                entry[2].discard(key)
                res = self.run_method(m, argtuple)
                prov = self.in_progress[key]
                if key not in entry[2] or self.reg.subtype(res.ret, prov):
                    if key in entry[2]:
                        res.ret = prov
                    break
                self.in_progress[key] = self.join(prov, res.ret)
            else:
                res.ret = TOP
        finally:
            self.stack.pop()
            del self.in_progress[key]
        entry[2].discard(key)
        if not entry[2]:
            self.cache[key] = res
        return res.ret

    def declared_bound(self, m: Method, argtuple: TypeTerm) -> Optional[TypeTerm]:
        """The widest argument tuple of ``argtuple``'s shape that ``m`` accepts."""
        if not isinstance(argtuple, TupleType):
            return None
        shape = TupleType([TOP] * len(argtuple.fixed), TOP if argtuple.vararg is not None else None)
        wide = self.narrow(shape, m.sig)
        if isinstance(wide, Bottom) or not self.reg.subtype(argtuple, wide):
            return None
        return wide

    def run_method(self, m: Method, argtuple: TypeTerm) -> FrameResult:
        leaf = self.reg.is_leaf(argtuple)
        env = {}
        if m.sparams and leaf:
            env = m.sparam_env(self.reg, argtuple) or {}
        slots = self.arg_slot_types(m.ir, m, argtuple)
        r = self.run_frame(m.ir, slots, env, leaf, argtuple)
        r.method = m
        return r

    def arg_slot_types(self, ir: I.IRFunction, m: Optional[Method], argtuple: TypeTerm) -> list:
        body = m.param_types() if m is not None else None
        has_va = isinstance(body, TupleType) and body.vararg is not None
        n = ir.nargs
        if not isinstance(argtuple, TupleType):
            return [TOP] * n

        def elt(i):
            if i < len(argtuple.fixed):
                return argtuple.fixed[i]
            return argtuple.vararg if argtuple.vararg is not None else BOTTOM

        out = []
        for i in range(n):
            if has_va and i == n - 1:
                rest = list(argtuple.fixed[i:])
                out.append(self.reg.canon(TupleType(rest, argtuple.vararg)))
            else:
                out.append(elt(i))
        return out

    # ---- the dataflow engine
    def run_frame(self, irf: I.IRFunction, argslots: list, env: dict, leaf: bool,
                  argtypes: TypeTerm = TOP) -> FrameResult:
        self.frames_run += 1
        nb = len(irf.blocks)
        res = FrameResult(irf, argtypes, env, leaf)
        res.stmt_types = [[BOTTOM] * len(b.stmts) for b in irf.blocks]
        res.block_in = [None] * nb
        init = list(argslots) + [BOTTOM] * (irf.nslots - irf.nargs)
        res.block_in[0] = init
        visits = [0] * nb
        work = {0}
        diags: dict = {}
        while work:
            b = min(work)
            work.discard(b)
            blk = irf.blocks[b]
            st = list(res.block_in[b])
            alive = True
            handler = blk.handler
            if handler is not None:
                self._flow(res, handler[0], self._exc_state(st, handler), visits, work)
            for i, s in enumerate(blk.stmts):
                t = self.transfer(s, st, res, b, i, env, leaf, diags)
                res.stmt_types[b][i] = t
                if s.dst is not None:
                    st[s.dst] = t
                if isinstance(t, Bottom) and s.dst is not None:
                    alive = False
                    break
                if handler is not None:
                    self._flow(res, handler[0], self._exc_state(st, handler), visits, work)
            if not alive:
                continue
            term = blk.term
            if isinstance(term, I.Goto):
                self._flow(res, term.target, st, visits, work)
            elif isinstance(term, I.Branch):
                ct = st[term.cond]
                if self.reg.may_intersect(ct, BOOL):
                    self._flow(res, term.then, st, visits, work)
                    self._flow(res, term.other, st, visits, work)
                else:
                    diags[(b, -1)] = f"condition of type {self.reg.show(ct)} is not Bool"
            elif isinstance(term, I.Ret):
                res.ret = self.join(res.ret, st[term.src])
        res.diagnostics = list(diags.values())
        return res

    def _exc_state(self, st, handler):
        if handler[1] is None:
            return st
        s2 = list(st)
        s2[handler[1]] = STRING
        return s2

    def _flow(self, res: FrameResult, target: int, st: list, visits: list, work: set) -> None:
        cur = res.block_in[target]
        if cur is None:
            res.block_in[target] = list(st)
            work.add(target)
            return
        changed = False
        new = list(cur)
        capped = visits[target] >= self.limits.max_block_visits
        for k, (a, b) in enumerate(zip(cur, st)):
            if a is b or a == b:
                continue
            j = self.join(a, b)
            if j != a:
                new[k] = TOP if capped else j
                changed = True
        if changed:
            visits[target] += 1
            res.block_in[target] = new
            work.add(target)

    def transfer(self, s, st, res: FrameResult, b: int, i: int, env: dict, leaf: bool, diags) -> TypeTerm:
        reg = self.reg
        if isinstance(s, I.SConst):
            return typeof(s.value)
        if isinstance(s, I.SMove):
            return st[s.src]
        if isinstance(s, I.SCall):
            argtuple = self.call_argtuple(s, st)
            t = self.call(s.fname, argtuple)
            res.sites[(b, i)] = CallSite(b, i, s.fname, argtuple, t)
            if isinstance(t, Bottom):
                diags[(b, i)] = self._no_method_note(s.fname, argtuple)
            return t
        if isinstance(s, I.SDirect):
            argtuple = reg.canon(TupleType([st[a] for a in s.args]))
            return self.infer_instance(s.target.method, s.target.argtypes) if reg.subtype(argtuple, s.target.argtypes) else self.call(s.fname, argtuple)
        if isinstance(s, I.SIntr):
            ats = [st[a] for a in s.args]
            if any(isinstance(a, Bottom) for a in ats):
                return BOTTOM
            t = INTRINSICS[s.name].tfunc(self, ats)
            return reg.canon(t)
        if isinstance(s, I.SNew):
            if any(isinstance(st[a], Bottom) for a in s.args):
                return BOTTOM
            t = subst(s.type, env) if leaf else s.type
            return reg.canon(t) if is_closed(t) else TOP
        if isinstance(s, I.SGetField):
            return self.field_type(st[s.obj], s.name)
        if isinstance(s, I.SSetField):
            return TOP
        if isinstance(s, I.SAssert):
            T = subst(s.type, env) if leaf else s.type
            if not is_closed(T):
                return st[s.src]
            T = reg.canon(T)
            t = self.narrow(st[s.src], T)
            if isinstance(t, Bottom) and not isinstance(st[s.src], Bottom):
                diags[(b, i)] = f"type assertion ::{reg.show(T)} always fails on {reg.show(st[s.src])}"
            return t
        if isinstance(s, I.SConvert):
            T = subst(s.type, env) if leaf else s.type
            src = st[s.src]
            if isinstance(src, Bottom):
                return BOTTOM
            if not is_closed(T):
                return TOP
            T = reg.canon(T)
            if reg.subtype(src, T):
                return src
            return T
        if isinstance(s, I.SStaticParam):
            if not leaf:
                return TOP
            bnd = env.get(s.name)
            if bnd is None:
                return BOTTOM
            if isinstance(bnd, Const):
                return typeof(bnd.value)
            return reg.canon(Nominal("Type", (bnd,)))
        if isinstance(s, I.SMakeType):
            if not leaf:
                return TOP
            t = subst(s.term, env)
            if not is_closed(t):
                return TOP
            return reg.canon(Nominal("Type", (reg.canon(t),)))
        if isinstance(s, I.STupleGet):
            from .intrinsics import tuple_elem_type

            return tuple_elem_type(self, st[s.src], s.index)
        raise TypeError(f"unknown statement {s!r}")

    def call_argtuple(self, s: I.SCall, st: list) -> TypeTerm:
        if not s.splat:
            return self.reg.canon(TupleType([st[a] for a in s.args]))
        fixed: list = []
        va = None
        for a, sp in zip(s.args, s.splat):
            t = st[a]
            if va is not None:
                va = self.reg.join(va, self._splat_elt(t) if sp else t)
                continue
            if not sp:
                fixed.append(t)
            elif isinstance(t, TupleType):
                fixed.extend(t.fixed)
                if t.vararg is not None:
                    va = t.vararg
            else:
                va = self._splat_elt(t)
        return self.reg.canon(TupleType(fixed, va))

    def _splat_elt(self, t: TypeTerm) -> TypeTerm:
        if isinstance(t, TupleType):
            parts = list(t.fixed) + ([t.vararg] if t.vararg is not None else [])
            return self.reg.union(*parts) if parts else BOTTOM
        return TOP

    def field_type(self, t: TypeTerm, name: str) -> TypeTerm:
        reg = self.reg
        if isinstance(t, Bottom):
            return BOTTOM
        if isinstance(t, UnionType):
            return self._join_all(self.field_type(m, name) for m in t.members)
        if isinstance(t, Nominal) and reg.is_leaf(t):
            d = reg.decl(t.name)
            for fname, ft in reg.field_types(t):
                if fname == name:
                    return reg.canon(ft) if is_closed(ft) else TOP
            if d.fields is not None:
                return BOTTOM
        return TOP

    def _no_method_note(self, fname: str, argtuple: TypeTerm) -> str:
        if self.table.get(fname) is None:
            return f"call to undefined function {fname}"
        return f"call {fname}{self.reg.show(argtuple)} has no successful method"


def slot_types_at(res: FrameResult, b: int, i: int) -> list:
    """Slot state just before statement ``i`` of block ``b``."""
    st = list(res.block_in[b])
    blk = res.ir.blocks[b]
    for k in range(i):
        s = blk.stmts[k]
        if s.dst is not None:
            st[s.dst] = res.stmt_types[b][k]
    return st
