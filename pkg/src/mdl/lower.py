"""Lowering from the surface AST to the block IR.

Every function has a single flat scope: a name assigned anywhere in the body
is a local slot.  Names that are not locals resolve, in order, to static
parameters, types (first-class type values) and generic functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import astnodes as A
from . import ir as I
from .errors import LoweringError, MalformedType
from .intrinsics import INTRINSIC_NAMES
from .types import (BOTTOM, TOP, Const, Exists, Nominal, TupleType, TypeRegistry, UnionType, Var,
                    free_vars, fresh_var, is_closed, subst)
from .values import COLON_VAL, FunctionVal, TypeVal


# -- type expressions -----------------------------------------------------------

def resolve_type(t, reg: TypeRegistry, scope: Optional[dict] = None, canon: bool = True):
    out = _resolve(t, reg, scope or {})
    return reg.canon(out) if canon else out


def _resolve(t, reg: TypeRegistry, scope: dict):
    if isinstance(t, A.TName):
        name = t.name
        if name in scope:
            if t.params is not None:
                raise MalformedType(f"type variable {name} cannot take parameters")
            return scope[name]
        if name == "Any" and t.params is None:
            return TOP
        args = [_resolve(p, reg, scope) for p in (t.params or [])]
        if name in reg.aliases:
            al = reg.aliases[name]
            if len(args) > len(al.params):
                raise MalformedType(f"{name} takes at most {len(al.params)} parameters")
            m = {v.id: a for v, a in zip(al.params, args)}
            rest = [fresh_var(v) for v in al.params[len(args):]]
            m.update({v.id: r for v, r in zip(al.params[len(args):], rest)})
            body = subst(al.body, m)
            for r in reversed(rest):
                body = Exists(r, body)
            return body
        d = reg.decl(name)
        if t.params is None:
            return reg.bare(name) if d.params else Nominal(name)
        if len(args) > d.arity:
            raise MalformedType(f"{name} expects {d.arity} parameters, got {len(args)}")
        m = {}
        full = []
        rest = []
        for k, pv in enumerate(d.params):
            if k < len(args):
                a = args[k]
                up = subst(pv.upper, m)
                if is_closed(a) and is_closed(up) and not isinstance(a, Const) and not reg.subtype(reg.canon(a), reg.canon(up)):
                    raise MalformedType(f"parameter {a} of {name} violates bound {up}")
                full.append(a)
                m[pv.id] = a
            else:
                nv = Var(f"%{name}{k}", subst(pv.lower, m), subst(pv.upper, m))
                nv = fresh_var(nv)
                rest.append(nv)
                full.append(nv)
                m[pv.id] = nv
        body = Nominal(name, full)
        for r in reversed(rest):
            body = Exists(r, body)
        return body
    if isinstance(t, A.TUnion):
        return UnionType([_resolve(m, reg, scope) for m in t.members]) if t.members else BOTTOM
    if isinstance(t, A.TTuple):
        va = _resolve(t.vararg, reg, scope) if t.vararg is not None else None
        return TupleType([_resolve(x, reg, scope) for x in t.items], va)
    if isinstance(t, A.TInt):
        return Const(t.value)
    if isinstance(t, A.TSym):
        return Const(t.name)
    if isinstance(t, A.TWhere):
        inner = dict(scope)
        vs = []
        for b in t.binders:
            up = _resolve(b.upper, reg, inner) if b.upper is not None else TOP
            lo = _resolve(b.lower, reg, inner) if b.lower is not None else BOTTOM
            v = Var(b.name, lo, up)
            inner[b.name] = v
            vs.append(v)
        body = _resolve(t.body, reg, inner)
        for v in reversed(vs):
            body = Exists(v, body)
        return body
    raise MalformedType(f"not a type expression: {t!r}")


def parse_type_string(s: str, reg: TypeRegistry):
    from .parser import parse_type_expr

    return resolve_type(parse_type_expr(s), reg)


# -- lowering environment ----------------------------------------------------------

@dataclass
class LowerEnv:
    reg: TypeRegistry
    functions: set = field(default_factory=set)
    path: Optional[str] = None


def _err(msg, node=None, env=None):
    line = getattr(node, "line", 0)
    where = f"{(env.path if env else None) or '<input>'}:{line}: " if line else ""
    return LoweringError(where + msg)


def collect_assigned(stmts, acc: list):
    def add(n):
        if n not in acc:
            acc.append(n)

    for s in stmts:
        if isinstance(s, A.Assign):
            for t in s.targets:
                if isinstance(t, A.Name):
                    add(t.id)
                elif isinstance(t, A.Declared):
                    add(t.name)
        elif isinstance(s, A.If):
            collect_assigned(s.body, acc)
            for _, b in s.elifs:
                collect_assigned(b, acc)
            if s.orelse:
                collect_assigned(s.orelse, acc)
        elif isinstance(s, A.While):
            collect_assigned(s.body, acc)
        elif isinstance(s, A.For):
            for v, _ in s.specs:
                add(v)
            collect_assigned(s.body, acc)
        elif isinstance(s, A.Try):
            collect_assigned(s.body, acc)
            if s.catch_var:
                add(s.catch_var)
            if s.catch_body:
                collect_assigned(s.catch_body, acc)
    return acc


# -- function lowering ---------------------------------------------------------------

@dataclass
class LoweredMethod:
    name: str
    sig: object  # canonical TypeTerm
    sparams: list  # static parameter names, binder order of sig
    ir: I.IRFunction
    line: int = 0


def method_signature(fdef: A.FunctionDef, reg: TypeRegistry):
    scope: dict = {}
    vars_ = []
    for b in fdef.tparams:
        up = resolve_type(b.upper, reg, scope, canon=False) if b.upper is not None else TOP
        v = Var(b.name, BOTTOM, up)
        scope[b.name] = v
        vars_.append(v)
    ptypes = [resolve_type(p.type, reg, scope, canon=False) if p.type is not None else TOP for p in fdef.params]
    if fdef.params and fdef.params[-1].vararg:
        tup = TupleType(ptypes[:-1], ptypes[-1])
    else:
        tup = TupleType(ptypes)
    used = free_vars(tup)
    changed = True
    while changed:
        changed = False
        for v in vars_:
            if v.id in used:
                extra = free_vars(v.upper) | free_vars(v.lower)
                if not extra <= used:
                    used |= extra
                    changed = True
    sig = tup
    sparams = []
    for v in reversed(vars_):
        if v.id in used:
            sig = Exists(v, sig)
            sparams.insert(0, v.id)
    return reg.canon(sig), sparams, scope


class FnLowerer:
    def __init__(self, env: LowerEnv, name: str, params: list, body: list, scope: dict, line: int = 0):
        self.env = env
        self.reg = env.reg
        self.scope = scope  # static parameter name -> Var
        names = [p.name or f"#arg{k}" for k, p in enumerate(params)]
        for n in names:
            if names.count(n) > 1 and not n.startswith("#"):
                raise _err(f"duplicate parameter name {n}", None, env)
        self.ir = I.IRFunction(name, len(params), list(names), [I.Block()], {}, list(scope), line)
        self.locals = {n: k for k, n in enumerate(names)}
        for n in collect_assigned(body, []):
            if n not in self.locals:
                if n in self.scope:
                    raise _err(f"cannot assign to static parameter {n}", None, env)
                self.locals[n] = self.ir.new_slot(n)
        self.cur = 0
        self.loops: list = []
        self.handler = None
        self.end_ctx: list = []
        self.body = body
        self.params = params

    # ---- block plumbing
    def new_block(self) -> int:
        self.ir.blocks.append(I.Block([], None, self.handler))
        return len(self.ir.blocks) - 1

    def emit(self, s):
        self.ir.blocks[self.cur].stmts.append(s)

    def terminate(self, term):
        blk = self.ir.blocks[self.cur]
        if blk.term is None:
            blk.term = term
        self.cur = self.new_block()

    def goto(self, target: int):
        blk = self.ir.blocks[self.cur]
        if blk.term is None:
            blk.term = I.Goto(target)
        self.cur = target

    def tmp(self) -> int:
        return self.ir.new_slot("")

    def const(self, value, dst=None) -> int:
        d = self.tmp() if dst is None else dst
        self.emit(I.SConst(d, value))
        return d

    # ---- entry point
    def lower(self) -> I.IRFunction:
        body = self.body
        last = body[-1] if body else None
        for s in body[:-1]:
            self.stmt(s)
        if isinstance(last, A.ExprS):
            v = self.expr(last.expr)
            self.terminate(I.Ret(v))
        elif isinstance(last, A.Assign) and len(last.targets) == 1 and isinstance(last.targets[0], (A.Name, A.Declared)) and last.op is None:
            self.stmt(last)
            t = last.targets[0]
            self.terminate(I.Ret(self.locals[t.id if isinstance(t, A.Name) else t.name]))
        elif last is not None:
            self.stmt(last)
        blk = self.ir.blocks[self.cur]
        if blk.term is None:
            self.terminate(I.Ret(self.const(None)))
        finish(self.ir, self.env)
        return self.ir

    # ---- statements
    def stmts(self, ss):
        for s in ss:
            self.stmt(s)

    def stmt(self, s):
        if isinstance(s, A.ExprS):
            self.expr(s.expr)
        elif isinstance(s, A.Assign):
            self.assign(s)
        elif isinstance(s, A.If):
            self.if_(s)
        elif isinstance(s, A.While):
            header = self.new_block()
            self.goto(header)
            c = self.expr(s.cond)
            body = self.new_block()
            exit_ = self.new_block()
            self.ir.blocks[self.cur].term = I.Branch(c, body, exit_)
            self.cur = body
            self.loops.append((header, exit_))
            self.stmts(s.body)
            self.loops.pop()
            self.goto(header)
            self.cur = exit_
        elif isinstance(s, A.For):
            self.for_(s.specs, s.body, s)
        elif isinstance(s, A.Return):
            v = self.expr(s.expr) if s.expr is not None else self.const(None)
            self.terminate(I.Ret(v))
        elif isinstance(s, A.Break):
            if not self.loops:
                raise _err("break outside a loop", s, self.env)
            self.terminate(I.Goto(self.loops[-1][1]))
        elif isinstance(s, A.Continue):
            if not self.loops:
                raise _err("continue outside a loop", s, self.env)
            self.terminate(I.Goto(self.loops[-1][0]))
        elif isinstance(s, A.Try):
            self.try_(s)
        elif isinstance(s, (A.FunctionDef, A.TypeDef, A.AliasDef)):
            raise _err("definitions are only allowed at top level", s, self.env)
        else:
            raise _err(f"unsupported statement {type(s).__name__}", s, self.env)

    def if_(self, s: A.If):
        join = None
        arms = [(s.cond, s.body)] + list(s.elifs)
        for cond, body in arms:
            c = self.expr(cond)
            tb = self.new_block()
            fb = self.new_block()
            self.ir.blocks[self.cur].term = I.Branch(c, tb, fb)
            self.cur = tb
            self.stmts(body)
            if self.ir.blocks[self.cur].term is None:
                if join is None:
                    join = self.new_block()
                self.ir.blocks[self.cur].term = I.Goto(join)
            self.cur = fb
        if s.orelse:
            self.stmts(s.orelse)
        if join is None:
            join = self.new_block()
        self.goto(join)

    def for_(self, specs, body, node):
        var, it = specs[0]
        slot = self.locals[var]
        if isinstance(it, A.RangeE):
            start = self.expr(it.start)
            stop = self.expr(it.stop)
            ctr = self.tmp()
            self.emit(I.SMove(ctr, start))
            limit = stop
            get = None
        else:
            coll = self.expr(it)
            limit = self.tmp()
            self.emit(I.SCall(limit, "length", [coll], line=node.line))
            ctr = self.const(1)
            get = coll
        header = self.new_block()
        self.goto(header)
        c = self.tmp()
        self.emit(I.SCall(c, "<=", [ctr, limit], line=node.line))
        bb = self.new_block()
        latch = self.new_block()
        exit_ = self.new_block()
        self.ir.blocks[self.cur].term = I.Branch(c, bb, exit_)
        self.cur = bb
        if get is None:
            self.emit(I.SMove(slot, ctr))
        else:
            self.emit(I.SCall(slot, "getindex", [get, ctr], line=node.line))
        self.loops.append((latch, exit_))
        if len(specs) > 1:
            self.for_(specs[1:], body, node)
        else:
            self.stmts(body)
        self.loops.pop()
        self.goto(latch)
        one = self.const(1)
        self.emit(I.SCall(ctr, "+", [ctr, one], line=node.line))
        self.terminate(I.Goto(header))
        self.cur = exit_

    def try_(self, s: A.Try):
        outer = self.handler
        exc_slot = self.locals[s.catch_var] if s.catch_var else None
        catch_b = self.new_block()
        join = None
        self.handler = (catch_b, exc_slot)
        body_b = self.new_block()
        self.goto(body_b)
        self.stmts(s.body)
        self.handler = outer
        if self.ir.blocks[self.cur].term is None:
            join = self.new_block()
            self.ir.blocks[self.cur].term = I.Goto(join)
        self.cur = catch_b
        if s.catch_body:
            self.stmts(s.catch_body)
        if self.ir.blocks[self.cur].term is None:
            if join is None:
                join = self.new_block()
            self.ir.blocks[self.cur].term = I.Goto(join)
        self.cur = join if join is not None else self.new_block()

    def assign(self, s: A.Assign):
        if s.op is not None:
            t = s.targets[0]
            if isinstance(t, A.Name):
                self.assign_to(t, self.expr(A.Call(s.op, [A.Name(t.id, line=t.line), s.value], line=s.line)))
                return
            if isinstance(t, A.Index):
                obj = self.expr(t.obj)
                idx = self.indices(obj, t.idx)
                cur = self.tmp()
                self.emit(I.SCall(cur, "getindex", [obj] + idx, line=s.line))
                v = self.expr(s.value)
                nv = self.tmp()
                self.emit(I.SCall(nv, s.op, [cur, v], line=s.line))
                self.emit(I.SCall(self.tmp(), "setindex!", [obj, nv] + idx, line=s.line))
                return
            if isinstance(t, A.Field):
                obj = self.expr(t.obj)
                cur = self.tmp()
                self.emit(I.SGetField(cur, obj, t.name))
                v = self.expr(s.value)
                nv = self.tmp()
                self.emit(I.SCall(nv, s.op, [cur, v], line=s.line))
                self.emit(I.SSetField(obj, t.name, nv))
                return
            raise _err("invalid compound assignment target", s, self.env)
        if len(s.targets) == 1:
            t = s.targets[0]
            if isinstance(t, (A.Name, A.Declared)) and not self._declared(t):
                slot = self.locals[t.id if isinstance(t, A.Name) else t.name]
                self.expr(s.value, dst=slot)
                return
            self.assign_to(t, self.expr(s.value))
            return
        v = self.expr(s.value)
        parts = []
        for k, t in enumerate(s.targets):
            p = self.tmp()
            self.emit(I.STupleGet(p, v, k + 1))
            parts.append(p)
        for t, p in zip(s.targets, parts):
            self.assign_to(t, p)

    def _declared(self, t) -> bool:
        if isinstance(t, A.Declared):
            self.declare(t)
            return True
        return self.locals.get(t.id) in self.ir.slot_types

    def declare(self, t: A.Declared):
        slot = self.locals[t.name]
        ty = resolve_type(t.type, self.reg, self.scope)
        old = self.ir.slot_types.get(slot)
        if old is not None and old != ty:
            raise _err(f"conflicting declarations for {t.name}", t, self.env)
        self.ir.slot_types[slot] = ty

    def assign_to(self, t, v: int):
        if isinstance(t, A.Declared):
            self.declare(t)
            t = A.Name(t.name, line=t.line)
        if isinstance(t, A.Name):
            slot = self.locals[t.id]
            ty = self.ir.slot_types.get(slot)
            if ty is not None:
                self.emit(I.SConvert(slot, ty, v))
            elif slot != v:
                self.emit(I.SMove(slot, v))
            return
        if isinstance(t, A.Index):
            obj = self.expr(t.obj)
            idx = self.indices(obj, t.idx)
            self.emit(I.SCall(self.tmp(), "setindex!", [obj, v] + idx, line=t.line))
            return
        if isinstance(t, A.Field):
            obj = self.expr(t.obj)
            self.emit(I.SSetField(obj, t.name, v))
            return
        raise _err("invalid assignment target", t, self.env)

    # ---- expressions
    def expr(self, e, dst: Optional[int] = None) -> int:
        r = self._expr(e, dst)
        if dst is not None and r != dst:
            self.emit(I.SMove(dst, r))
            return dst
        return r

    def _expr(self, e, dst):
        if isinstance(e, A.Lit):
            return self.const(e.value, dst)
        if isinstance(e, A.Name):
            return self.name(e, dst)
        if isinstance(e, A.OpRef):
            return self.const(FunctionVal(e.op), dst)
        if isinstance(e, A.Call):
            return self.call(e, dst)
        if isinstance(e, A.Index):
            obj = self.expr(e.obj)
            idx = self.indices(obj, e.idx)
            d = self.tmp() if dst is None else dst
            self.emit(I.SCall(d, "getindex", [obj] + idx, line=e.line))
            return d
        if isinstance(e, A.Field):
            obj = self.expr(e.obj)
            d = self.tmp() if dst is None else dst
            self.emit(I.SGetField(d, obj, e.name))
            return d
        if isinstance(e, A.RangeE):
            a = self.expr(e.start)
            b = self.expr(e.stop)
            d = self.tmp() if dst is None else dst
            self.emit(I.SCall(d, "colon", [a, b], line=e.line))
            return d
        if isinstance(e, A.ColonE):
            return self.const(COLON_VAL, dst)
        if isinstance(e, A.EndE):
            if not self.end_ctx:
                raise _err("'end' outside of indexing", e, self.env)
            obj, k, n = self.end_ctx[-1]
            d = self.tmp() if dst is None else dst
            if n == 1:
                self.emit(I.SCall(d, "length", [obj], line=e.line))
            else:
                kk = self.const(k)
                self.emit(I.SCall(d, "size", [obj, kk], line=e.line))
            return d
        if isinstance(e, A.TupleE):
            items = [self.expr(x) for x in e.items]
            d = self.tmp() if dst is None else dst
            self.emit(I.SIntr(d, "tuple", items, line=e.line))
            return d
        if isinstance(e, A.VectE):
            items = [self.expr(x) for x in e.items]
            d = self.tmp() if dst is None else dst
            self.emit(I.SIntr(d, "vect", items, line=e.line))
            return d
        if isinstance(e, A.HCatE):
            nrows = self.const(len(e.rows))
            items = [self.expr(x) for row in e.rows for x in row]
            d = self.tmp() if dst is None else dst
            self.emit(I.SIntr(d, "hvcat", [nrows] + items, line=e.line))
            return d
        if isinstance(e, A.Assert):
            src = self.expr(e.expr)
            ty = resolve_type(e.type, self.reg, self.scope)
            d = self.tmp() if dst is None else dst
            self.emit(I.SAssert(d, src, ty))
            return d
        if isinstance(e, (A.AndE, A.OrE)):
            d = self.tmp() if dst is None else dst
            a = self.expr(e.a)
            rhs = self.new_block()
            short = self.new_block()
            join = self.new_block()
            if isinstance(e, A.AndE):
                self.ir.blocks[self.cur].term = I.Branch(a, rhs, short)
            else:
                self.ir.blocks[self.cur].term = I.Branch(a, short, rhs)
            self.cur = short
            self.const(isinstance(e, A.OrE), d)
            self.goto(join)
            self.cur = rhs
            self.expr(e.b, d)
            self.goto(join)
            return d
        if isinstance(e, A.Ternary):
            d = self.tmp() if dst is None else dst
            c = self.expr(e.cond)
            tb, fb, join = self.new_block(), self.new_block(), self.new_block()
            self.ir.blocks[self.cur].term = I.Branch(c, tb, fb)
            self.cur = tb
            self.expr(e.a, d)
            self.goto(join)
            self.cur = fb
            self.expr(e.b, d)
            self.goto(join)
            return d
        if isinstance(e, A.TypeE):
            ty = resolve_type(e.texpr, self.reg, self.scope)
            d = self.tmp() if dst is None else dst
            if is_closed(ty):
                self.emit(I.SConst(d, TypeVal(ty)))
            else:
                self.emit(I.SMakeType(d, ty))
            return d
        if isinstance(e, A.Return):
            v = self.expr(e.expr) if e.expr is not None else self.const(None)
            self.terminate(I.Ret(v))
            return self.const(None, dst)
        if isinstance(e, A.Splat):
            raise _err("splat is only allowed in call arguments", e, self.env)
        if isinstance(e, A.AnonArg):
            raise _err("anonymous argument outside a signature", e, self.env)
        raise _err(f"unsupported expression {type(e).__name__}", e, self.env)

    def name(self, e: A.Name, dst):
        n = e.id
        if n in self.locals:
            return self.locals[n]
        if n in self.scope:
            d = self.tmp() if dst is None else dst
            self.emit(I.SStaticParam(d, n))
            return d
        if n in self.reg.decls or n in self.reg.aliases or n == "Any":
            return self.const(TypeVal(resolve_type(A.TName(n), self.reg)), dst)
        if n in self.env.functions or n in INTRINSIC_NAMES:
            return self.const(FunctionVal(n), dst)
        raise _err(f"undefined variable {n}", e, self.env)

    def indices(self, obj: int, idx: list) -> list:
        out = []
        for k, x in enumerate(idx):
            self.end_ctx.append((obj, k + 1, len(idx)))
            out.append(self.expr(x))
            self.end_ctx.pop()
        return out

    def call(self, e: A.Call, dst):
        if e.tparams is not None:
            raise _err("type parameters are only allowed in method definitions", e, self.env)
        if e.fname == "include":
            raise _err("include is only allowed at top level", e, self.env)
        args = []
        splat = []
        for a in e.args:
            if isinstance(a, A.Splat):
                args.append(self.expr(a.expr))
                splat.append(True)
            else:
                args.append(self.expr(a))
                splat.append(False)
        d = self.tmp() if dst is None else dst
        if e.fname in INTRINSIC_NAMES and e.fname not in self.env.functions:
            if any(splat):
                raise _err(f"intrinsic {e.fname} cannot take splatted arguments", e, self.env)
            self.emit(I.SIntr(d, e.fname, args, line=e.line))
            return d
        if e.fname in self.locals:
            raise _err(f"calling the local variable {e.fname} is not supported", e, self.env)
        self.emit(I.SCall(d, e.fname, args, tuple(splat) if any(splat) else None, line=e.line))
        return d


# -- post passes -------------------------------------------------------------------

def finish(ir: I.IRFunction, env: Optional[LowerEnv] = None) -> None:
    """Drop unreachable blocks, then reject reads of possibly-unassigned locals."""
    prune_unreachable(ir)
    check_definite_assignment(ir, env)


def prune_unreachable(ir: I.IRFunction) -> None:
    for b in ir.blocks:
        if b.term is None:
            b.term = I.Ret(-1)  # only possible in unreachable blocks
    seen = ir.reachable()
    remap = {}
    new_blocks = []
    for i, b in enumerate(ir.blocks):
        if seen[i]:
            remap[i] = len(new_blocks)
            new_blocks.append(b)
    for b in new_blocks:
        t = b.term
        if isinstance(t, I.Goto):
            t.target = remap[t.target]
        elif isinstance(t, I.Branch):
            t.then = remap[t.then]
            t.other = remap[t.other]
        if b.handler is not None:
            b.handler = (remap[b.handler[0]], b.handler[1])
    ir.blocks = new_blocks


def check_definite_assignment(ir: I.IRFunction, env: Optional[LowerEnv]) -> None:
    n = len(ir.blocks)
    universe = frozenset(range(ir.nslots))
    ins = [universe] * n
    ins[0] = frozenset(range(ir.nargs))
    preds: dict = {i: [] for i in range(n)}
    for i in range(n):
        for s in ir.succs(i):
            preds[s].append(i)
    changed = True
    outs = [universe] * n
    while changed:
        changed = False
        for i, b in enumerate(ir.blocks):
            if i == 0:
                cur = frozenset(range(ir.nargs))
            else:
                srcs = []
                for p in preds[i]:
                    pb = ir.blocks[p]
                    if pb.handler is not None and pb.handler[0] == i:
                        st = set(ins[p])
                        if pb.handler[1] is not None:
                            st.add(pb.handler[1])
                        srcs.append(frozenset(st))
                    if i in pb.term.succ():
                        srcs.append(outs[p])
                cur = frozenset.intersection(*srcs) if srcs else universe
            if cur != ins[i]:
                ins[i] = cur
                changed = True
            st = set(cur)
            for s in b.stmts:
                if s.dst is not None:
                    st.add(s.dst)
            o = frozenset(st)
            if o != outs[i]:
                outs[i] = o
                changed = True
    for i, b in enumerate(ir.blocks):
        st = set(ins[i])
        for s in b.stmts:
            for r in s.reads():
                if r not in st:
                    _undef(ir, r, env, getattr(s, "line", 0))
            if s.dst is not None:
                st.add(s.dst)
        t = b.term
        reads = (t.cond,) if isinstance(t, I.Branch) else (t.src,) if isinstance(t, I.Ret) else ()
        for r in reads:
            if r not in st:
                _undef(ir, r, env, 0)


def _undef(ir, slot, env, line):
    name = ir.slot_names[slot] if 0 <= slot < ir.nslots else "?"
    where = f"{(env.path if env else None) or '<input>'}:{line}: " if line else ""
    raise LoweringError(f"{where}variable {name or '%' + str(slot)} may be used before it is assigned in {ir.name}")


def lower_method(fdef: A.FunctionDef, env: LowerEnv) -> LoweredMethod:
    if fdef.name in INTRINSIC_NAMES:
        raise _err(f"{fdef.name} is a reserved intrinsic name", fdef, env)
    sig, sparams, scope = method_signature(fdef, env.reg)
    lw = FnLowerer(env, fdef.name, fdef.params, fdef.body, scope, fdef.line)
    return LoweredMethod(fdef.name, sig, sparams, lw.lower(), fdef.line)


def lower_main(stmts: list, env: LowerEnv) -> I.IRFunction:
    lw = FnLowerer(env, "__main__", [], stmts, {}, 0)
    return lw.lower()


def constructor_method(td_name: str, reg: TypeRegistry) -> Optional[LoweredMethod]:
    """Default constructor: one argument per field, converted to the field type."""
    d = reg.decl(td_name)
    if d.fields is None:
        return None
    pvars = {v.id: v for v in d.params}
    ptypes = []
    for _fname, ft in d.fields:
        ptypes.append(ft if free_vars(ft) & set(pvars) else TOP)
    tup = TupleType(ptypes)
    used = free_vars(tup)
    sig = tup
    sparams = []
    for v in reversed(d.params):
        if v.id in used:
            sig = Exists(v, sig)
            sparams.insert(0, v.id)
    sig = reg.canon(sig)
    names = [f for f, _ in d.fields]
    ir = I.IRFunction(td_name, len(names), list(names), [I.Block()], {}, sparams, 0)
    args = []
    for k, (_fname, ft) in enumerate(d.fields):
        if ptypes[k] is TOP and ft is not TOP:
            t = ir.new_slot("")
            ir.blocks[0].stmts.append(I.SConvert(t, ft, k))
            args.append(t)
        else:
            args.append(k)
    out = ir.new_slot("")
    ir.blocks[0].stmts.append(I.SNew(out, Nominal(td_name, list(d.params)), args))
    ir.blocks[0].term = I.Ret(out)
    return LoweredMethod(td_name, sig, sparams, ir, 0)
