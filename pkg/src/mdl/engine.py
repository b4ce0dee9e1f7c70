"""Program loading, specialization and execution in the three run modes."""

from __future__ import annotations

import os
import sys
import threading
import warnings
import time
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from . import astnodes as A
from .dispatch import Method, MethodTable
from .errors import MethodError, StaticError, TypeAssertError
from .infer import Inferencer, Limits
from .interp import CATCHABLE, Codegen, ExecStats, as_mdl_error
from .lower import (LowerEnv, constructor_method, lower_main, lower_method, resolve_type)
from .parser import parse
from .types import BOTTOM, TOP, TupleType, TypeTerm, Var, base_registry
from .values import StructVal, TypeVal, display, tkey, typeof


MAX_NESTED_OPT = 16


@dataclass
class OptOptions:
    devirt: bool = True
    inline: bool = True
    inline_max: int = 24
    inline_depth: int = 3


@dataclass(eq=False)
class Instance:
    """A method specialized at an argument tuple type."""
    method: Method
    argtypes: TypeTerm
    env: dict
    opt_ir: object = None
    report: object = None
    check_types: Optional[list] = None

    def __repr__(self):
        return f"{self.method.fname}{self.argtypes}"


class Engine:
    def __init__(self, limits: Optional[Limits] = None, opts: Optional[OptOptions] = None,
                 load_base: bool = True):
        self.reg = base_registry()
        self.table = MethodTable(self.reg)
        self.limits = limits or Limits()
        self.opts = opts or OptOptions()
        self.env = LowerEnv(self.reg)
        self.inferencer = Inferencer(self.reg, self.table, self.limits)
        self.mains: list = []
        self.instances: dict = {}
        self.loaded: set = set()
        self.user_functions: set = set()
        self._optimizing: list = []
        self._loading_base = False
        for d in list(self.reg.decls.values()):
            if d.fields is not None:
                self.env.functions.add(d.name)
                self.table.add(_as_method(constructor_method(d.name, self.reg), "constructor"), warn=False)
        if load_base:
            self._loading_base = True
            src = resources.files("mdl").joinpath("base.mdl").read_text()
            self.load_source(src, "base.mdl")
            self._loading_base = False

    # ---- loading
    def load_file(self, path: str) -> None:
        ap = os.path.abspath(path)
        if ap in self.loaded:
            return
        try:
            with open(ap) as fh:
                src = fh.read()
        except OSError as e:
            raise StaticError(f"cannot read {path}: {e.strerror}") from None
        self.loaded.add(ap)
        self.load_source(src, ap)

    def load_source(self, src: str, path: str = "<input>") -> None:
        prog = parse(src, path)
        items = self._expand_includes(prog.items, path)
        self.env.path = path
        reg = self.reg
        funcs = []
        top = []
        for it in items:
            if isinstance(it, A.TypeDef):
                self._declare_type(it)
            elif isinstance(it, A.AliasDef):
                scope = {n: Var(n) for n in it.params}
                body = resolve_type(it.body, reg, scope, canon=False)
                reg.alias(it.name, [scope[n] for n in it.params], body)
            elif isinstance(it, A.FunctionDef):
                funcs.append(it)
            else:
                top.append(it)
        for f in funcs:
            self.env.functions.add(f.name)
        kind = "base" if self._loading_base else "user"
        for it in items:
            if isinstance(it, A.TypeDef) and it.fields is not None:
                self.table.add(_as_method(constructor_method(it.name, reg), "constructor"), warn=False)
        for f in funcs:
            lm = lower_method(f, self.env)
            m = _as_method(lm, kind)
            m.path = getattr(f, "path", None) or path
            self.table.add(m, warn=True)
            if kind == "user":
                self.user_functions.add(f.name)
        if kind == "user":
            self._warn_ambiguities({f.name for f in funcs})
        if top:
            irf = lower_main(top, self.env)
            self.mains.append(Method("__main__", TupleType([]), [], irf, 0, -len(self.mains) - 1, kind))
        self.inferencer.cache.clear()
        self.instances.clear()

    def _warn_ambiguities(self, names) -> None:
        for name in sorted(names):
            gf = self.table.get(name)
            for a, b in gf.ambiguities(self.reg):
                warnings.warn(f"methods {a.describe(self.reg)} and {b.describe(self.reg)} are ambiguous",
                              stacklevel=3)

    def _expand_includes(self, items, path):
        out = []
        for it in items:
            if (isinstance(it, A.ExprS) and isinstance(it.expr, A.Call) and it.expr.fname == "include"):
                args = it.expr.args
                if len(args) != 1 or not isinstance(args[0], A.Lit) or not isinstance(args[0].value, str):
                    raise StaticError("include expects a single string literal")
                base = os.path.dirname(path) if path and not path.startswith("<") else "."
                inc = os.path.abspath(os.path.join(base, args[0].value))
                if inc in self.loaded:
                    continue
                self.loaded.add(inc)
                try:
                    with open(inc) as fh:
                        src = fh.read()
                except OSError as e:
                    raise StaticError(f"cannot include {args[0].value}: {e.strerror}") from None
                sub = self._expand_includes(parse(src, inc).items, inc)
                for x in sub:
                    if isinstance(x, A.FunctionDef) and not hasattr(x, "path"):
                        object.__setattr__(x, "path", inc)
                out.extend(sub)
            else:
                out.append(it)
        return out

    def _declare_type(self, td: A.TypeDef) -> None:
        reg = self.reg
        scope: dict = {}
        params = []
        for b in td.params:
            up = resolve_type(b.upper, reg, scope, canon=False) if b.upper is not None else TOP
            lo = resolve_type(b.lower, reg, scope, canon=False) if b.lower is not None else BOTTOM
            v = Var(b.name, lo, up)
            scope[b.name] = v
            params.append(v)
        sup = resolve_type(td.supertype, reg, scope, canon=False) if td.supertype is not None else TOP
        fields = None
        kind = "abstract"
        if td.fields is not None:
            kind = "tag"
            fields = []
            names = set()
            for fname, ftype in td.fields:
                if fname in names:
                    raise StaticError(f"duplicate field {fname} in type {td.name}")
                names.add(fname)
                ft = resolve_type(ftype, reg, scope, canon=False) if ftype is not None else TOP
                fields.append((fname, ft))
            self.env.functions.add(td.name)
        # declare first so self-referential fields resolve, then fill fields
        d = reg.declare(td.name, params, sup, kind, fields=() if fields is not None else None)
        if fields is not None:
            d.fields = tuple(fields)

    # ---- introspection helpers
    def parse_type(self, s: str) -> TypeTerm:
        from .lower import parse_type_string

        return parse_type_string(s, self.reg)

    def parse_argtypes(self, s: str) -> list:
        s = s.strip()
        if not s:
            return []
        t = self.parse_type(s if s.startswith("(") else f"({s},)")
        if not isinstance(t, TupleType) or t.vararg is not None:
            raise StaticError(f"argument types must be a tuple: {s}")
        return list(t.fixed)

    def has_function(self, name: str) -> bool:
        return self.table.get(name) is not None

    def default_entry(self) -> Optional[str]:
        return "main" if "main" in self.user_functions else None

    def infer_call(self, fname: str, argtypes: list):
        """(method, FrameResult) for a call; dispatch errors propagate."""
        argtuple = self.reg.canon(TupleType(argtypes))
        gf = self.table.get(fname)
        if gf is None:
            raise MethodError(f"no function named {fname}")
        if self.reg.is_leaf(argtuple):
            m, _ = gf.select(self.reg, argtuple)
        else:
            cands = gf.candidates(self.reg, argtuple)
            covering = [c for c in cands if self.reg.subtype(argtuple, c.sig)]
            if not cands:
                raise MethodError(f"no method of {fname} may match {self.reg.show(argtuple)}")
            m = covering[0] if covering else cands[0]
            argtuple = self.inferencer.narrow(argtuple, m.sig)
        return m, self.inferencer.result(m, argtuple)

    def return_type(self, fname: str, argtypes: list) -> TypeTerm:
        return self.inferencer.call_type(fname, argtypes)

    # ---- specialization
    def specialize(self, m: Method, argtuple: TypeTerm) -> Instance:
        key = (m.id, argtuple)
        inst = self.instances.get(key)
        if inst is None:
            env = {}
            if m.sparams and self.reg.is_leaf(argtuple):
                env = m.sparam_env(self.reg, argtuple) or {}
            inst = Instance(m, argtuple, env)
            self.instances[key] = inst
        return inst

    def optimized(self, inst: Instance):
        if inst.opt_ir is None:
            from .optimize import optimize_instance

            if inst in self._optimizing or len(self._optimizing) >= MAX_NESTED_OPT:
                return None
            self._optimizing.append(inst)
            try:
                inst.opt_ir, inst.report = optimize_instance(self, inst)
            finally:
                self._optimizing.remove(inst)
        return inst.opt_ir

    def report(self, fname: str, argtypes: list):
        argtuple = self.reg.canon(TupleType(argtypes))
        m, _ = self.table.dispatch(fname, argtypes) if self.reg.is_leaf(argtuple) else self.infer_call(fname, argtypes)
        if not self.reg.is_leaf(argtuple):
            argtuple = self.inferencer.narrow(argtuple, m.sig)
        inst = self.specialize(m, argtuple)
        self.optimized(inst)
        return inst.report

    def check_types_for(self, inst: Instance) -> list:
        if inst.check_types is None:
            irf = self.optimized(inst)
            inf = self.inferencer
            slots = inf.arg_slot_types(irf, inst.method, inst.argtypes)
            res = inf.run_frame(irf, slots, {}, self.reg.is_leaf(inst.argtypes), inst.argtypes)
            inst.check_types = [
                [t if res.block_in[b] is not None else None for t in row] for b, row in enumerate(res.stmt_types)
            ]
        return inst.check_types

    # ---- execution
    def runtime(self, mode: str = "dynamic", seed: int = 42, out=None) -> "Runtime":
        if mode not in ("dynamic", "optimized", "checking"):
            raise ValueError(f"unknown mode {mode}")
        return Runtime(self, mode, seed, out if out is not None else sys.stdout)

    def run(self, entry: Optional[str] = None, args: tuple = (), mode: str = "dynamic", seed: int = 42,
            out=None, run_main: bool = True):
        rt = self.runtime(mode, seed, out)
        return rt.run(entry, args, run_main=run_main), rt.stats


def _as_method(lm, kind: str) -> Method:
    return Method(lm.name, lm.sig, lm.sparams, lm.ir, lm.line, 0, kind)


def call_with_big_stack(fn):
    """Run ``fn`` on a thread with a large C stack so deep recursion is safe."""
    box: dict = {}

    def target():
        try:
            box["v"] = fn()
        except BaseException as e:  # noqa: BLE001 - re-raised on the caller thread
            box["e"] = e

    old_limit = sys.getrecursionlimit()
    old_size = threading.stack_size()
    try:
        threading.stack_size(512 * 1024 * 1024)
        sys.setrecursionlimit(max(old_limit, 40000))
        t = threading.Thread(target=target)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    if "e" in box:
        raise box["e"]
    return box.get("v")


class Runtime:
    """Execution context: compiled code caches, statistics, RNG and output."""

    def __init__(self, engine: Engine, mode: str, seed: int, out):
        self.engine = engine
        self.reg = engine.reg
        self.table = engine.table
        self.mode = mode
        self.stats = ExecStats()
        self.rng = np.random.default_rng(seed)
        self.out = out
        self._targets: dict = {}
        self._sites: dict = {}
        self._method_code: dict = {}
        self._inst_code: dict = {}
        self._eltype_memo: dict = {}

    # ---- entry points
    def run(self, entry: Optional[str], args: tuple = (), run_main: bool = True):
        def go():
            v = None
            if run_main:
                for m in self.engine.mains:
                    v = self._main_code(m)()
            name = entry if entry is not None else self.engine.default_entry()
            if name is not None:
                v = self.call_generic(name, tuple(args))
            return v

        t0 = time.perf_counter()
        try:
            return call_with_big_stack(go)
        except CATCHABLE as e:
            raise as_mdl_error(e) from None
        except RecursionError as e:
            raise as_mdl_error(e) from None
        finally:
            self.stats.wall_time += time.perf_counter() - t0

    def call_generic(self, fname: str, args: tuple):
        return self.call_site(fname)(*args)

    def _main_code(self, m: Method):
        if self.mode == "dynamic":
            return self.method_code(m, {})
        return self.instance_code(self.engine.specialize(m, TupleType([])))

    # ---- code caches
    def method_code(self, m: Method, env: dict):
        key = (m.id, tuple(sorted(env.items())))
        f = self._method_code.get(key)
        if f is None:
            va = _has_vararg(m)
            f = Codegen(self, m.ir, env, va, f"{m.fname}#{m.id}").compile().fn
            self._method_code[key] = f
        return f

    def instance_code(self, inst: Instance):
        f = self._inst_code.get(id(inst))
        if f is None:
            irf = self.engine.optimized(inst)
            if irf is None:  # still being optimized (recursion): run the generic body
                return self.method_code(inst.method, inst.env)
            checks = self.engine.check_types_for(inst) if self.mode == "checking" else None
            f = Codegen(self, irf, inst.env, _has_vararg(inst.method), f"{inst.method.fname}#{inst.method.id}s",
                        checks).compile().fn
            self._inst_code[id(inst)] = (f, inst)
            return f
        return f[0]

    def call_site(self, fname: str):
        site = self._sites.get(fname)
        if site is not None:
            return site
        targets = self._targets.setdefault(fname, {})
        stats = self.stats
        resolve = self._resolve

        def site(*args):
            key = tuple(map(tkey, args))
            f = targets.get(key)
            if f is None:
                f = resolve(fname, key, args)
            stats.dynamic_dispatches += 1
            return f(*args)

        self._sites[fname] = site
        return site

    def _resolve(self, fname, key, args):
        gf = self.table.get(fname)
        if gf is None:
            raise MethodError(f"no function named {fname}")
        argtuple = self.reg.canon(TupleType([typeof(a) for a in args]))
        m, env = gf.lookup(self.reg, key, lambda: argtuple)
        if self.mode == "dynamic":
            f = self.method_code(m, env)
        else:
            f = self.instance_code(self.engine.specialize(m, argtuple))
        self._targets[fname][key] = f
        return f

    def direct_target(self, inst: Instance, ns: dict):
        def make(nm):
            def tramp(*args):
                f = self.instance_code(inst)
                ns[nm] = f
                return f(*args)
            return tramp
        return make

    # ---- helpers used by generated code
    def make_type_check(self, t: TypeTerm, where: str):
        ok: set = set()
        reg = self.reg
        viol = self.stats.check_violations

        def chk(v):
            k = tkey(v)
            if k in ok:
                return
            if reg.subtype(typeof(v), t):
                ok.add(k)
            else:
                viol.append(f"{where}: value of type {reg.show(typeof(v))} not in inferred {reg.show(t)}")
        return chk

    def make_direct_check(self, fname: str, inst: Instance):
        ok: set = set()
        reg = self.reg
        viol = self.stats.check_violations

        def chk(*args):
            key = tuple(map(tkey, args))
            if key in ok:
                return
            argtuple = reg.canon(TupleType([typeof(a) for a in args]))
            try:
                m, _ = self.table.get(fname).lookup(reg, key, lambda: argtuple)
            except MethodError as e:
                viol.append(f"direct call {fname}: dynamic dispatch fails ({e})")
                return
            if m is not inst.method or not reg.subtype(argtuple, inst.argtypes):
                viol.append(f"direct call {fname}: static target {inst.method.describe(reg)} "
                            f"but dynamic dispatch picks {m.describe(reg)}")
            else:
                ok.add(key)
        return chk

    def make_new(self, t: TypeTerm):
        stats = self.stats
        nf = len(self.reg.field_types(t))

        def new(*args):
            if len(args) != nf:
                raise MethodError(f"{t} expects {nf} fields, got {len(args)}")
            stats.allocations += 1
            stats.allocated_cells += nf
            return StructVal(t, list(args))
        return new

    def _field_index(self, o, name: str) -> int:
        if type(o) is not StructVal:
            raise TypeAssertError(f"{display(o)} has no field {name}")
        names = [f for f, _ in (self.reg.decl(o.tag.name).fields or ())]
        if name not in names:
            raise TypeAssertError(f"type {o.tag} has no field {name}")
        return names.index(name)

    def make_getfield(self, name: str):
        cache: dict = {}
        index = self._field_index

        def gf(o):
            tag = getattr(o, "tag", None)
            i = cache.get(tag) if type(o) is StructVal else None
            if i is None:
                i = index(o, name)
                cache[tag] = i
            return o.fields[i]
        return gf

    def make_setfield(self, name: str):
        def sf(o, v):
            i = self._field_index(o, name)
            ft = self.reg.field_types(o.tag)[i][1]
            o.fields[i] = self.convert(ft, v)
            return v
        return sf

    def make_assert(self, t: TypeTerm):
        ok: set = set()
        reg = self.reg

        def check(v):
            k = tkey(v)
            if k in ok:
                return v
            if reg.subtype(typeof(v), t):
                ok.add(k)
                return v
            raise TypeAssertError(f"expected {reg.show(t)}, got a value of type {reg.show(typeof(v))}")
        return check

    def make_convert(self, t: TypeTerm):
        return lambda v: self.convert(t, v)

    # ---- ctx protocol used by intrinsics
    def convert(self, t: TypeTerm, v):
        reg = self.reg
        if reg.subtype(typeof(v), t):
            return v
        r = self.call_generic("convert", (TypeVal(t), v))
        if not reg.subtype(typeof(r), t):
            raise TypeAssertError(f"convert to {reg.show(t)} returned a {reg.show(typeof(r))}")
        return r

    def infer_type(self, fname: str, argtypes) -> TypeTerm:
        return self.engine.inferencer.call_type(fname, list(argtypes))

    def elementwise(self, fname: str, elts):
        site = self.call_site(fname)
        if self.mode == "dynamic" or not all(self.reg.is_leaf(e) for e in elts):
            return lambda args: site(*args)
        box: list = []

        def call(args):
            if not box:
                box.append(self._elementwise_target(fname, elts))
            return box[0](args)
        return call

    def _elementwise_target(self, fname, elts):
        from . import ir as I
        from .intrinsics import INTRINSICS

        argtuple = self.reg.canon(TupleType(list(elts)))
        gf = self.table.get(fname)
        if gf is None:
            raise MethodError(f"no function named {fname}")
        m, _ = gf.lookup(self.reg, argtuple, lambda: argtuple)
        inst = self.engine.specialize(m, argtuple)
        irf = self.engine.optimized(inst)
        if irf is not None and len(irf.blocks) == 1 and len(irf.blocks[0].stmts) == 1:
            s = irf.blocks[0].stmts[0]
            term = irf.blocks[0].term
            if (isinstance(s, I.SIntr) and isinstance(term, I.Ret) and term.src == s.dst
                    and list(s.args) == list(range(irf.nargs)) and not INTRINSICS[s.name].needs_ctx
                    and not _has_vararg(m)):
                impl = INTRINSICS[s.name].impl
                return lambda args: impl(*args)
        f = self.instance_code(inst)
        stats = self.stats

        def call(args):
            stats.direct_calls += 1
            return f(*args)
        return call

    def result_eltype(self, fname, elts, out, matmul_of=None) -> TypeTerm:
        reg = self.reg
        key = (fname, elts, matmul_of)
        r = self._eltype_memo.get(key)
        if r is None:
            if matmul_of is not None:
                p = self.infer_type("*", list(matmul_of))
                s = self.infer_type("+", [p, p]) if reg.is_leaf(p) else TOP
                r = p if reg.is_leaf(p) and p == s else False
            else:
                t = self.infer_type(fname, list(elts))
                r = t if reg.is_leaf(t) else False
            self._eltype_memo[key] = r
        if r is not False:
            return r
        if not out:
            return TOP
        return reg.union(*{typeof(x) for x in out})


def _has_vararg(m: Method) -> bool:
    pt = m.param_types()
    return isinstance(pt, TupleType) and pt.vararg is not None
