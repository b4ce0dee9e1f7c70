"""Execution of block IR.

Each IR function is translated once into Python source (slots become Python
locals, blocks become arms of a dispatch loop) and compiled with ``exec``.
The resulting callables are the unit of execution for every mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from . import ir as I
from .errors import BoundsError, DivideError, MdlError, StackOverflow, TypeAssertError, UndefVarError
from .intrinsics import INTRINSICS, DomainError
from .types import TOP, Const, is_closed, subst
from .values import FLOAT64, INT64, TypeVal, display, wrap64


@dataclass
class ExecStats:
    allocations: int = 0
    allocated_cells: int = 0
    dynamic_dispatches: int = 0
    direct_calls: int = 0
    wall_time: float = 0.0
    probes: dict = field(default_factory=dict)
    check_violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "allocations": self.allocations,
            "allocated_cells": self.allocated_cells,
            "dynamic_dispatches": self.dynamic_dispatches,
            "direct_calls": self.direct_calls,
            "wall_time": self.wall_time,
            "probes": dict(sorted(self.probes.items())),
            "check_violations": len(self.check_violations),
        }


CATCHABLE = (MdlError, ArithmeticError, TypeError, ValueError, IndexError, AttributeError, KeyError)


def as_mdl_error(e: BaseException) -> MdlError:
    """Map a Python exception escaping an intrinsic to the language's error classes."""
    if isinstance(e, MdlError):
        return e
    if isinstance(e, RecursionError):
        return StackOverflow("stack overflow")
    if isinstance(e, ZeroDivisionError):
        return DivideError(str(e))
    if isinstance(e, OverflowError):
        return DomainError(str(e))
    if isinstance(e, (IndexError, KeyError)):
        return BoundsError(str(e))
    return TypeAssertError(f"{type(e).__name__}: {e}")


def error_message(e: BaseException) -> str:
    e = as_mdl_error(e)
    msg = str(e)
    return f"{e.kind}: {msg}" if msg else e.kind


def _splat(x):
    if type(x) is not tuple:
        raise TypeAssertError(f"cannot splat {display(x)}; only tuples can be splatted")
    return x


def _tuple_get(t, k):
    if type(t) is not tuple:
        raise TypeAssertError(f"cannot destructure {display(t)}")
    if k > len(t):
        raise BoundsError(f"tuple of length {len(t)} has no element {k}")
    return t[k - 1]


def _cond_error(v):
    raise TypeAssertError(f"non-boolean ({display(v)}) used in boolean context")


_MAX = (1 << 63) - 1
_MIN = -(1 << 63)

# intrinsics with an exact inline expansion (must agree with their impl)
_INLINE = {
    "add_float": "{0} + {1}",
    "sub_float": "{0} - {1}",
    "mul_float": "{0} * {1}",
    "neg_float": "-{0}",
    "lt_float": "{0} < {1}",
    "le_float": "{0} <= {1}",
    "eq_float": "{0} == {1}",
    "lt_int": "{0} < {1}",
    "le_int": "{0} <= {1}",
    "eq_int": "{0} == {1}",
    "sitofp": "float({0})",
    "abs_float": "abs({0})",
    "tuple": "({args},)",
}
_INLINE_WRAP = {"add_int": "{0} + {1}", "sub_int": "{0} - {1}", "mul_int": "{0} * {1}"}


class CompiledCode:
    __slots__ = ("fn", "source", "name")

    def __init__(self, fn, source, name):
        self.fn = fn
        self.source = source
        self.name = name


class Codegen:
    """Translate one IR function (with static parameters bound) to Python."""

    def __init__(self, rt, irf: I.IRFunction, env: dict, vararg: bool, name: str,
                 check_types: Optional[list] = None):
        self.rt = rt
        self.ir = irf
        self.env = env
        self.vararg = vararg
        self.name = name
        self.check_types = check_types
        self.ns: dict = {
            "ST": rt.stats, "CTX": rt, "W": wrap64, "MAXI": _MAX, "MINI": _MIN, "SPL": _splat,
            "TG": _tuple_get, "CONDERR": _cond_error, "CATCH": CATCHABLE, "ERRMSG": error_message,
            "UNDEF": UndefVarError,
        }
        self.lines: list = []
        self.n = 0

    def bind(self, prefix: str, obj) -> str:
        self.n += 1
        nm = f"{prefix}{self.n}"
        self.ns[nm] = obj
        return nm

    def lit(self, v) -> str:
        if v is None or type(v) in (bool, int, str):
            return repr(v)
        if type(v) is float and math.isfinite(v):
            return repr(v)
        return self.bind("K", v)

    def compile(self) -> CompiledCode:
        irf = self.ir
        params = [f"s{k}" for k in range(irf.nargs)]
        if self.vararg and params:
            params[-1] = "*" + params[-1]
        out = [f"def {_pyname(self.name)}({', '.join(params)}):"]
        single = len(irf.blocks) == 1 and irf.blocks[0].handler is None
        if single:
            self.block(0, irf.blocks[0], "    ", out, single=True)
        else:
            out.append("    b = 0")
            out.append("    while True:")
            self.dispatch_tree(0, len(irf.blocks), "        ", out)
        src = "\n".join(out) + "\n"
        code = compile(src, f"<mdl {self.name}>", "exec")
        exec(code, self.ns)
        return CompiledCode(self.ns[_pyname(self.name)], src, self.name)

    def dispatch_tree(self, lo: int, hi: int, ind: str, out: list):
        # balanced comparisons keep block selection logarithmic in the block count
        blocks = self.ir.blocks
        if hi - lo == 1:
            self.block(lo, blocks[lo], ind, out, single=False)
            return
        if hi - lo <= 3:
            for k in range(lo, hi):
                head = "else:" if k == hi - 1 else f"{'if' if k == lo else 'elif'} b == {k}:"
                out.append(ind + head)
                self.block(k, blocks[k], ind + "    ", out, single=False)
            return
        mid = (lo + hi) // 2
        out.append(ind + f"if b < {mid}:")
        self.dispatch_tree(lo, mid, ind + "    ", out)
        out.append(ind + "else:")
        self.dispatch_tree(mid, hi, ind + "    ", out)

    def block(self, k: int, blk: I.Block, ind: str, out: list, single: bool):
        body: list = []
        for i, s in enumerate(blk.stmts):
            for line in self.stmt(s):
                body.append(line)
            if self.check_types is not None and s.dst is not None and not isinstance(s, I.SSetField):
                t = self.check_types[k][i]
                if t is not None and t != TOP:
                    chk = self.bind("CHK", self.rt.make_type_check(t, f"{self.name} block {k} stmt {i}"))
                    body.append(f"{chk}(s{s.dst})")
        if blk.handler is not None:
            out.append(ind + "try:")
            for line in body or ["pass"]:
                out.append(ind + "    " + line)
            out.append(ind + "except CATCH as _e:")
            if blk.handler[1] is not None:
                out.append(ind + f"    s{blk.handler[1]} = ERRMSG(_e)")
            out.append(ind + f"    b = {blk.handler[0]}")
            out.append(ind + "    continue")
        else:
            for line in body:
                out.append(ind + line)
        t = blk.term
        if isinstance(t, I.Ret):
            out.append(ind + f"return s{t.src}")
        elif isinstance(t, I.Goto):
            out.append(ind + f"b = {t.target}")
            out.append(ind + "continue")
        elif isinstance(t, I.Branch):
            c = f"s{t.cond}"
            out.append(ind + f"if {c} is True:")
            out.append(ind + f"    b = {t.then}")
            out.append(ind + f"elif {c} is False:")
            out.append(ind + f"    b = {t.other}")
            out.append(ind + "else:")
            out.append(ind + f"    CONDERR({c})")
            out.append(ind + "continue")

    def _tsub(self, t):
        t = subst(t, self.env) if self.env else t
        return self.rt.reg.canon(t) if is_closed(t) else None

    def stmt(self, s) -> list:
        d = f"s{s.dst}" if s.dst is not None else None
        if isinstance(s, I.SConst):
            return [f"{d} = {self.lit(s.value)}"]
        if isinstance(s, I.SMove):
            return [f"{d} = s{s.src}"]
        if isinstance(s, I.SIntr):
            args = [f"s{a}" for a in s.args]
            if s.name in _INLINE_WRAP and len(args) == 2:
                e = _INLINE_WRAP[s.name].format(*args)
                return [f"{d} = {e}", f"if not MINI <= {d} <= MAXI: {d} = W({d})"]
            if s.name in _INLINE:
                pat = _INLINE[s.name]
                return [f"{d} = " + pat.format(*args, args=", ".join(args))]
            intr = INTRINSICS[s.name]
            fn = self.bind("I", intr.impl)
            if intr.needs_ctx:
                args = ["CTX"] + args
            return [f"{d} = {fn}({', '.join(args)})"]
        if isinstance(s, I.SCall):
            site = self.bind("C", self.rt.call_site(s.fname))
            return [f"{d} = {site}({self._args(s.args, s.splat)})"]
        if isinstance(s, I.SDirect):
            tramp = self.rt.direct_target(s.target, self.ns)
            nm = self.bind("D", None)
            self.ns[nm] = tramp(nm)
            lines = ["ST.direct_calls += 1"]
            if self.rt.mode == "checking":
                chk = self.bind("CHKD", self.rt.make_direct_check(s.fname, s.target))
                lines.append(f"{chk}({', '.join(f's{a}' for a in s.args)})")
            lines.append(f"{d} = {nm}({', '.join(f's{a}' for a in s.args)})")
            return lines
        if isinstance(s, I.SNew):
            t = self._tsub(s.type)
            if t is None:
                return [f"raise UNDEF('static parameter of {display(s.type)} is not defined')"]
            fn = self.bind("NEW", self.rt.make_new(t))
            return [f"{d} = {fn}({', '.join(f's{a}' for a in s.args)})"]
        if isinstance(s, I.SGetField):
            fn = self.bind("GF", self.rt.make_getfield(s.name))
            return [f"{d} = {fn}(s{s.obj})"]
        if isinstance(s, I.SSetField):
            fn = self.bind("SF", self.rt.make_setfield(s.name))
            return [f"{fn}(s{s.obj}, s{s.val})"]
        if isinstance(s, I.SAssert):
            t = self._tsub(s.type)
            if t is None:
                return [f"raise UNDEF('static parameter in {display(s.type)} is not defined')"]
            fn = self.bind("AS", self.rt.make_assert(t))
            return [f"{d} = {fn}(s{s.src})"]
        if isinstance(s, I.SConvert):
            t = self._tsub(s.type)
            if t is None:
                return [f"raise UNDEF('static parameter in {display(s.type)} is not defined')"]
            src = f"s{s.src}"
            if t == FLOAT64:
                fn = self.bind("CV", self.rt.make_convert(t))
                return [f"{d} = {src} if type({src}) is float else {fn}({src})"]
            if t == INT64:
                fn = self.bind("CV", self.rt.make_convert(t))
                return [f"{d} = {src} if type({src}) is int else {fn}({src})"]
            fn = self.bind("CV", self.rt.make_convert(t))
            return [f"{d} = {fn}({src})"]
        if isinstance(s, I.SStaticParam):
            b = self.env.get(s.name)
            if b is None:
                return [f"raise UNDEF('static parameter {s.name} is not defined')"]
            v = b.value if isinstance(b, Const) else TypeVal(b)
            return [f"{d} = {self.lit(v)}"]
        if isinstance(s, I.SMakeType):
            t = self._tsub(s.term)
            if t is None:
                return [f"raise UNDEF('static parameter in {display(s.term)} is not defined')"]
            return [f"{d} = {self.lit(TypeVal(t))}"]
        if isinstance(s, I.STupleGet):
            return [f"{d} = TG(s{s.src}, {s.index})"]
        raise TypeError(f"cannot compile {s!r}")

    def _args(self, args, splat) -> str:
        if not splat:
            return ", ".join(f"s{a}" for a in args)
        return ", ".join(f"*SPL(s{a})" if sp else f"s{a}" for a, sp in zip(args, splat))


def _pyname(name: str) -> str:
    out = []
    for ch in name:
        out.append(ch if (ch.isascii() and ch.isalnum()) or ch == "_" else f"_{ord(ch)}_")
    return "f_" + "".join(out)
