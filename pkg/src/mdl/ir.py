"""Block IR: numbered slots, basic blocks, merge of slot states at block entry.

Statements write at most one slot (``dst``) and read slots listed by
:func:`reads`.  Terminators end every block.  A block may carry a handler
``(catch_block, exc_slot)``; any runtime error raised inside it transfers
control to ``catch_block``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .types import TypeTerm


class Stmt:
    __slots__ = ()

    def reads(self) -> tuple:
        return ()


@dataclass(eq=False)
class SConst(Stmt):
    dst: int
    value: object


@dataclass(eq=False)
class SMove(Stmt):
    dst: int
    src: int

    def reads(self):
        return (self.src,)


@dataclass(eq=False)
class SCall(Stmt):
    """Dynamically dispatched call of a generic function."""
    dst: int
    fname: str
    args: list
    splat: Optional[tuple] = None  # per-arg flags; None when no splat
    line: int = 0

    def reads(self):
        return tuple(self.args)


@dataclass(eq=False)
class SDirect(Stmt):
    """Statically resolved call to a specialized method instance."""
    dst: int
    fname: str
    target: object  # engine Instance
    args: list
    line: int = 0

    def reads(self):
        return tuple(self.args)


@dataclass(eq=False)
class SIntr(Stmt):
    dst: int
    name: str
    args: list
    line: int = 0

    def reads(self):
        return tuple(self.args)


@dataclass(eq=False)
class SNew(Stmt):
    dst: int
    type: TypeTerm  # may mention static parameters
    args: list

    def reads(self):
        return tuple(self.args)


@dataclass(eq=False)
class SGetField(Stmt):
    dst: int
    obj: int
    name: str

    def reads(self):
        return (self.obj,)


@dataclass(eq=False)
class SSetField(Stmt):
    obj: int
    name: str
    val: int
    dst: Optional[int] = None

    def reads(self):
        return (self.obj, self.val)


@dataclass(eq=False)
class SAssert(Stmt):
    dst: int
    src: int
    type: TypeTerm

    def reads(self):
        return (self.src,)


@dataclass(eq=False)
class SConvert(Stmt):
    dst: int
    type: TypeTerm
    src: int

    def reads(self):
        return (self.src,)


@dataclass(eq=False)
class SStaticParam(Stmt):
    dst: int
    name: str


@dataclass(eq=False)
class SMakeType(Stmt):
    """Type value whose term mentions static parameters."""
    dst: int
    term: TypeTerm


@dataclass(eq=False)
class STupleGet(Stmt):
    dst: int
    src: int
    index: int  # 1-based

    def reads(self):
        return (self.src,)


# -- terminators -------------------------------------------------------------

@dataclass(eq=False)
class Goto:
    target: int

    def succ(self):
        return (self.target,)


@dataclass(eq=False)
class Branch:
    cond: int
    then: int
    other: int

    def succ(self):
        return (self.then, self.other)


@dataclass(eq=False)
class Ret:
    src: int

    def succ(self):
        return ()


@dataclass(eq=False)
class Block:
    stmts: list = field(default_factory=list)
    term: object = None
    handler: Optional[tuple] = None  # (catch block, exception slot or None)


@dataclass(eq=False)
class IRFunction:
    name: str
    nargs: int
    slot_names: list
    blocks: list
    slot_types: dict = field(default_factory=dict)  # declared slot -> TypeTerm
    sparams: list = field(default_factory=list)  # static parameter names
    line: int = 0

    @property
    def nslots(self) -> int:
        return len(self.slot_names)

    def new_slot(self, name: str = "") -> int:
        self.slot_names.append(name)
        return len(self.slot_names) - 1

    def stmt_count(self) -> int:
        return sum(len(b.stmts) for b in self.blocks)

    def succs(self, i: int) -> tuple:
        b = self.blocks[i]
        out = tuple(b.term.succ())
        if b.handler is not None:
            out += (b.handler[0],)
        return out

    def reachable(self) -> list:
        seen = [False] * len(self.blocks)
        stack = [0]
        while stack:
            i = stack.pop()
            if seen[i]:
                continue
            seen[i] = True
            stack.extend(self.succs(i))
        return seen


def copy_ir(ir: IRFunction) -> IRFunction:
    import copy

    blocks = []
    for b in ir.blocks:
        blocks.append(Block([copy.copy(s) for s in b.stmts], copy.copy(b.term), b.handler))
    for b in blocks:
        for s in b.stmts:
            for attr in ("args",):
                if hasattr(s, attr):
                    setattr(s, attr, list(getattr(s, attr)))
    return IRFunction(ir.name, ir.nargs, list(ir.slot_names), blocks, dict(ir.slot_types), list(ir.sparams), ir.line)


def format_stmt(s, show=str) -> str:
    def sl(i):
        return f"%{i}"

    if isinstance(s, SConst):
        return f"{sl(s.dst)} = const {s.value!r}"
    if isinstance(s, SMove):
        return f"{sl(s.dst)} = {sl(s.src)}"
    if isinstance(s, SCall):
        args = ", ".join(sl(a) + ("..." if s.splat and s.splat[k] else "") for k, a in enumerate(s.args))
        return f"{sl(s.dst)} = call {s.fname}({args})"
    if isinstance(s, SDirect):
        return f"{sl(s.dst)} = invoke {s.target}({', '.join(map(sl, s.args))})"
    if isinstance(s, SIntr):
        return f"{sl(s.dst)} = intrinsic {s.name}({', '.join(map(sl, s.args))})"
    if isinstance(s, SNew):
        return f"{sl(s.dst)} = new {show(s.type)}({', '.join(map(sl, s.args))})"
    if isinstance(s, SGetField):
        return f"{sl(s.dst)} = {sl(s.obj)}.{s.name}"
    if isinstance(s, SSetField):
        return f"{sl(s.obj)}.{s.name} = {sl(s.val)}"
    if isinstance(s, SAssert):
        return f"{sl(s.dst)} = {sl(s.src)}::{show(s.type)}"
    if isinstance(s, SConvert):
        return f"{sl(s.dst)} = convert({show(s.type)}, {sl(s.src)})"
    if isinstance(s, SStaticParam):
        return f"{sl(s.dst)} = static {s.name}"
    if isinstance(s, SMakeType):
        return f"{sl(s.dst)} = type {show(s.term)}"
    if isinstance(s, STupleGet):
        return f"{sl(s.dst)} = {sl(s.src)}[{s.index}]"
    return repr(s)


def format_term(t) -> str:
    if isinstance(t, Goto):
        return f"goto #{t.target}"
    if isinstance(t, Branch):
        return f"if %{t.cond} goto #{t.then} else #{t.other}"
    if isinstance(t, Ret):
        return f"return %{t.src}"
    return repr(t)


def format_ir(ir: IRFunction, show=str) -> str:
    lines = [f"function {ir.name} ({ir.nargs} args, {ir.nslots} slots)"]
    for i, b in enumerate(ir.blocks):
        h = f" handler #{b.handler[0]}" if b.handler else ""
        lines.append(f"  #{i}:{h}")
        for s in b.stmts:
            lines.append("    " + format_stmt(s, show))
        lines.append("    " + format_term(b.term))
    return "\n".join(lines)
