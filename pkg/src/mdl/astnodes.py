"""Surface syntax tree for ``.mdl`` sources plus a canonical source printer.

Node equality ignores source positions, so ``parse(print_program(p)) == p``
is a meaningful round-trip check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


def _pos():
    return field(default=0, compare=False, repr=False)


# -- type expressions ------------------------------------------------------

@dataclass
class TName:
    name: str
    params: Optional[list] = None  # None means the bare (unapplied) name
    line: int = _pos()


@dataclass
class TUnion:
    members: list
    line: int = _pos()


@dataclass
class TTuple:
    items: list
    vararg: Optional[object] = None
    line: int = _pos()


@dataclass
class TInt:
    value: int
    line: int = _pos()


@dataclass
class TSym:
    name: str
    line: int = _pos()


@dataclass
class TWhere:
    body: object
    binders: list  # list[Binder]
    line: int = _pos()


@dataclass
class Binder:
    name: str
    upper: Optional[object] = None
    lower: Optional[object] = None
    line: int = _pos()


TypeExpr = Union[TName, TUnion, TTuple, TInt, TSym, TWhere]


# -- expressions -----------------------------------------------------------

@dataclass
class Lit:
    value: object  # int | float | str | bool | None
    line: int = _pos()

    def __eq__(self, other):
        # 1 == 1.0 == True in Python; literals must also agree on type
        return isinstance(other, Lit) and type(self.value) is type(other.value) and self.value == other.value


@dataclass
class Name:
    id: str
    line: int = _pos()


@dataclass
class OpRef:
    op: str
    line: int = _pos()


@dataclass
class Call:
    fname: str
    args: list
    tparams: Optional[list] = None  # only meaningful in definitions
    line: int = _pos()
    paren: bool = field(default=False, compare=False, repr=False)


@dataclass
class Splat:
    expr: object
    line: int = _pos()


@dataclass
class AnonArg:
    type: object
    line: int = _pos()


@dataclass
class Index:
    obj: object
    idx: list
    line: int = _pos()


@dataclass
class Field:
    obj: object
    name: str
    line: int = _pos()


@dataclass
class RangeE:
    start: object
    stop: object
    line: int = _pos()


@dataclass
class ColonE:
    line: int = _pos()


@dataclass
class EndE:
    line: int = _pos()


@dataclass
class TupleE:
    items: list
    line: int = _pos()


@dataclass
class VectE:
    items: list
    line: int = _pos()


@dataclass
class HCatE:
    rows: list  # list of lists, row-major
    line: int = _pos()


@dataclass
class Assert:
    expr: object
    type: object
    line: int = _pos()


@dataclass
class AndE:
    a: object
    b: object
    line: int = _pos()


@dataclass
class OrE:
    a: object
    b: object
    line: int = _pos()


@dataclass
class Ternary:
    cond: object
    a: object
    b: object
    line: int = _pos()


@dataclass
class TypeE:
    texpr: object
    line: int = _pos()


# -- statements ------------------------------------------------------------

@dataclass
class ExprS:
    expr: object
    line: int = _pos()


@dataclass
class Declared:
    name: str
    type: object
    line: int = _pos()


@dataclass
class Assign:
    targets: list
    value: object
    op: Optional[str] = None  # "+" for "+=", etc.
    line: int = _pos()


@dataclass
class If:
    cond: object
    body: list
    elifs: list = field(default_factory=list)  # list[(cond, body)]
    orelse: Optional[list] = None
    line: int = _pos()


@dataclass
class While:
    cond: object
    body: list
    line: int = _pos()


@dataclass
class For:
    specs: list  # list[(var name, iterable expr)]
    body: list
    line: int = _pos()


@dataclass
class Return:
    expr: Optional[object] = None
    line: int = _pos()


@dataclass
class Break:
    line: int = _pos()


@dataclass
class Continue:
    line: int = _pos()


@dataclass
class Try:
    body: list
    catch_var: Optional[str] = None
    catch_body: Optional[list] = None
    line: int = _pos()


@dataclass
class Param:
    name: Optional[str]
    type: Optional[object] = None
    vararg: bool = False
    line: int = _pos()


@dataclass
class FunctionDef:
    name: str
    tparams: list  # list[Binder]
    params: list  # list[Param]
    body: list
    line: int = _pos()
    short: bool = field(default=False, compare=False, repr=False)


@dataclass
class TypeDef:
    name: str
    params: list  # list[Binder]
    supertype: Optional[object]
    fields: Optional[list]  # None for abstract; list[(name, type|None)]
    line: int = _pos()

    @property
    def abstract(self) -> bool:
        return self.fields is None


@dataclass
class AliasDef:
    name: str
    params: list  # list[str]
    body: object
    line: int = _pos()


@dataclass
class Program:
    items: list
    path: Optional[str] = field(default=None, compare=False, repr=False)


# -- printer ---------------------------------------------------------------

BINOPS = {"+", "-", "*", "/", "//", "%", "^", "==", "!=", "<", "<=", ">", ">=", "<:"}


def print_type(t) -> str:
    if isinstance(t, TName):
        if t.params is None:
            return t.name
        return t.name + "{" + ",".join(print_type(p) for p in t.params) + "}"
    if isinstance(t, TUnion):
        return "Union(" + ",".join(print_type(m) for m in t.members) + ")"
    if isinstance(t, TTuple):
        parts = [print_type(x) for x in t.items]
        if t.vararg is not None:
            parts.append(print_type(t.vararg) + "...")
        if len(parts) == 1:
            return "(" + parts[0] + ",)"
        return "(" + ",".join(parts) + ")"
    if isinstance(t, TInt):
        return str(t.value)
    if isinstance(t, TSym):
        return ":" + t.name
    if isinstance(t, TWhere):
        return "(" + print_type(t.body) + " where " + ",".join(_binder(b) for b in t.binders) + ")"
    raise TypeError(t)


def _binder(b: Binder) -> str:
    s = b.name
    if b.upper is not None:
        s += "<:" + print_type(b.upper)
    if b.lower is not None:
        s = print_type(b.lower) + "<:" + s
    return s


def _lit(v) -> str:
    if v is None:
        return "nothing"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'
    if isinstance(v, float):
        r = repr(v)
        return r if ("." in r or "e" in r or "n" in r) else r + ".0"
    return str(v)


def print_expr(e) -> str:
    if isinstance(e, Lit):
        return _lit(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, OpRef):
        return e.op
    if isinstance(e, Call):
        if e.tparams is None and e.fname in BINOPS and len(e.args) >= 2 and not any(isinstance(a, Splat) for a in e.args):
            if len(e.args) == 2 or e.fname == "*":
                return "(" + f" {e.fname} ".join(print_expr(a) for a in e.args) + ")"
        if e.tparams is None and e.fname in ("-", "+", "!") and len(e.args) == 1 and not isinstance(e.args[0], Splat):
            return "(" + e.fname + print_expr(e.args[0]) + ")"
        head = e.fname
        if e.tparams is not None:
            head += "{" + ",".join(_binder(b) for b in e.tparams) + "}"
        return head + "(" + ", ".join(print_expr(a) for a in e.args) + ")"
    if isinstance(e, Splat):
        return print_expr(e.expr) + "..."
    if isinstance(e, AnonArg):
        return "::" + print_type(e.type)
    if isinstance(e, Index):
        return print_expr(e.obj) + "[" + ", ".join(print_expr(i) for i in e.idx) + "]"
    if isinstance(e, Field):
        return print_expr(e.obj) + "." + e.name
    if isinstance(e, RangeE):
        return "(" + print_expr(e.start) + ":" + print_expr(e.stop) + ")"
    if isinstance(e, ColonE):
        return ":"
    if isinstance(e, EndE):
        return "end"
    if isinstance(e, TupleE):
        if len(e.items) == 1:
            return "(" + print_expr(e.items[0]) + ",)"
        return "(" + ", ".join(print_expr(i) for i in e.items) + ")"
    if isinstance(e, VectE):
        return "[" + ", ".join(print_expr(i) for i in e.items) + "]"
    if isinstance(e, HCatE):
        return "[" + "; ".join(" ".join(print_expr(x) for x in row) for row in e.rows) + "]"
    if isinstance(e, Assert):
        return "(" + print_expr(e.expr) + "::" + print_type(e.type) + ")"
    if isinstance(e, AndE):
        return "(" + print_expr(e.a) + " && " + print_expr(e.b) + ")"
    if isinstance(e, OrE):
        return "(" + print_expr(e.a) + " || " + print_expr(e.b) + ")"
    if isinstance(e, Ternary):
        return "(" + print_expr(e.cond) + " ? " + print_expr(e.a) + " : " + print_expr(e.b) + ")"
    if isinstance(e, TypeE):
        return print_type(e.texpr)
    if isinstance(e, Return):
        return "(return " + print_expr(e.expr) + ")" if e.expr is not None else "(return)"
    raise TypeError(e)


def _target(t) -> str:
    if isinstance(t, Declared):
        return t.name + "::" + print_type(t.type)
    return print_expr(t)


def print_block(stmts, indent: int) -> list:
    out = []
    for s in stmts:
        out.extend(print_stmt(s, indent))
    return out


def print_stmt(s, indent: int = 0) -> list:
    pad = "    " * indent
    if isinstance(s, ExprS):
        return [pad + print_expr(s.expr)]
    if isinstance(s, Assign):
        lhs = ", ".join(_target(t) for t in s.targets)
        op = (s.op or "") + "="
        return [f"{pad}{lhs} {op} {print_expr(s.value)}"]
    if isinstance(s, If):
        out = [pad + "if " + print_expr(s.cond)] + print_block(s.body, indent + 1)
        for c, b in s.elifs:
            out += [pad + "elseif " + print_expr(c)] + print_block(b, indent + 1)
        if s.orelse is not None:
            out += [pad + "else"] + print_block(s.orelse, indent + 1)
        return out + [pad + "end"]
    if isinstance(s, While):
        return [pad + "while " + print_expr(s.cond)] + print_block(s.body, indent + 1) + [pad + "end"]
    if isinstance(s, For):
        specs = ", ".join(f"{v} = {print_expr(it)}" for v, it in s.specs)
        return [pad + "for " + specs] + print_block(s.body, indent + 1) + [pad + "end"]
    if isinstance(s, Return):
        return [pad + "return" + (" " + print_expr(s.expr) if s.expr is not None else "")]
    if isinstance(s, Break):
        return [pad + "break"]
    if isinstance(s, Continue):
        return [pad + "continue"]
    if isinstance(s, Try):
        out = [pad + "try"] + print_block(s.body, indent + 1)
        if s.catch_body is not None:
            out += [pad + "catch" + (" " + s.catch_var if s.catch_var else "")] + print_block(s.catch_body, indent + 1)
        return out + [pad + "end"]
    if isinstance(s, FunctionDef):
        head = s.name
        if s.tparams:
            head += "{" + ",".join(_binder(b) for b in s.tparams) + "}"
        ps = []
        for p in s.params:
            x = p.name or ""
            if p.type is not None:
                x += "::" + print_type(p.type)
            if p.vararg:
                x += "..."
            ps.append(x)
        return ([f"{pad}function {head}(" + ", ".join(ps) + ")"]
                + print_block(s.body, indent + 1) + [pad + "end"])
    if isinstance(s, TypeDef):
        head = s.name
        if s.params:
            head += "{" + ",".join(_binder(b) for b in s.params) + "}"
        if s.supertype is not None:
            head += " <: " + print_type(s.supertype)
        if s.fields is None:
            return [pad + "abstract " + head]
        out = [pad + "type " + head]
        for fname, ftype in s.fields:
            out.append(pad + "    " + fname + ("::" + print_type(ftype) if ftype is not None else ""))
        return out + [pad + "end"]
    if isinstance(s, AliasDef):
        head = s.name + ("{" + ",".join(s.params) + "}" if s.params else "")
        return [pad + "typealias " + head + " " + print_type(s.body)]
    raise TypeError(s)


def print_program(p: Program) -> str:
    return "\n".join(print_block(p.items, 0)) + "\n"
