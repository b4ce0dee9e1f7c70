"""Lexer and recursive-descent parser for ``.mdl`` sources.

Precedence, loosest first: ``?:``, ``||``, ``&&``, comparisons, ``:``,
``+ -``, ``* / // %``, unary ``- + !``, ``^``, ``::``, then postfix call,
index and field access.  An unparenthesised chain ``a*b*c`` becomes a single
n-ary call to ``*``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from . import astnodes as A
from .errors import MdlSyntaxError

KEYWORDS = {
    "function", "end", "type", "immutable", "abstract", "typealias", "if", "elseif",
    "else", "while", "for", "in", "return", "try", "catch", "true", "false",
    "break", "continue", "nothing", "where",
}

# longest first
OPERATORS = [
    "...", "::", "<:", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "^=",
    "//", "+", "-", "*", "/", "^", "%", "<", ">", "=", "!", "(", ")", "[", "]", "{",
    "}", ",", ";", ":", ".", "?", "≠", "≤", "≥", "∈",
]
UNICODE_OPS = {"≠": "!=", "≤": "<=", "≥": ">=", "∈": "in"}

_NUM = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")


@dataclass
class Tok:
    kind: str  # NUM STR ID KW OP NL EOF
    value: object
    line: int
    col: int
    space_before: bool = False
    space_after: bool = False


def _id_start(c: str) -> bool:
    return c == "_" or c.isalpha()


def _id_char(c: str) -> bool:
    return c == "_" or c.isalnum()


def tokenize(src: str, path: Optional[str] = None) -> list:
    toks: list = []
    i, line, col = 0, 1, 1
    depth: list = []  # stack of open brackets
    n = len(src)

    def err(msg):
        raise MdlSyntaxError(msg, line, col, path)

    while i < n:
        c = src[i]
        space = i > 0 and src[i - 1] in " \t"
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c == "\n":
            if not depth:
                toks.append(Tok("NL", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        start_col = col
        if c.isdigit():
            m = _NUM.match(src, i)
            text = m.group(0)
            val = float(text) if (m.group(1) or m.group(2)) else int(text)
            toks.append(Tok("NUM", val, line, start_col, space))
            i += len(text)
            col += len(text)
            continue
        if _id_start(c):
            j = i + 1
            while j < n and (_id_char(src[j]) or (src[j] == "!" and not src.startswith("!=", j))):
                j += 1
            text = src[i:j]
            kind = "KW" if text in KEYWORDS else "ID"
            toks.append(Tok(kind, text, line, start_col, space))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n or src[j] == "\n":
                    err("unterminated string literal")
                ch = src[j]
                if ch == '"':
                    break
                if ch == "\\":
                    j += 1
                    esc = src[j] if j < n else ""
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                else:
                    buf.append(ch)
                j += 1
            toks.append(Tok("STR", "".join(buf), line, start_col, space))
            col += j + 1 - i
            i = j + 1
            continue
        for op in OPERATORS:
            if src.startswith(op, i):
                break
        else:
            err(f"unexpected character {c!r}")
        value = UNICODE_OPS.get(op, op)
        if op in "([{":
            depth.append(op)
        elif op in ")]}":
            if depth:
                depth.pop()
        t = Tok("OP", value, line, start_col, space)
        toks.append(t)
        i += len(op)
        col += len(op)
    toks.append(Tok("EOF", None, line, col))
    for a, b in zip(toks, toks[1:]):
        a.space_after = b.space_before or b.kind in ("NL", "EOF")
    return toks


COMPARISONS = {"==", "!=", "<", "<=", ">", ">=", "<:"}
ADDITIVE = {"+", "-"}
MULTIPLICATIVE = {"*", "/", "//", "%"}
COMPOUND = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "^=": "^"}
_EXPR_END = {")", "]", "}", ",", ";", "=", "?"}


class Parser:
    def __init__(self, src: str, path: Optional[str] = None):
        self.toks = tokenize(src, path)
        self.i = 0
        self.path = path
        self.index_depth = 0
        self.space_sensitive = False
        self.no_range = False

    # ---- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def err(self, msg: str, tok: Optional[Tok] = None):
        t = tok or self.tok
        raise MdlSyntaxError(msg, t.line, t.col, self.path)

    def at(self, kind: str, value=None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_op(self, value) -> bool:
        return self.at("OP", value)

    def at_kw(self, value) -> bool:
        return self.at("KW", value)

    def advance(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect_op(self, value) -> Tok:
        if not self.at_op(value):
            self.err(f"expected '{value}', found {self._desc()}")
        return self.advance()

    def expect_kw(self, value) -> Tok:
        if not self.at_kw(value):
            self.err(f"expected '{value}', found {self._desc()}")
        return self.advance()

    def expect_id(self) -> str:
        if not self.at("ID"):
            self.err(f"expected identifier, found {self._desc()}")
        return self.advance().value

    def _desc(self) -> str:
        t = self.tok
        if t.kind == "EOF":
            return "end of input"
        if t.kind == "NL":
            return "newline"
        return repr(t.value)

    def skip_nl(self):
        while self.tok.kind == "NL" or self.at_op(";"):
            self.advance()

    def skip_newlines_only(self):
        while self.tok.kind == "NL":
            self.advance()

    # ---- program structure
    def parse_program(self) -> A.Program:
        items = []
        self.skip_nl()
        while not self.at("EOF"):
            items.append(self.parse_stmt())
            self.end_stmt()
            self.skip_nl()
        return A.Program(items, self.path)

    def end_stmt(self):
        if self.tok.kind in ("NL", "EOF") or self.at_op(";"):
            return
        if self.at_kw("end") or self.at_kw("else") or self.at_kw("elseif") or self.at_kw("catch"):
            return
        self.err(f"unexpected {self._desc()} after statement")

    def parse_block(self, terminators=("end",)) -> list:
        stmts = []
        self.skip_nl()
        while not any(self.at_kw(t) for t in terminators):
            if self.at("EOF"):
                self.err("unexpected end of input; missing 'end'")
            stmts.append(self.parse_stmt())
            self.end_stmt()
            self.skip_nl()
        return stmts

    def parse_stmt(self):
        t = self.tok
        line = t.line
        if t.kind == "KW":
            kw = t.value
            if kw == "function":
                return self.parse_function()
            if kw in ("type", "immutable"):
                return self.parse_typedef()
            if kw == "abstract":
                return self.parse_abstract()
            if kw == "typealias":
                return self.parse_alias()
            if kw == "if":
                return self.parse_if()
            if kw == "while":
                self.advance()
                cond = self.parse_expr()
                body = self.parse_block()
                self.expect_kw("end")
                return A.While(cond, body, line=line)
            if kw == "for":
                return self.parse_for()
            if kw == "return":
                self.advance()
                return A.Return(self.parse_return_value(), line=line)
            if kw == "break":
                self.advance()
                return A.Break(line=line)
            if kw == "continue":
                self.advance()
                return A.Continue(line=line)
            if kw == "try":
                return self.parse_try()
        return self.parse_simple_stmt()

    def parse_return_value(self):
        if self.tok.kind in ("NL", "EOF") or self.at_op(";") or self.at_kw("end") or self.at_op(")"):
            return None
        e = self.parse_expr()
        if self.at_op(","):
            items = [e]
            while self.at_op(","):
                self.advance()
                items.append(self.parse_expr())
            return A.TupleE(items, line=e.line if hasattr(e, "line") else 0)
        return e

    def parse_simple_stmt(self):
        line = self.tok.line
        first = self.parse_expr()
        targets = [first]
        while self.at_op(","):
            self.advance()
            targets.append(self.parse_expr())
        if self.at_op("="):
            self.advance()
            self.skip_newlines_only()
            if len(targets) == 1 and isinstance(first, A.Call):
                body = self.parse_expr()
                return self._make_function(first, [A.ExprS(body, line=line)], line, short=True)
            value = self.parse_expr()
            if self.at_op(","):
                items = [value]
                while self.at_op(","):
                    self.advance()
                    items.append(self.parse_expr())
                value = A.TupleE(items, line=line)
            return A.Assign([self._target(x) for x in targets], value, None, line=line)
        if self.tok.kind == "OP" and self.tok.value in COMPOUND:
            if len(targets) != 1:
                self.err("compound assignment needs a single target")
            op = COMPOUND[self.advance().value]
            self.skip_newlines_only()
            value = self.parse_expr()
            tgt = self._target(first)
            if isinstance(tgt, A.Declared):
                self.err("compound assignment to a declaration")
            return A.Assign([tgt], value, op, line=line)
        if len(targets) != 1:
            self.err("expected '=' after tuple of targets")
        return A.ExprS(first, line=line)

    def _target(self, e):
        if isinstance(e, A.Name):
            return e
        if isinstance(e, (A.Index, A.Field)):
            return e
        if isinstance(e, A.Assert) and isinstance(e.expr, A.Name):
            return A.Declared(e.expr.id, e.type, line=e.line)
        self.err("invalid assignment target")

    # ---- definitions
    def parse_function(self):
        line = self.advance().line
        name_tok = self.tok
        if name_tok.kind == "ID":
            sig = self.parse_postfix(self.parse_name_or_curly())
        elif name_tok.kind == "OP" and name_tok.value in A.BINOPS | {"!"}:
            self.advance()
            tps = None
            if self.at_op("{"):
                self.advance()
                tps = self.parse_binders()
            sig = self.parse_call_tail(name_tok.value, tps, name_tok.line)
        else:
            self.err("expected function name")
        if not isinstance(sig, A.Call):
            self.err("expected function signature")
        body = self.parse_block()
        self.expect_kw("end")
        return self._make_function(sig, body, line)

    def _make_function(self, sig: A.Call, body, line, short=False):
        params = []
        for a in sig.args:
            params.append(self._param(a))
        for p in params[:-1]:
            if p.vararg:
                self.err("only the last parameter may be variadic")
        tps = sig.tparams or []
        return A.FunctionDef(sig.fname, tps, params, body, line=line, short=short)

    def _param(self, a):
        if isinstance(a, A.Splat):
            p = self._param(a.expr)
            if p.vararg:
                self.err("nested splat in parameter list")
            return A.Param(p.name, p.type, True, line=p.line)
        if isinstance(a, A.Name):
            return A.Param(a.id, None, line=a.line)
        if isinstance(a, A.Assert) and isinstance(a.expr, A.Name):
            return A.Param(a.expr.id, a.type, line=a.line)
        if isinstance(a, A.AnonArg):
            return A.Param(None, a.type, line=a.line)
        self.err("invalid parameter in function signature")

    def parse_type_head(self):
        name = self.expect_id()
        params = []
        if self.at_op("{") and not self.tok.space_before:
            self.advance()
            params = self.parse_binders()
        return name, params

    def parse_binders(self) -> list:
        out = []
        while True:
            line = self.tok.line
            nm = self.expect_id()
            upper = None
            if self.at_op("<:"):
                self.advance()
                upper = self.parse_type()
            out.append(A.Binder(nm, upper, line=line))
            if self.at_op(","):
                self.advance()
                continue
            self.expect_op("}")
            return out

    def parse_typedef(self):
        line = self.advance().line
        name, params = self.parse_type_head()
        sup = None
        if self.at_op("<:"):
            self.advance()
            sup = self.parse_type()
        fields = []
        self.skip_nl()
        while not self.at_kw("end"):
            fname = self.expect_id()
            ftype = None
            if self.at_op("::"):
                self.advance()
                ftype = self.parse_type()
            fields.append((fname, ftype))
            if not (self.tok.kind == "NL" or self.at_op(";") or self.at_kw("end")):
                self.err("expected newline after field")
            self.skip_nl()
        self.expect_kw("end")
        return A.TypeDef(name, params, sup, fields, line=line)

    def parse_abstract(self):
        line = self.advance().line
        name, params = self.parse_type_head()
        sup = None
        if self.at_op("<:"):
            self.advance()
            sup = self.parse_type()
        return A.TypeDef(name, params, sup, None, line=line)

    def parse_alias(self):
        line = self.advance().line
        name = self.expect_id()
        params = []
        if self.at_op("{") and not self.tok.space_before:
            self.advance()
            while True:
                params.append(self.expect_id())
                if self.at_op(","):
                    self.advance()
                    continue
                self.expect_op("}")
                break
        body = self.parse_type()
        return A.AliasDef(name, params, body, line=line)

    # ---- control flow
    def parse_if(self):
        line = self.advance().line
        cond = self.parse_expr()
        body = self.parse_block(("end", "else", "elseif"))
        elifs = []
        orelse = None
        while self.at_kw("elseif"):
            self.advance()
            c = self.parse_expr()
            b = self.parse_block(("end", "else", "elseif"))
            elifs.append((c, b))
        if self.at_kw("else"):
            self.advance()
            orelse = self.parse_block()
        self.expect_kw("end")
        return A.If(cond, body, elifs, orelse, line=line)

    def parse_for(self):
        line = self.advance().line
        specs = []
        while True:
            var = self.expect_id()
            if self.at_op("=") or self.at_op("in"):
                self.advance()
            elif self.at_kw("in"):
                self.advance()
            else:
                self.err("expected '=' or 'in' in for loop")
            specs.append((var, self.parse_expr()))
            if self.at_op(","):
                self.advance()
                continue
            break
        body = self.parse_block()
        self.expect_kw("end")
        return A.For(specs, body, line=line)

    def parse_try(self):
        line = self.advance().line
        body = self.parse_block(("end", "catch"))
        var = None
        cbody = None
        if self.at_kw("catch"):
            self.advance()
            if self.at("ID") and not self.tok.kind == "NL":
                var = self.advance().value
            cbody = self.parse_block()
        self.expect_kw("end")
        return A.Try(body, var, cbody, line=line)

    # ---- expressions
    def parse_expr(self):
        return self.parse_ternary()

    def parse_ternary(self):
        cond = self.parse_or()
        if self.at_op("?"):
            line = self.advance().line
            self.skip_newlines_only()
            saved = self.no_range
            self.no_range = True
            a = self.parse_or()
            self.no_range = saved
            self.expect_op(":")
            self.skip_newlines_only()
            b = self.parse_ternary()
            return A.Ternary(cond, a, b, line=line)
        return cond

    def parse_or(self):
        a = self.parse_and()
        while self.at_op("||"):
            line = self.advance().line
            self.skip_newlines_only()
            a = A.OrE(a, self.parse_and(), line=line)
        return a

    def parse_and(self):
        a = self.parse_cmp()
        while self.at_op("&&"):
            line = self.advance().line
            self.skip_newlines_only()
            a = A.AndE(a, self.parse_cmp(), line=line)
        return a

    def _binop_here(self, ops) -> bool:
        t = self.tok
        if t.kind != "OP" or t.value not in ops:
            return False
        if self.space_sensitive and t.space_before and not t.space_after:
            return False
        return True

    def parse_cmp(self):
        a = self.parse_range()
        while self._binop_here(COMPARISONS):
            t = self.advance()
            self.skip_newlines_only()
            a = A.Call(t.value, [a, self.parse_range()], line=t.line)
        return a

    def parse_range(self):
        a = self.parse_additive()
        if not self.no_range and self._binop_here({":"}) and self._starts_expr(self.peek()):
            t = self.advance()
            b = self.parse_additive()
            return A.RangeE(a, b, line=t.line)
        return a

    def _starts_expr(self, t: Tok) -> bool:
        if t.kind in ("NUM", "STR", "ID"):
            return True
        if t.kind == "KW":
            return t.value in ("true", "false", "nothing", "end", "return")
        return t.kind == "OP" and t.value in ("(", "[", "-", "+", "!")

    def parse_additive(self):
        a = self.parse_mult()
        while self._binop_here(ADDITIVE):
            t = self.advance()
            self.skip_newlines_only()
            a = A.Call(t.value, [a, self.parse_mult()], line=t.line)
        return a

    def parse_mult(self):
        a = self.parse_unary()
        while self._binop_here(MULTIPLICATIVE):
            t = self.advance()
            self.skip_newlines_only()
            b = self.parse_unary()
            if (t.value == "*" and isinstance(a, A.Call) and a.fname == "*" and not a.paren
                    and a.tparams is None and getattr(a, "_chain", False)):
                a.args.append(b)
            else:
                a = A.Call(t.value, [a, b], line=t.line)
                if t.value == "*":
                    a._chain = True
        if isinstance(a, A.Call) and hasattr(a, "_chain"):
            del a._chain
        return a

    def parse_unary(self):
        t = self.tok
        if t.kind == "OP" and t.value in ("-", "+", "!"):
            nxt = self.peek()
            if self._starts_expr(nxt) and not (nxt.kind == "OP" and nxt.value == "(" and not nxt.space_before and t.value != "!"
                                               and self._looks_like_op_call()):
                self.advance()
                operand = self.parse_unary()
                return A.Call(t.value, [operand], line=t.line)
        return self.parse_power()

    def _looks_like_op_call(self) -> bool:
        # "-(a, b)" is a call to the function "-"; "-(a)" stays unary minus
        depth = 0
        j = self.i + 1
        while j < len(self.toks):
            tk = self.toks[j]
            if tk.kind == "OP" and tk.value in ("(", "[", "{"):
                depth += 1
            elif tk.kind == "OP" and tk.value in (")", "]", "}"):
                depth -= 1
                if depth == 0:
                    return False
            elif tk.kind == "OP" and tk.value in (",", "...") and depth == 1:
                return True
            elif tk.kind == "EOF":
                return False
            j += 1
        return False

    def parse_power(self):
        base = self.parse_postfix(self.parse_primary())
        if self._binop_here({"^"}):
            t = self.advance()
            exp = self.parse_unary()  # right associative; -2^-1 style exponent allowed
            return A.Call("^", [base, exp], line=t.line)
        return base

    def parse_primary(self):
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return A.Lit(t.value, line=t.line)
        if t.kind == "STR":
            self.advance()
            return A.Lit(t.value, line=t.line)
        if t.kind == "KW":
            if t.value in ("true", "false"):
                self.advance()
                return A.Lit(t.value == "true", line=t.line)
            if t.value == "nothing":
                self.advance()
                return A.Lit(None, line=t.line)
            if t.value == "end" and self.index_depth > 0:
                self.advance()
                return A.EndE(line=t.line)
            if t.value == "return":
                self.advance()
                return A.Return(self.parse_return_value(), line=t.line)
            self.err(f"unexpected keyword '{t.value}'")
        if t.kind == "ID":
            return self.parse_name_or_curly()
        if t.kind == "OP":
            v = t.value
            if v == "(":
                return self.parse_paren()
            if v == "[":
                return self.parse_bracket()
            if v == "::":
                self.advance()
                return A.AnonArg(self.parse_type(), line=t.line)
            if v == ":" and self.index_depth > 0:
                nxt = self.peek()
                if nxt.kind == "OP" and nxt.value in (",", "]"):
                    self.advance()
                    return A.ColonE(line=t.line)
            if v in A.BINOPS or v == "!":
                nxt = self.peek()
                if nxt.kind == "OP" and nxt.value == "{" and not nxt.space_before:
                    return self.parse_name_or_curly()
                if nxt.kind == "OP" and nxt.value == "(" and not nxt.space_before:
                    self.advance()
                    return self.parse_call_tail(v, None, t.line)
                if nxt.kind == "OP" and nxt.value in (",", ")"):
                    self.advance()
                    return A.OpRef(v, line=t.line)
        self.err(f"unexpected {self._desc()}")

    def parse_name_or_curly(self):
        t = self.advance()
        name = t.value
        if name == "Union" and self.at_op("(") and not self.tok.space_before:
            self.i -= 1
            return A.TypeE(self.parse_type_atom(), line=t.line)
        if self.at_op("{") and not self.tok.space_before:
            self.advance()
            items = []
            if not self.at_op("}"):
                while True:
                    line = self.tok.line
                    ty = self.parse_type()
                    if self.at_op("<:"):
                        if not (isinstance(ty, A.TName) and ty.params is None):
                            self.err("malformed type-parameter binder")
                        self.advance()
                        ty = A.Binder(ty.name, self.parse_type(), line=line)
                    items.append(ty)
                    if self.at_op(","):
                        self.advance()
                        continue
                    break
            self.expect_op("}")
            if self.at_op("(") and not self.tok.space_before:
                binders = []
                for it in items:
                    if isinstance(it, A.Binder):
                        binders.append(it)
                    elif isinstance(it, A.TName) and it.params is None:
                        binders.append(A.Binder(it.name, line=it.line))
                    else:
                        self.err("expected type-parameter binder")
                self.advance()
                return self.parse_call_args(name, binders, t.line)
            if any(isinstance(it, A.Binder) for it in items):
                self.err("binder outside a method signature")
            return A.TypeE(A.TName(name, items, line=t.line), line=t.line)
        return A.Name(name, line=t.line)

    def parse_call_tail(self, fname, tparams, line):
        self.expect_op("(")
        return self.parse_call_args(fname, tparams, line)

    def parse_call_args(self, fname, tparams, line):
        saved = (self.index_depth, self.space_sensitive, self.no_range)
        self.index_depth, self.space_sensitive, self.no_range = 0, False, False
        args = []
        while not self.at_op(")"):
            a = self.parse_expr()
            if self.at_op("..."):
                self.advance()
                a = A.Splat(a, line=a.line if hasattr(a, "line") else line)
            args.append(a)
            if self.at_op(","):
                self.advance()
                continue
            if not self.at_op(")"):
                self.err(f"expected ',' or ')' in call, found {self._desc()}")
        self.advance()
        self.index_depth, self.space_sensitive, self.no_range = saved
        return A.Call(fname, args, tparams, line=line)

    def parse_postfix(self, e):
        while True:
            t = self.tok
            if t.kind == "OP" and t.value == "(" and not t.space_before:
                if isinstance(e, A.Name):
                    self.advance()
                    e = self.parse_call_args(e.id, None, e.line)
                    continue
                if isinstance(e, A.TypeE) and isinstance(e.texpr, A.TName):
                    self.err("call of a parametric type application is not supported")
                self.err("only named functions can be called")
            if t.kind == "OP" and t.value == "[" and not t.space_before:
                self.advance()
                saved = (self.index_depth, self.space_sensitive, self.no_range)
                self.index_depth, self.space_sensitive, self.no_range = self.index_depth + 1, False, False
                idx = []
                while not self.at_op("]"):
                    idx.append(self.parse_expr())
                    if self.at_op(","):
                        self.advance()
                        continue
                    if not self.at_op("]"):
                        self.err("expected ',' or ']' in index")
                self.advance()
                self.index_depth, self.space_sensitive, self.no_range = saved
                e = A.Index(e, idx, line=t.line)
                continue
            if t.kind == "OP" and t.value == "." and self.peek().kind == "ID":
                self.advance()
                e = A.Field(e, self.advance().value, line=t.line)
                continue
            if t.kind == "OP" and t.value == "::":
                self.advance()
                e = A.Assert(e, self.parse_type(), line=t.line)
                continue
            return e

    def parse_paren(self):
        t = self.advance()
        saved = (self.index_depth, self.space_sensitive, self.no_range)
        self.index_depth, self.space_sensitive, self.no_range = 0, False, False
        if self.at_op(")"):
            self.advance()
            self.index_depth, self.space_sensitive, self.no_range = saved
            return A.TupleE([], line=t.line)
        first = self.parse_expr()
        if self.at_op(")"):
            self.advance()
            self.index_depth, self.space_sensitive, self.no_range = saved
            if isinstance(first, A.Call):
                first.paren = True
            return first
        items = [first]
        while self.at_op(","):
            self.advance()
            if self.at_op(")"):
                break
            items.append(self.parse_expr())
        self.expect_op(")")
        self.index_depth, self.space_sensitive, self.no_range = saved
        return A.TupleE(items, line=t.line)

    def parse_bracket(self):
        t = self.advance()
        saved = (self.index_depth, self.space_sensitive, self.no_range)
        self.index_depth, self.space_sensitive, self.no_range = 0, True, False
        rows = [[]]
        commas = False
        while not self.at_op("]"):
            rows[-1].append(self.parse_expr())
            if self.at_op(","):
                commas = True
                self.advance()
            elif self.at_op(";"):
                self.advance()
                rows.append([])
            elif self.at_op("]"):
                break
            elif self.tok.space_before:
                continue
            else:
                self.err("expected ',' ';' or ']' in array literal")
        self.advance()
        self.index_depth, self.space_sensitive, self.no_range = saved
        if rows == [[]]:
            return A.VectE([], line=t.line)
        if commas:
            if len(rows) != 1:
                self.err("cannot mix ',' and ';' in array literal")
            return A.VectE(rows[0], line=t.line)
        if len(rows) == 1 and len(rows[0]) == 1:
            return A.VectE(rows[0], line=t.line)
        if any(len(r) != len(rows[0]) for r in rows):
            self.err("rows of a matrix literal must have equal length")
        return A.HCatE(rows, line=t.line)

    # ---- type expressions
    def parse_type(self):
        t = self.parse_type_atom()
        if self.at_kw("where"):
            line = self.advance().line
            binders = []
            while True:
                bl = self.tok.line
                first = self.parse_type_atom()
                if self.at_op("<:"):
                    self.advance()
                    second = self.parse_type_atom()
                    if self.at_op("<:"):
                        self.advance()
                        third = self.parse_type_atom()
                        if not (isinstance(second, A.TName) and second.params is None):
                            self.err("malformed where binder")
                        binders.append(A.Binder(second.name, third, first, line=bl))
                    else:
                        if not (isinstance(first, A.TName) and first.params is None):
                            self.err("malformed where binder")
                        binders.append(A.Binder(first.name, second, line=bl))
                else:
                    if not (isinstance(first, A.TName) and first.params is None):
                        self.err("malformed where binder")
                    binders.append(A.Binder(first.name, line=bl))
                if self.at_op(","):
                    self.advance()
                    continue
                break
            t = A.TWhere(t, binders, line=line)
        return t

    def parse_type_atom(self):
        t = self.tok
        if t.kind == "NUM" and isinstance(t.value, int):
            self.advance()
            return A.TInt(t.value, line=t.line)
        if t.kind == "OP" and t.value == "-" and self.peek().kind == "NUM":
            self.advance()
            n = self.advance()
            if not isinstance(n.value, int):
                self.err("type parameter must be an integer")
            return A.TInt(-n.value, line=t.line)
        if t.kind == "OP" and t.value == ":" and self.peek().kind == "ID":
            self.advance()
            return A.TSym(self.advance().value, line=t.line)
        if t.kind == "OP" and t.value == "(":
            self.advance()
            items = []
            vararg = None
            trailing_comma = False
            while not self.at_op(")"):
                it = self.parse_type()
                if self.at_op("..."):
                    self.advance()
                    vararg = it
                    if self.at_op(","):
                        self.advance()
                    if not self.at_op(")"):
                        self.err("vararg element must be last in a tuple type")
                    break
                items.append(it)
                trailing_comma = False
                if self.at_op(","):
                    self.advance()
                    trailing_comma = True
                    continue
                if not self.at_op(")"):
                    self.err("expected ',' or ')' in tuple type")
            self.expect_op(")")
            if len(items) == 1 and vararg is None and not trailing_comma:
                return items[0]  # parenthesised type
            return A.TTuple(items, vararg, line=t.line)
        if t.kind == "ID":
            self.advance()
            if t.value == "Union" and self.at_op("("):
                self.advance()
                ms = []
                while not self.at_op(")"):
                    ms.append(self.parse_type())
                    if self.at_op(","):
                        self.advance()
                        continue
                    if not self.at_op(")"):
                        self.err("expected ',' or ')' in Union")
                self.advance()
                return A.TUnion(ms, line=t.line)
            if self.at_op("{") and not self.tok.space_before:
                self.advance()
                ps = []
                while not self.at_op("}"):
                    ps.append(self.parse_type())
                    if self.at_op(","):
                        self.advance()
                        continue
                    if not self.at_op("}"):
                        self.err("expected ',' or '}' in type parameters")
                self.advance()
                return A.TName(t.value, ps, line=t.line)
            return A.TName(t.value, None, line=t.line)
        self.err(f"expected a type, found {self._desc()}")


def parse(src: str, path: Optional[str] = None) -> A.Program:
    return Parser(src, path).parse_program()


def parse_type_expr(src: str):
    p = Parser(src)
    p.skip_newlines_only()
    t = p.parse_type()
    p.skip_newlines_only()
    if not p.at("EOF"):
        p.err(f"unexpected {p._desc()} after type")
    return t
