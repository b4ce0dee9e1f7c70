"""IR-to-IR optimization of specialized method instances.

Passes, in order: static-parameter substitution, devirtualization of call
sites with leaf argument types, removal of blocks inference proved dead,
inlining of small non-recursive callees, and a cleanup round (copy
propagation, constant folding, dead-statement removal, block merging).
None of them reorders arithmetic.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import ir as I
from .errors import AmbiguityError, MethodError
from .intrinsics import INTRINSICS
from .lower import prune_unreachable
from .types import Const, TupleType, is_closed, subst
from .values import TypeVal


@dataclass
class SiteInfo:
    block: int
    index: int
    fname: str
    argtypes: str
    status: str  # resolved | dynamic
    reason: Optional[str] = None
    target: Optional[str] = None


@dataclass
class OptReport:
    function: str
    argtypes: str
    total_sites: int = 0
    resolved: int = 0
    dynamic: int = 0
    ratio: float = 0.0
    reasons: dict = field(default_factory=dict)
    inlined: int = 0
    stmts_before: int = 0
    stmts_after: int = 0
    sites: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["reasons"] = dict(sorted(self.reasons.items()))
        return d


def optimize_instance(engine, inst):
    reg = engine.reg
    opts = engine.opts
    res = engine.inferencer.result(inst.method, inst.argtypes)
    irf = I.copy_ir(inst.method.ir)
    report = OptReport(inst.method.fname, reg.show(inst.argtypes), stmts_before=irf.stmt_count())
    if reg.is_leaf(inst.argtypes) and inst.env:
        substitute_static(irf, inst.env, reg)
    devirtualize(engine, irf, res, report, opts.devirt)
    drop_dead_blocks(irf, [x is not None for x in res.block_in])
    if opts.inline:
        report.inlined = inline(engine, irf, inst, opts.inline_max, opts.inline_depth)
    cleanup(irf)
    report.stmts_after = irf.stmt_count()
    return irf, report


# -- static parameters --------------------------------------------------------------

def substitute_static(irf: I.IRFunction, env: dict, reg) -> None:
    for blk in irf.blocks:
        out = []
        for s in blk.stmts:
            if isinstance(s, I.SStaticParam) and s.name in env:
                b = env[s.name]
                s = I.SConst(s.dst, b.value if isinstance(b, Const) else TypeVal(b))
            elif isinstance(s, I.SMakeType):
                t = subst(s.term, env)
                if is_closed(t):
                    s = I.SConst(s.dst, TypeVal(reg.canon(t)))
            elif isinstance(s, (I.SConvert, I.SAssert, I.SNew)):
                t = subst(s.type, env)
                if is_closed(t):
                    s = copy.copy(s)
                    s.type = reg.canon(t)
            out.append(s)
        blk.stmts = out


# -- devirtualization ---------------------------------------------------------------

def devirtualize(engine, irf: I.IRFunction, res, report: OptReport, enabled: bool) -> None:
    reg = engine.reg
    table = engine.table
    for b, blk in enumerate(irf.blocks):
        if res.block_in[b] is None:
            continue
        out = []
        for i, s in enumerate(blk.stmts):
            site = res.sites.get((b, i)) if isinstance(s, I.SCall) else None
            if site is None:
                out.append(s)
                continue
            argtuple = site.argtypes
            gf = table.get(s.fname)
            info = SiteInfo(b, i, s.fname, reg.show(argtuple), "dynamic")
            target = None
            if not enabled:
                info.reason = "disabled"
            elif gf is None:
                info.reason = "unknown-function"
            elif not reg.is_leaf(argtuple):
                cands = gf.candidates(reg, argtuple) if not isinstance(argtuple, type(None)) else []
                info.reason = "multiple-matches" if len(cands) > 1 else "non-leaf"
            else:
                try:
                    m, _env = gf.lookup(reg, argtuple, lambda: argtuple)
                    target = engine.specialize(m, argtuple)
                except AmbiguityError:
                    info.reason = "ambiguous"
                except MethodError:
                    info.reason = "no-method"
            if target is not None:
                info.status = "resolved"
                info.target = target.method.describe(reg)
                args = list(s.args)
                if s.splat:
                    args = []
                    for a, sp in zip(s.args, s.splat):
                        if not sp:
                            args.append(a)
                            continue
                        t = res.stmt_types and _slot_type_before(res, b, i, a)
                        n = len(t.fixed) if isinstance(t, TupleType) else 0
                        for k in range(n):
                            tmp = irf.new_slot("")
                            out.append(I.STupleGet(tmp, a, k + 1))
                            args.append(tmp)
                out.append(I.SDirect(s.dst, s.fname, target, args, s.line))
                report.resolved += 1
            else:
                out.append(s)
                report.dynamic += 1
                report.reasons[info.reason] = report.reasons.get(info.reason, 0) + 1
            report.sites.append(info)
        blk.stmts = out
    report.total_sites = report.resolved + report.dynamic
    report.ratio = report.resolved / report.total_sites if report.total_sites else 1.0


def _slot_type_before(res, b, i, slot):
    from .infer import slot_types_at

    return slot_types_at(res, b, i)[slot]


def drop_dead_blocks(irf: I.IRFunction, live: list) -> None:
    """Remove blocks inference found unreachable; edges into them are never taken."""
    for k, blk in enumerate(irf.blocks):
        if not live[k]:
            blk.stmts = []
            blk.term = I.Goto(k)
            blk.handler = None
            continue
        t = blk.term
        if isinstance(t, I.Goto) and not live[t.target]:
            t.target = k
        elif isinstance(t, I.Branch):
            if not live[t.then]:
                t.then = k
            if not live[t.other]:
                t.other = k
    prune_unreachable(irf)


# -- inlining ---------------------------------------------------------------------

def _has_static(irf: I.IRFunction) -> bool:
    return any(isinstance(s, (I.SStaticParam, I.SMakeType)) for b in irf.blocks for s in b.stmts)


def inline(engine, irf: I.IRFunction, inst, max_stmts: int, depth: int) -> int:
    count = 0
    for _ in range(depth):
        changed = False
        b = 0
        nblocks = len(irf.blocks)  # spliced blocks wait for the next round
        while b < nblocks:
            blk = irf.blocks[b]
            for i, s in enumerate(blk.stmts):
                if not isinstance(s, I.SDirect) or s.target is inst:
                    continue
                # recursive methods are not inlined, even at other argument types
                if s.target.method is inst.method or any(o.method is s.target.method for o in engine._optimizing):
                    continue
                callee = engine.optimized(s.target)
                if callee is None or callee.stmt_count() > max_stmts or _has_static(callee):
                    continue
                if any(isinstance(x, I.SDirect) and (x.target is inst or x.target.method is s.target.method)
                       for cb in callee.blocks for x in cb.stmts):
                    continue
                splice(irf, b, i, s, callee, _vararg(s.target.method))
                count += 1
                changed = True
                break
            b += 1
        if not changed:
            break
    return count


def _vararg(m) -> bool:
    pt = m.param_types()
    return isinstance(pt, TupleType) and pt.vararg is not None


def rename_stmt(s, f):
    s = copy.copy(s)
    for attr in ("dst", "src", "obj", "val"):
        v = getattr(s, attr, None)
        if v is not None and hasattr(s, attr):
            setattr(s, attr, f(v))
    if hasattr(s, "args"):
        s.args = [f(a) for a in s.args]
    return s


def splice(irf: I.IRFunction, b: int, i: int, call: I.SDirect, callee: I.IRFunction, vararg: bool) -> None:
    off = irf.nslots
    for n in callee.slot_names:
        irf.slot_names.append(f"{callee.name}.{n}" if n else "")
    blk = irf.blocks[b]
    cont = I.Block(blk.stmts[i + 1:], blk.term, blk.handler)
    irf.blocks.append(cont)
    cont_idx = len(irf.blocks) - 1
    boff = len(irf.blocks)
    pre = blk.stmts[:i]
    np_ = callee.nargs
    args = list(call.args)
    if vararg:
        for k in range(np_ - 1):
            pre.append(I.SMove(off + k, args[k]))
        pre.append(I.SIntr(off + np_ - 1, "tuple", args[np_ - 1:]))
    else:
        for k in range(np_):
            pre.append(I.SMove(off + k, args[k]))
    blk.stmts = pre
    blk.term = I.Goto(boff)
    f = lambda x: x + off  # noqa: E731
    for cb in callee.blocks:
        stmts = [rename_stmt(s, f) for s in cb.stmts]
        t = cb.term
        if isinstance(t, I.Ret):
            stmts.append(I.SMove(call.dst, t.src + off))
            term = I.Goto(cont_idx)
        elif isinstance(t, I.Goto):
            term = I.Goto(t.target + boff)
        else:
            term = I.Branch(t.cond + off, t.then + boff, t.other + boff)
        if cb.handler is not None:
            h = (cb.handler[0] + boff, cb.handler[1] + off if cb.handler[1] is not None else None)
        else:
            h = blk.handler
        irf.blocks.append(I.Block(stmts, term, h))


# -- cleanup --------------------------------------------------------------------------

_FOLDABLE = (int, float, bool, str, type(None))


def _defs(irf: I.IRFunction) -> list:
    n = [0] * irf.nslots
    for k in range(irf.nargs):
        n[k] += 1
    for blk in irf.blocks:
        if blk.handler is not None and blk.handler[1] is not None:
            n[blk.handler[1]] += 2  # never treat exception slots as single-assignment
        for s in blk.stmts:
            if s.dst is not None:
                n[s.dst] += 1
    return n


def _term_reads(t) -> tuple:
    if isinstance(t, I.Branch):
        return (t.cond,)
    if isinstance(t, I.Ret):
        return (t.src,)
    return ()


def cleanup(irf: I.IRFunction) -> None:
    for _ in range(4):
        a = copy_propagate(irf)
        c = fold_constants(irf)
        d = remove_dead(irf)
        m = merge_blocks(irf)
        if not (a or c or d or m):
            break


def copy_propagate(irf: I.IRFunction) -> bool:
    defs = _defs(irf)
    repl: dict = {}
    for blk in irf.blocks:
        for s in blk.stmts:
            if isinstance(s, I.SMove) and defs[s.dst] == 1 and defs[s.src] == 1 and s.dst >= irf.nargs:
                repl[s.dst] = s.src
    if not repl:
        return False

    def root(x):
        seen = 0
        while x in repl and seen < 1000:
            x = repl[x]
            seen += 1
        return x

    for blk in irf.blocks:
        out = []
        for s in blk.stmts:
            if isinstance(s, I.SMove) and s.dst in repl:
                continue
            out.append(_rename_reads(s, root))
        blk.stmts = out
        t = blk.term
        if isinstance(t, I.Branch):
            t.cond = root(t.cond)
        elif isinstance(t, I.Ret):
            t.src = root(t.src)
    return True


def _rename_reads(s, f):
    s = copy.copy(s)
    for attr in ("src", "obj", "val"):
        if hasattr(s, attr) and getattr(s, attr) is not None:
            setattr(s, attr, f(getattr(s, attr)))
    if hasattr(s, "args"):
        s.args = [f(a) for a in s.args]
    return s


def fold_constants(irf: I.IRFunction) -> bool:
    defs = _defs(irf)
    consts: dict = {}
    for blk in irf.blocks:
        for s in blk.stmts:
            if isinstance(s, I.SConst) and defs[s.dst] == 1:
                consts[s.dst] = s.value
    changed = False
    for blk in irf.blocks:
        out = []
        for s in blk.stmts:
            if isinstance(s, I.SIntr) and INTRINSICS[s.name].pure and not INTRINSICS[s.name].needs_ctx \
                    and all(a in consts for a in s.args) and defs[s.dst] == 1:
                vals = [consts[a] for a in s.args]
                if all(type(v) in _FOLDABLE for v in vals):
                    try:
                        r = INTRINSICS[s.name].impl(*vals)
                    except Exception:  # noqa: BLE001 - leave failing ops for runtime
                        r = _NOFOLD
                    if r is not _NOFOLD and (type(r) in _FOLDABLE or type(r) is tuple):
                        s = I.SConst(s.dst, r)
                        consts[s.dst] = r
                        changed = True
            out.append(s)
        blk.stmts = out
        t = blk.term
        if isinstance(t, I.Branch) and t.cond in consts and type(consts[t.cond]) is bool:
            blk.term = I.Goto(t.then if consts[t.cond] else t.other)
            changed = True
    if changed:
        prune_unreachable(irf)
    return changed


_NOFOLD = object()


def _pure(s) -> bool:
    if isinstance(s, (I.SConst, I.SMove, I.SStaticParam, I.SMakeType)):
        return True
    if isinstance(s, I.SIntr):
        return INTRINSICS[s.name].pure
    return False


def remove_dead(irf: I.IRFunction) -> bool:
    changed_any = False
    while True:
        used = [0] * irf.nslots
        for blk in irf.blocks:
            for s in blk.stmts:
                for r in s.reads():
                    used[r] += 1
            for r in _term_reads(blk.term):
                used[r] += 1
            if blk.handler is not None and blk.handler[1] is not None:
                used[blk.handler[1]] += 1
        changed = False
        for blk in irf.blocks:
            keep = [s for s in blk.stmts if not (s.dst is not None and used[s.dst] == 0 and _pure(s))]
            if len(keep) != len(blk.stmts):
                blk.stmts = keep
                changed = True
        if not changed:
            return changed_any
        changed_any = True


def merge_blocks(irf: I.IRFunction) -> bool:
    changed = False
    # thread jumps through empty blocks
    for blk in irf.blocks:
        t = blk.term
        for attr in ("target", "then", "other"):
            if hasattr(t, attr):
                tgt = getattr(t, attr)
                hops = 0
                while (not irf.blocks[tgt].stmts and isinstance(irf.blocks[tgt].term, I.Goto)
                       and irf.blocks[tgt].term.target != tgt and hops < 50):
                    tgt = irf.blocks[tgt].term.target
                    hops += 1
                if tgt != getattr(t, attr):
                    setattr(t, attr, tgt)
                    changed = True
    if isinstance(irf.blocks[0].term, I.Goto) and not irf.blocks[0].stmts:
        pass
    while True:
        preds: dict = {k: [] for k in range(len(irf.blocks))}
        reach = irf.reachable()
        for k, blk in enumerate(irf.blocks):
            if not reach[k]:
                continue
            for s in irf.succs(k):
                preds[s].append(k)
        done = True
        for k, blk in enumerate(irf.blocks):
            if not reach[k] or not isinstance(blk.term, I.Goto):
                continue
            tgt = blk.term.target
            if tgt == k or tgt == 0 or preds[tgt] != [k]:
                continue
            nxt = irf.blocks[tgt]
            if nxt.handler != blk.handler:
                continue
            blk.stmts = blk.stmts + nxt.stmts
            blk.term = nxt.term
            nxt.stmts = []
            nxt.term = I.Goto(tgt)
            changed = True
            done = False
            break
        if done:
            break
    if changed:
        prune_unreachable(irf)
    return changed
