"""Command-line driver: ``mdl run|infer|report|bench|test``.

Exit codes: 0 success, 1 usage error, 2 method or ambiguity error,
3 other runtime error, 4 static error (syntax, lowering, missing file).
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from typing import Optional

from . import ir as I
from .corpus import check_file, corpus_files
from .engine import Engine, OptOptions
from .errors import MdlError
from .infer import Limits
from .interp import as_mdl_error
from .types import TupleType
from .values import display, to_json

EXIT_OK, EXIT_USAGE = 0, 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _limits(ns) -> Limits:
    lim = Limits()
    if ns.max_union is not None:
        lim.max_union = ns.max_union
    if ns.max_depth is not None:
        lim.max_depth = ns.max_depth
    if ns.max_tuple is not None:
        lim.max_tuple = ns.max_tuple
    return lim


def _opts(ns) -> OptOptions:
    o = OptOptions(devirt=not ns.no_devirt, inline=not ns.no_inline)
    if ns.inline_max is not None:
        o.inline_max = ns.inline_max
    return o


def make_engine(ns, path: Optional[str] = None) -> Engine:
    e = Engine(_limits(ns), _opts(ns))
    if path is not None:
        e.load_file(path)
    return e


def parse_arg(s: str):
    """A command-line argument as a language value: Int64, Float64, Bool or String."""
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


# ---- run

def cmd_run(ns) -> int:
    e = make_engine(ns, ns.file)
    entry = ns.entry
    rt = e.runtime(ns.mode, ns.seed, sys.stdout)
    v = rt.run(entry, tuple(parse_arg(a) for a in ns.args))
    if ns.json:
        out = {"value": to_json(v), "display": display(v)}
        if ns.stats:
            out["stats"] = rt.stats.to_json()
        print(json.dumps(out))
    else:
        if entry is not None or e.default_entry() is not None or v is not None:
            print(display(v))
        if ns.stats:
            print(json.dumps(rt.stats.to_json()))
    return EXIT_OK


# ---- infer

def _require_entry(ns):
    if not ns.entry:
        raise UsageError("-e/--entry is required")


def inference_result(e: Engine, fname: str, argtypes: list) -> dict:
    """JSON-able per-statement types and call-site table for ``fname`` at ``argtypes``."""
    m, res = e.infer_call(fname, argtypes)
    show = e.reg.show
    resolution = {}
    try:
        rep = e.report(fname, argtypes)
        for s in rep.sites:
            resolution[(s.block, s.index)] = s
    except MdlError:
        rep = None
    stmts = []
    for b, blk in enumerate(res.ir.blocks):
        if not res.reachable(b):
            continue
        for i, s in enumerate(blk.stmts):
            t = res.stmt_types[b][i]
            stmts.append({
                "block": b, "index": i, "stmt": I.format_stmt(s, show),
                "type": show(t) if t is not None else None,
            })
    sites = []
    for (b, i), cs in sorted(res.sites.items()):
        row = {"block": b, "index": i, "function": cs.fname, "argtypes": show(cs.argtypes),
               "result": show(cs.result)}
        si = resolution.get((b, i))
        if si is not None:
            row["status"] = si.status
            row["target"] = si.target
            row["reason"] = si.reason
        sites.append(row)
    return {
        "function": fname,
        "method": m.describe(e.reg),
        "argtypes": show(res.argtypes),
        "return": show(res.ret),
        "slots": _slot_table(e, res),
        "statements": stmts,
        "call_sites": sites,
        "diagnostics": [str(d) for d in res.diagnostics],
        "widening": dict(e.inferencer.widenings),
    }


def _slot_table(e: Engine, res) -> list:
    """Each named local with the join of every type stored into it."""
    irf = res.ir
    types = {}
    fixed = res.argtypes.fixed if isinstance(res.argtypes, TupleType) else ()
    for k in range(min(irf.nargs, len(fixed))):
        types[k] = fixed[k]
    for b, blk in enumerate(irf.blocks):
        if not res.reachable(b):
            continue
        for i, s in enumerate(blk.stmts):
            t = res.stmt_types[b][i]
            if s.dst is not None and t is not None:
                types[s.dst] = e.reg.join(types[s.dst], t) if s.dst in types else t
    return [{"slot": k, "name": irf.slot_names[k], "type": e.reg.show(t)}
            for k, t in sorted(types.items()) if irf.slot_names[k]]


def cmd_infer(ns) -> int:
    _require_entry(ns)
    e = make_engine(ns, ns.file)
    r = inference_result(e, ns.entry, e.parse_argtypes(ns.argtypes or ""))
    if ns.json:
        print(json.dumps(r, indent=2))
        return EXIT_OK
    print(f"method: {r['method']}")
    print(f"argtypes: {r['argtypes']}")
    print(f"return: {r['return']}")
    print("slots: " + ", ".join(f"{x['name']}::{x['type']}" for x in r["slots"]))
    last = None
    for s in r["statements"]:
        if s["block"] != last:
            print(f"#{s['block']}:")
            last = s["block"]
        print(f"    {s['stmt']:<48} :: {s['type']}")
    if r["call_sites"]:
        print("call sites:")
        for c in r["call_sites"]:
            how = c.get("status", "?")
            if c.get("target"):
                how += f" -> {c['target']}"
            elif c.get("reason"):
                how += f" ({c['reason']})"
            print(f"    #{c['block']}:{c['index']} {c['function']}{c['argtypes']} => {c['result']}  [{how}]")
    for d in r["diagnostics"]:
        print(f"note: {d}")
    fired = {k: v for k, v in r["widening"].items() if v}
    if fired:
        print("widening: " + ", ".join(f"{k}={v}" for k, v in fired.items()))
    return EXIT_OK


# ---- report

def cmd_report(ns) -> int:
    _require_entry(ns)
    e = make_engine(ns, ns.file)
    rep = e.report(ns.entry, e.parse_argtypes(ns.argtypes or ""))
    gf = e.table.get(ns.entry)
    methods = len(gf.methods)
    ambiguous = [f"{a.describe(e.reg)} | {b.describe(e.reg)}" for a, b in gf.ambiguities(e.reg)]
    if ns.json:
        doc = rep.to_json()
        doc["methods"] = methods
        doc["ambiguities"] = ambiguous
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    print(f"function: {rep.function}{rep.argtypes}  methods: {methods}")
    for amb in ambiguous:
        print(f"warning: ambiguous methods {amb}")
    print(f"call sites: {rep.total_sites}  resolved: {rep.resolved}  dynamic: {rep.dynamic}  "
          f"ratio: {rep.ratio:.3f}")
    print(f"inlined: {rep.inlined}  statements: {rep.stmts_before} -> {rep.stmts_after}")
    for k, v in sorted(rep.reasons.items()):
        print(f"  {k}: {v}")
    for s in rep.sites:
        tail = f"-> {s.target}" if s.target else f"({s.reason})"
        print(f"  #{s.block}:{s.index} {s.fname}{s.argtypes} {s.status} {tail}")
    return EXIT_OK


# ---- bench

def run_bench(e: Engine, entries: list, sizes: list, modes: list, reps: int, seed: int = 42) -> list:
    """Median timings and counters per (size, variant, mode); sizes ascending."""
    if reps < 1:
        raise UsageError("repetitions must be at least 1")
    rows = []
    sizes = sorted(sizes)
    for entry in entries:
        for mode in modes:
            # warm up so inference and code generation are not timed
            e.run(entry, (sizes[0],), mode=mode, seed=seed, run_main=False)
    for n in sizes:
        for entry in entries:
            for mode in modes:
                times = []
                st = None
                for _ in range(reps):
                    _, st = e.run(entry, (n,), mode=mode, seed=seed, run_main=False)
                    times.append(st.wall_time)
                rows.append({
                    "size": n, "variant": entry, "mode": mode, "reps": reps,
                    "median_time": statistics.median(times),
                    "allocations": st.allocations, "allocated_cells": st.allocated_cells,
                    "dynamic_dispatches": st.dynamic_dispatches, "direct_calls": st.direct_calls,
                })
    return rows


def _int_list(s: str) -> list:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers: {s}") from None


def cmd_bench(ns) -> int:
    _require_entry(ns)
    sizes = _int_list(ns.sizes)
    if not sizes:
        raise UsageError("no sizes given")
    modes = [m for m in ns.modes.split(",") if m]
    for m in modes:
        if m not in ("dynamic", "optimized", "checking"):
            raise UsageError(f"unknown mode {m}")
    if ns.reps < 1:
        raise UsageError("--reps must be at least 1")
    e = make_engine(ns, ns.file)
    rows = run_bench(e, ns.entry.split(","), sizes, modes, ns.reps, ns.seed)
    if ns.json:
        print(json.dumps(rows, indent=2))
        return EXIT_OK
    hdr = f"{'size':>6} {'variant':<22} {'mode':<10} {'median_s':>10} {'allocs':>8} {'cells':>10} {'dispatch':>10} {'direct':>10}"
    print(hdr)
    for r in rows:
        print(f"{r['size']:>6} {r['variant']:<22} {r['mode']:<10} {r['median_time']:>10.4f} "
              f"{r['allocations']:>8} {r['allocated_cells']:>10} {r['dynamic_dispatches']:>10} {r['direct_calls']:>10}")
    return EXIT_OK


# ---- test

def cmd_test(ns) -> int:
    import os

    if not os.path.isdir(ns.dir):
        raise UsageError(f"not a directory: {ns.dir}")
    results = [check_file(cf, ns.seed) for cf in corpus_files(ns.dir)]
    if ns.json:
        print(json.dumps([r.to_json() for r in results], indent=2))
    else:
        for r in results:
            print(f"{'PASS' if r.ok else 'FAIL'} {r.file} ({r.checks} checks)")
            for f in r.failures:
                print(f"    {f}")
    return EXIT_OK if all(r.ok for r in results) else 3


# ---- argument parsing

_SUBPARSERS: dict = {}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--max-union", type=int)
    common.add_argument("--max-depth", type=int)
    common.add_argument("--max-tuple", type=int)
    common.add_argument("--no-devirt", action="store_true")
    common.add_argument("--no-inline", action="store_true")
    common.add_argument("--inline-max", type=int)

    p = _Parser(prog="mdl", description="Run and analyse programs in a small multiple-dispatch language.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    r = sub.add_parser("run", parents=[common], help="execute a program")
    r.add_argument("file")
    r.add_argument("args", nargs="*", help="arguments passed to the entry function")
    r.add_argument("-e", "--entry")
    r.add_argument("--mode", default="dynamic", choices=["dynamic", "optimized", "checking"])
    r.add_argument("--stats", action="store_true", help="print execution statistics as JSON")
    r.set_defaults(fn=cmd_run)

    i = sub.add_parser("infer", parents=[common], help="show inferred types for a method instance")
    i.add_argument("file")
    i.add_argument("-e", "--entry")
    i.add_argument("-t", "--argtypes", default="")
    i.set_defaults(fn=cmd_infer)

    o = sub.add_parser("report", parents=[common], help="show the optimizer's call-site resolution report")
    o.add_argument("file")
    o.add_argument("-e", "--entry")
    o.add_argument("-t", "--argtypes", default="")
    o.set_defaults(fn=cmd_report)

    b = sub.add_parser("bench", parents=[common], help="time entry functions over problem sizes")
    b.add_argument("file")
    b.add_argument("-e", "--entry", help="comma-separated entry functions taking a size")
    b.add_argument("--sizes", default="50,100,200")
    b.add_argument("--modes", default="dynamic,optimized")
    b.add_argument("--reps", type=int, default=5)
    b.set_defaults(fn=cmd_bench)

    t = sub.add_parser("test", parents=[common], help="check a corpus directory against its manifests")
    t.add_argument("dir", nargs="?", default="corpus")
    t.set_defaults(fn=cmd_test)
    _SUBPARSERS.update(sub.choices)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] in _SUBPARSERS:
            # intermixed parsing lets entry arguments follow the options
            ns = _SUBPARSERS[argv[0]].parse_intermixed_args(argv[1:])
            ns.command = argv[0]
        else:
            ns = parser.parse_args(argv)
            if ns.command is None:
                raise UsageError("missing command")
        return ns.fn(ns)
    except UsageError as err:
        print(f"mdl: usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except MdlError as err:
        err = as_mdl_error(err)
        print(f"ERROR: {err.kind}: {err}", file=sys.stderr)
        return err.exit_code if err.exit_code != EXIT_USAGE else 3


if __name__ == "__main__":
    sys.exit(main())
