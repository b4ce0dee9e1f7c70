"""Corpus files and their expectation manifests.

Each ``<name>.mdl`` program in a corpus directory may have a sidecar
``<name>.expect.json`` describing what running it must produce.  The
manifest keys are all optional:

``runs``
    ``[{"entry", "args", "result", "probes"}]``: the JSON form of the value
    returned by ``entry(args...)`` and, optionally, the probe counters.
``errors``
    ``[{"entry", "args", "error"}]``: the error kind the call must raise.
``inferred``
    ``[{"function", "argtypes", "returns"}]``: canonical printed return type.
``reports``
    ``[{"function", "argtypes", "min_ratio"}]``: optimizer resolution rate.

Every run and error check is performed in all three execution modes, and
the checking mode must observe no violations.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .engine import Engine
from .errors import MdlError
from .interp import as_mdl_error
from .values import to_json

MODES = ("dynamic", "optimized", "checking")


@dataclass
class CorpusFile:
    path: str
    manifest: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return os.path.splitext(os.path.basename(self.path))[0]

    @classmethod
    def load(cls, path: str) -> "CorpusFile":
        side = os.path.splitext(path)[0] + ".expect.json"
        manifest = {}
        if os.path.exists(side):
            with open(side) as fh:
                manifest = json.load(fh)
        return cls(path, manifest)


@dataclass
class CheckResult:
    file: str
    failures: list = field(default_factory=list)
    checks: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"file": self.file, "ok": self.ok, "checks": self.checks, "failures": list(self.failures)}


def corpus_files(directory: str) -> list:
    names = sorted(f for f in os.listdir(directory) if f.endswith(".mdl"))
    return [CorpusFile.load(os.path.join(directory, f)) for f in names]


def _call(engine: Engine, entry: Optional[str], args, mode: str, seed: int):
    """(value or None, error kind or None, stats)."""
    out = io.StringIO()
    rt = engine.runtime(mode, seed, out)
    try:
        v = rt.run(entry, tuple(args), run_main=False)
        return v, None, rt.stats
    except MdlError as e:
        return None, as_mdl_error(e).kind, rt.stats


def check_file(cf: CorpusFile, seed: int = 42) -> CheckResult:
    res = CheckResult(cf.path)
    fail = res.failures.append
    try:
        engine = Engine()
        engine.load_file(cf.path)
    except MdlError as e:
        fail(f"load: {e.kind}: {e}")
        return res
    m = cf.manifest
    runs = list(m.get("runs", []))
    if not runs and engine.default_entry():
        runs = [{"entry": engine.default_entry(), "args": []}]
    for r in runs:
        entry, args = r["entry"], r.get("args", [])
        seen = []
        for mode in MODES:
            v, err, st = _call(engine, entry, args, mode, seed)
            res.checks += 1
            if err is not None:
                fail(f"{entry}{tuple(args)} [{mode}] raised {err}")
                continue
            j = to_json(v)
            seen.append(j)
            if "result" in r and j != r["result"]:
                fail(f"{entry}{tuple(args)} [{mode}] returned {j!r}, expected {r['result']!r}")
            if "probes" in r and st.probes != r["probes"]:
                fail(f"{entry}{tuple(args)} [{mode}] probes {st.probes}, expected {r['probes']}")
            if st.check_violations:
                fail(f"{entry}{tuple(args)} [{mode}] {len(st.check_violations)} check violations: "
                     f"{st.check_violations[0]}")
        if any(x != seen[0] for x in seen[1:]):
            fail(f"{entry}{tuple(args)}: modes disagree")
    for r in m.get("errors", []):
        entry, args = r["entry"], r.get("args", [])
        for mode in MODES:
            _, err, _ = _call(engine, entry, args, mode, seed)
            res.checks += 1
            if err != r["error"]:
                fail(f"{entry}{tuple(args)} [{mode}] raised {err}, expected {r['error']}")
    for r in m.get("inferred", []):
        res.checks += 1
        try:
            t = engine.return_type(r["function"], engine.parse_argtypes(r["argtypes"]))
            got = engine.reg.show(t)
        except MdlError as e:
            got = f"<{e.kind}>"
        if got != r["returns"]:
            fail(f"infer {r['function']}({r['argtypes']}) = {got}, expected {r['returns']}")
    for r in m.get("reports", []):
        res.checks += 1
        rep = engine.report(r["function"], engine.parse_argtypes(r["argtypes"]))
        if rep.ratio < r["min_ratio"]:
            fail(f"report {r['function']}({r['argtypes']}) ratio {rep.ratio:.3f} < {r['min_ratio']}")
    return res
