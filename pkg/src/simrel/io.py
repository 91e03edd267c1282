"""JSON and CSV formats for systems, relations, controllers, interfaces and traces.

Labels may be strings, numbers or tuples; tuples are written as JSON lists
and read back as tuples. All writers emit keys and entries in a fixed order so
repeated runs produce identical files.
"""
from __future__ import annotations

import csv
import io as _io
import itertools
import json
from pathlib import Path

from .exceptions import UsageError
from .relations import BinaryRelation
from .synthesis import StaticController
from .system import FiniteSystem, GeneralSystem, label_key


def to_label(v):
    if isinstance(v, list):
        return tuple(to_label(e) for e in v)
    if isinstance(v, (dict, type(None))):
        raise UsageError(f"invalid label {v!r}")
    return v


def from_label(v):
    if isinstance(v, tuple):
        return [from_label(e) for e in v]
    return v


def _sorted(xs):
    return sorted(xs, key=label_key)


def read_json(source):
    if isinstance(source, (dict, list)):
        return source
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {source}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{source}: malformed JSON: {exc}") from None


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def _labels(obj, key, required=True):
    if key not in obj:
        if required:
            raise UsageError(f"missing field {key!r}")
        return None
    if not isinstance(obj[key], list):
        raise UsageError(f"field {key!r} must be a list")
    return tuple(to_label(v) for v in obj[key])


def load_system(source):
    """Read a system; files without H (or flagged simple) give a FiniteSystem."""
    obj = read_json(source)
    if not isinstance(obj, dict):
        raise UsageError("a system must be a JSON object")
    states = _labels(obj, "states")
    inputs = _labels(obj, "inputs")
    flags = tuple(obj.get("flags", ()))
    try:
        F = {}
        for e in obj.get("F", []):
            key = (to_label(e["x"]), to_label(e["v"] if "v" in e else e["u"]))
            F.setdefault(key, set()).update(to_label(t) for t in e["to"])
        if "H" not in obj:
            return FiniteSystem(states, inputs, F)
        H = {}
        for e in obj["H"]:
            key = (to_label(e["x"]), to_label(e["u"]))
            H.setdefault(key, set()).update((to_label(y), to_label(v)) for y, v in e["yv"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"malformed system entry: {exc!r}") from None
    internal = _labels(obj, "internal", required=False) or inputs
    outputs = _labels(obj, "outputs", required=False) or states
    return GeneralSystem(states, inputs, internal, outputs, F, H, flags=flags)


def dump_system(sys) -> dict:
    if isinstance(sys, FiniteSystem):
        F = [{"x": from_label(x), "u": from_label(u), "to": [from_label(t) for t in _sorted(sys.post(x, u))]}
             for x in sys.states for u in sys.inputs if sys.post(x, u)]
        return {"states": [from_label(x) for x in sys.states],
                "inputs": [from_label(u) for u in sys.inputs], "F": F, "flags": ["simple"]}
    F = [{"x": from_label(x), "v": from_label(v), "to": [from_label(t) for t in _sorted(sys.post(x, v))]}
         for x in sys.states for v in sys.internal if sys.post(x, v)]
    H = [{"x": from_label(x), "u": from_label(u),
          "yv": [[from_label(y), from_label(v)] for y, v in _sorted(sys.out(x, u))]}
         for x in sys.states for u in sys.inputs if sys.out(x, u)]
    return {"states": [from_label(x) for x in sys.states],
            "inputs": [from_label(u) for u in sys.inputs],
            "internal": [from_label(v) for v in sys.internal],
            "outputs": [from_label(y) for y in sys.outputs],
            "F": F, "H": H, "flags": sorted(sys.flags)}


def load_relation(source) -> BinaryRelation:
    obj = read_json(source)
    try:
        return BinaryRelation((to_label(a), to_label(b)) for a, b in obj["pairs"])
    except (KeyError, TypeError, ValueError):
        raise UsageError("a relation needs a 'pairs' list of [x1, x2] pairs") from None


def dump_relation(R: BinaryRelation) -> dict:
    return {"pairs": [[from_label(a), from_label(b)] for a, b in _sorted(R.pairs)]}


def dump_controller(sc: StaticController) -> dict:
    out = {
        "kind": sc.kind,
        "feasible": sc.feasible,
        "domain": [from_label(x) for x in sc.domain],
        "map": [[from_label(x), [from_label(u) for u in sorted(sc(x), key=sc.inputs.index)]]
                for x in sc.domain],
        "states": [from_label(x) for x in sc.states],
        "inputs": [from_label(u) for u in sc.inputs],
        "objective": {k: (v if not isinstance(v, list) else [from_label(e) for e in v])
                 for k, v in sc.objective.items()},
    }
    if sc.value is not None:
        out["value"] = [[from_label(x), sc.value[x]] for x in sc.domain]
    return out


def load_controller(source) -> StaticController:
    obj = read_json(source)
    try:
        states = _labels(obj, "states")
        inputs = _labels(obj, "inputs")
        table = {to_label(x): frozenset(to_label(u) for u in us) for x, us in obj["map"]}
        domain = tuple(x for x in states if x in table)
        value = {to_label(x): v for x, v in obj["value"]} if "value" in obj else None
        return StaticController(obj.get("kind", "safety"), states, inputs, domain, table,
                                value=value, objective=obj.get("objective", {}))
    except (KeyError, TypeError, ValueError):
        raise UsageError("malformed controller file") from None


def dump_interface(iface, s1: FiniteSystem, s2: FiniteSystem) -> dict:
    """Tabulate a finite interface over the domains of its signature."""
    from .relations import RelationType as T
    nu1, nu2 = iface.signature
    dom = {"z1": iface.Z1, "z1+": iface.Z1, "u2": s2.inputs, "x1": s1.states,
           "x1+": s1.states, "u1": s1.inputs}

    def table(fn, names):
        rows = []
        for args in itertools.product(*(dom[n] for n in names)):
            val = fn(*args)
            if val:
                rows.append([[from_label(a) for a in args], [from_label(v) for v in _sorted(val)]])
        return rows

    Rt = [[[from_label(x1), from_label(z1)], from_label(x2)]
          for x1 in s1.states for z1 in iface.Z1 for x2 in _sorted(iface.image(x1, z1))]
    return {"type": iface.kind.value, "nu1": list(nu1), "nu2": list(nu2),
            "Z1": [from_label(z) for z in iface.Z1],
            "h1": table(iface.h1, nu1), "h2": table(iface.h2, nu2), "Rt": Rt}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return json.dumps(from_label(v), separators=(",", ":"))


def traces_csv(traces) -> str:
    """CSV with one row per step; the flag column is filled on the last step of each run."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "k", "x1", "u1", "z1", "x2", "u2", "blocked_flag"])
    for i, tr in enumerate(traces):
        for k, s in enumerate(tr.steps):
            last = k + 1 == len(tr.steps)
            w.writerow([i, k, _cell(s.x1), _cell(s.u1), _cell(s.z1), _cell(s.x2), _cell(s.u2),
                        tr.status if last else ""])
    return buf.getvalue()
