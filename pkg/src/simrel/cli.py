"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 infeasible synthesis, 4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import random
import sys
from pathlib import Path

import numpy as np

from . import io
from .concretize import (check_shadow, closed_loop_run, concretize, simulate_closed_loop,
                         verify_reproducibility)
from .exceptions import (InfeasibleError, ParameterError, RelationError, SimrelError,
                         UsageError)
from .generators import passing_instances, random_instance
from .grid import GridParams, affine_testbed, construct_abstraction, check_parameters
from .interface import canonical_interface
from .relations import ALL_TYPES, RelationType, classify
from .synthesis import controller_as_system, synthesize_reach, synthesize_safety
from .system import TRUNCATED, label_key

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 2, 3, 4

PRESETS = {"affine1d": 1, "affine2d": 2}

# grid parameters per preset and construction; each satisfies check_parameters
DEFAULTS = {
    "affine1d": {
        "asr": {"eta": 0.5, "eps": 0.25},
        "mcr": {"eta": 0.5, "eps": 0.25},
        "asrbb": {"eta": 0.25, "eps": 0.25},
        "asrb": {"eta": 0.25, "eps": 0.25, "eta2": 0.2, "eps2": 0.1},
    },
    "affine2d": {
        "asr": {"eta": 0.25, "eps": 0.25},
        "mcr": {"eta": 0.25, "eps": 0.25},
        "asrbb": {"eta": 0.125, "eps": 0.25},
        "asrb": {"eta": 0.25, "eps": 0.25, "eta2": 0.125, "eps2": 0.1},
    },
}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _type(args) -> RelationType:
    try:
        return RelationType.parse(args.type)
    except (ValueError, UsageError) as exc:
        raise UsageError(str(exc)) from None


def _verdicts(reports) -> str:
    lines = []
    for t in ALL_TYPES:
        r = reports[t]
        line = f"{t.name}: {'yes' if r.holds else 'no'}"
        if not r.holds and r.counterexample:
            cex = ",".join(str(v) for k, v in r.counterexample.items() if k != "clause")
            line += f" (cex: {cex})"
        lines.append(line)
    return "\n".join(lines) + "\n"


def _report_json(r) -> dict:
    def clean(d):
        if d is None:
            return None
        return {k: io.from_label(v) for k, v in sorted(d.items())}
    return {"holds": r.holds, "witness": clean(r.witness),
            "counterexample": clean(r.counterexample), "detail": r.detail}


# classify / synthesize / concretize / simulate on finite systems ------------

def cmd_classify(args) -> int:
    s1, s2 = io.load_system(args.system1), io.load_system(args.system2)
    R = io.load_relation(args.relation)
    reports = classify(s1, s2, R)
    text = _verdicts(reports)
    sys.stdout.write(text)
    if args.out:
        out = _out_dir(args)
        io.write_json(out / "classify.json", {t.value: _report_json(reports[t]) for t in ALL_TYPES})
        (out / "classify.txt").write_text(text)
    return EXIT_OK if reports[RelationType.ASR].holds else EXIT_VERIFY


def _states_arg(path, s2):
    if path is None:
        return list(s2.states)
    obj = io.read_json(path)
    if not isinstance(obj, list):
        raise UsageError(f"{path}: expected a JSON list of states")
    return [io.to_label(v) for v in obj]


def _synthesize(args, s2):
    if args.target is not None:
        return synthesize_reach(s2, _states_arg(args.target, s2), args.bound)
    return synthesize_safety(s2, _states_arg(args.safe, s2))


def _infeasible(sc, out=None) -> int:
    report = {"kind": sc.kind, "feasible": False, "domain": [], "objective": sc.objective}
    if out is not None:
        io.write_json(out / "controller.json", io.dump_controller(sc))
    sys.stderr.write(f"infeasible: {sc.kind} controller has an empty controllable domain\n")
    sys.stdout.write(io.dumps(report))
    return EXIT_INFEASIBLE


def cmd_synthesize(args) -> int:
    s2 = io.load_system(args.system)
    sc = _synthesize(args, s2)
    out = _out_dir(args) if args.out else None
    if not sc.feasible:
        return _infeasible(sc, out)
    text = io.dumps(io.dump_controller(sc))
    if out is not None:
        (out / "controller.json").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _finite_inputs(args):
    t = _type(args)
    s1, s2 = io.load_system(args.system1), io.load_system(args.system2)
    R = io.load_relation(args.relation)
    sc = io.load_controller(args.controller)
    if not sc.feasible:
        raise InfeasibleError("controller has an empty domain")
    iface = canonical_interface(t, s1, s2, R)
    C2 = controller_as_system(sc)
    return t, s1, s2, R, iface, C2


def cmd_concretize(args) -> int:
    t, s1, s2, R, iface, C2 = _finite_inputs(args)
    C1 = concretize(t, iface, C2, s1)
    summary = {"type": t.value, "static": C1.is_static, "states": len(C1.states),
               "C2_states": len(C2.states), "Z1": len(iface.Z1), "U2": len(C2.outputs)}
    sys.stdout.write(io.dumps(summary))
    if args.out:
        out = _out_dir(args)
        io.write_json(out / "interface.json", io.dump_interface(iface, s1, s2))
        io.write_json(out / "concretized.json", summary)
    return EXIT_OK


def cmd_simulate(args) -> int:
    t, s1, s2, R, iface, C2 = _finite_inputs(args)
    C1 = concretize(t, iface, C2, s1)
    runs = sorted(closed_loop_run(C1, s1, s1.states, args.horizon),
                  key=lambda r: label_key((r.x1, r.x2, r.status)))
    verdict = verify_reproducibility(C1, s1, C2, s2, R, args.horizon)
    result = {"type": t.value, "horizon": args.horizon, "runs": len(runs),
              "reproducibility": "PASS" if verdict.holds else "FAIL", "detail": verdict.detail}
    sys.stdout.write(io.dumps(result))
    if args.out:
        out = _out_dir(args)
        (out / "traces.csv").write_text(io.traces_csv(runs))
        io.write_json(out / "verdict.json", result)
    return EXIT_OK if verdict.holds else EXIT_VERIFY


# grid abstractions on the affine testbed -------------------------------------

def _params(args, t: RelationType) -> GridParams:
    base = dict(DEFAULTS[args.preset].get(t.value, {}))
    for name in ("eta", "eps", "eta2", "eps2"):
        v = getattr(args, name)
        if v is not None:
            base[name] = v
    if "eta" not in base or "eps" not in base:
        raise UsageError("--eta and --eps are required")
    return GridParams(**base)


def _abstraction(args, t):
    if t is RelationType.FRR:
        raise UsageError("no grid construction exists for frr; use asr, mcr, asrbb or asrb")
    dyn, gb = affine_testbed(PRESETS[args.preset])
    gp = _params(args, t)
    report = check_parameters(t, gb, gp, dyn.n)
    if not report.ok:
        raise ParameterError("parameter check failed: "
                             + "; ".join(str(c) for c in report.failed), report.failed)
    return dyn, gb, gp, construct_abstraction(t, dyn, gb, gp)


def _abstraction_json(abst) -> dict:
    obj = io.dump_system(abst.system)
    obj["metadata"] = abst.metadata
    return obj


def _cardinalities_csv(rows, header) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _cell(v):
    return " ".join(repr(c) for c in v)


def cmd_abstract(args) -> int:
    if args.compare:
        return _compare(args)
    t = _type(args)
    _, _, _, abst = _abstraction(args, t)
    s2 = abst.system
    rows = [[_cell(x), _cell(u), len(s2.post(x, u))] for x in s2.states for u in s2.inputs]
    text = io.dumps(_abstraction_json(abst))
    if args.out:
        out = _out_dir(args)
        (out / "abstraction.json").write_text(text)
        (out / "cardinalities.csv").write_text(_cardinalities_csv(rows, ["x2", "u2", "size"]))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _compare(args) -> int:
    """Per-pair |F2| of the ASR and MCR constructions on the same grid."""
    dyn, gb = affine_testbed(PRESETS[args.preset])
    gp = _params(args, RelationType.ASR)
    for t in (RelationType.ASR, RelationType.MCR):
        report = check_parameters(t, gb, gp, dyn.n)
        if not report.ok:
            raise ParameterError("parameter check failed: "
                                 + "; ".join(str(c) for c in report.failed), report.failed)
    asr = construct_abstraction(RelationType.ASR, dyn, gb, gp).system
    mcr = construct_abstraction(RelationType.MCR, dyn, gb, gp).system
    rows, ok = [], True
    for x in asr.states:
        for u in asr.inputs:
            a, m = asr.post(x, u), mcr.post(x, u)
            ok &= a <= m
            rows.append([_cell(x), _cell(u), len(a), len(m)])
    text = _cardinalities_csv(rows, ["x2", "u2", "asr", "mcr"])
    if args.out:
        (_out_dir(args) / "compare.csv").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VERIFY


def _initial_points(rng: random.Random, dyn, count: int):
    lo, hi = np.asarray(dyn.lo, float), np.asarray(dyn.hi, float)
    pts = [tuple(float(v) for v in lo), tuple(float(v) for v in hi)]
    while len(pts) < count:
        pts.append(tuple(rng.uniform(a, b) for a, b in zip(lo, hi)))
    return pts


def cmd_pipeline(args) -> int:
    t = _type(args)
    dyn, gb, gp, abst = _abstraction(args, t)
    out = _out_dir(args)
    io.write_json(out / "abstraction.json", _abstraction_json(abst))
    s2 = abst.system
    sc = synthesize_safety(s2, s2.states)
    if not sc.feasible:
        return _infeasible(sc, out)
    io.write_json(out / "controller.json", io.dump_controller(sc))
    C2 = controller_as_system(sc)
    rng = random.Random(args.seed)

    def post(x1, u1):
        return frozenset((tuple(float(v) for v in dyn.step(x1, u1)),))

    runs, failures = [], []
    for x1_0 in _initial_points(rng, dyn, args.runs):
        run = simulate_closed_loop(t, abst.interface, C2, post, x1_0, args.horizon, rng=rng)
        runs.append(run)
        shadow = check_shadow(run, C2, s2, abst.related)
        if not shadow.holds:
            failures.append({"x1_0": list(x1_0), "detail": shadow.detail})
        elif run.status != TRUNCATED or len(run) != args.horizon:
            failures.append({"x1_0": list(x1_0),
                             "detail": f"run ended {run.status} after {len(run)} steps"})
        elif not all(dyn.in_box(x) for x in run.x1):
            failures.append({"x1_0": list(x1_0), "detail": "concrete state left the safe box"})
    (out / "traces.csv").write_text(io.traces_csv(runs))
    verdict = {"type": t.value, "preset": args.preset, "seed": args.seed, "horizon": args.horizon,
               "runs": len(runs), "domain": len(sc.domain), "abstract_states": len(s2.states),
               "reproducibility": "FAIL" if failures else "PASS", "failures": failures[:10]}
    io.write_json(out / "verdict.json", verdict)
    sys.stdout.write(f"{t.name}: reproducibility {verdict['reproducibility']} "
                     f"({len(runs)} runs, horizon {args.horizon})\n")
    return EXIT_VERIFY if failures else EXIT_OK


def cmd_selftest(args) -> int:
    """Seeded randomized check of the hierarchy and closed-loop reproducibility."""
    rng = random.Random(args.seed)
    problems = []
    for _ in range(args.count):
        inst = random_instance(rng)
        try:
            classify(*inst)
        except SimrelError as exc:
            problems.append(f"classify: {exc}")
    checked = 0
    for t in ALL_TYPES:
        for s1, s2, R in passing_instances(t, max(1, args.count // 50), seed=args.seed):
            sc = synthesize_safety(s2, s2.states)
            if not sc.feasible:
                continue
            C2 = controller_as_system(sc)
            C1 = concretize(t, canonical_interface(t, s1, s2, R), C2, s1)
            if not verify_reproducibility(C1, s1, C2, s2, R, args.horizon).holds:
                problems.append(f"reproducibility fails for {t.name}")
            checked += 1
    status = "FAIL" if problems else "PASS"
    sys.stdout.write(f"selftest {status}: {args.count} classified instances, "
                     f"{checked} closed loops at horizon {args.horizon}\n")
    for p in problems[:10]:
        sys.stdout.write(f"  {p}\n")
    return EXIT_VERIFY if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simrel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, horizon=6):
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--horizon", type=int, default=horizon)

    def grid_opts(sp):
        sp.add_argument("--preset", choices=sorted(PRESETS), default="affine1d")
        sp.add_argument("--type", default="asr", choices=[t.value for t in ALL_TYPES])
        for name in ("eta", "eps", "eta2", "eps2"):
            sp.add_argument(f"--{name}", type=float, default=None)

    def finite(sp):
        sp.add_argument("--type", required=True, choices=[t.value for t in ALL_TYPES])
        sp.add_argument("system1")
        sp.add_argument("system2")
        sp.add_argument("relation")
        sp.add_argument("controller")

    sp = sub.add_parser("classify", help="check all five relation types")
    sp.add_argument("system1")
    sp.add_argument("system2")
    sp.add_argument("relation")
    common(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("abstract", help="grid abstraction of an affine testbed")
    grid_opts(sp)
    sp.add_argument("--compare", action="store_true", help="ASR vs MCR cardinalities")
    common(sp)
    sp.set_defaults(func=cmd_abstract)

    sp = sub.add_parser("synthesize", help="safety or reach controller for a finite system")
    sp.add_argument("system")
    sp.add_argument("--safe", default=None, help="JSON list of safe states (default: all)")
    sp.add_argument("--target", default=None, help="JSON list of target states")
    sp.add_argument("--bound", type=int, default=10)
    common(sp)
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("concretize", help="concretize an abstract controller")
    finite(sp)
    common(sp)
    sp.set_defaults(func=cmd_concretize)

    sp = sub.add_parser("simulate", help="enumerate the concrete closed loop and verify it")
    finite(sp)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("pipeline", help="abstract, synthesize, concretize and verify")
    grid_opts(sp)
    sp.add_argument("--runs", type=int, default=50, help="simulated initial states")
    common(sp, horizon=20)
    sp.set_defaults(func=cmd_pipeline, out="pipeline-out")

    sp = sub.add_parser("selftest", help="randomized consistency checks")
    sp.add_argument("--count", type=int, default=500)
    common(sp)
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "horizon", 1) < 1:
        parser.error("--horizon must be at least 1")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (UsageError, ParameterError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except RelationError as exc:
        sys.stderr.write(f"relation check failed: {exc}\n")
        return EXIT_VERIFY
    except SimrelError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
