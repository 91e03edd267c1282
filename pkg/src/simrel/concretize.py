"""Concretized controllers, closed-loop enumeration and the reproducibility check.

The concretized controller of each type wraps C~1 = C2 ∘ Rt (the abstract
controller fed by the quantizer Rt) with the interface maps h1 and h2. Its
memory differs by type:

    asr          (x_C~, z1-, u2-)   corrective: z1 is fixed after seeing x1
    asrb, asrbb  (x_C~, z1)         predictive: z1+ is fixed before the step
    mcr, frr     x_C~               memoryless
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .exceptions import UsageError
from .interface import InterfaceSpec, chain
from .relations import BinaryRelation, CheckReport, RelationType
from .system import (BLOCKED, STALLED, TRUNCATED, EMPTY, FiniteSystem, GeneralSystem,
                     as_general, behavior, feedback_compose, label_key, serial_compose,
                     static_map)

_T = RelationType


@dataclass(frozen=True)
class ConcretizedController:
    type: RelationType
    system: GeneralSystem
    iface: InterfaceSpec
    C2: GeneralSystem
    Ct: GeneralSystem

    @property
    def states(self):
        return self.system.states

    @property
    def is_static(self) -> bool:
        return self.system.is_static


def quantizer(iface: InterfaceSpec, s1: FiniteSystem, outputs) -> GeneralSystem:
    """Static system mapping (x1, z1) to the abstract states Rt((x1, z1))."""
    keep = set(outputs)
    pairs = tuple(itertools.product(s1.states, iface.Z1))
    table = {p: [x for x in iface.image(*p) if x in keep] for p in pairs}
    return static_map(table, pairs, tuple(outputs))


def relation_quantizer(R: BinaryRelation, s1: FiniteSystem, outputs) -> GeneralSystem:
    """Static system realizing x1 -> R(x1)."""
    keep = set(outputs)
    table = {x: [y for y in R.image(x) if y in keep] for x in s1.states}
    return static_map(table, s1.states, tuple(outputs))


def concretize(t, iface: InterfaceSpec, C2, s1: FiniteSystem) -> ConcretizedController:
    """Build C1^T from the interface and an abstract controller ``C2``."""
    t = RelationType.parse(t)
    if t is not iface.kind:
        raise UsageError(f"interface is of type {iface.kind.name}, not {t.name}")
    C2 = as_general(C2)
    Ct = serial_compose(quantizer(iface, s1, C2.inputs), C2)
    h1, h2 = iface.h1, iface.h2
    Z1, U2 = iface.Z1, tuple(C2.outputs)
    Hc = Ct.out
    F, H = {}, {}
    if t is _T.ASR:
        states = tuple(itertools.product(Ct.states, Z1, U2))
        internal = tuple(itertools.product(Ct.internal, Z1, U2))
        for (xc, vc), succ in Ct.F.items():
            for zm, um in itertools.product(Z1, U2):
                for z, u in itertools.product(Z1, U2):
                    F[((xc, zm, um), (vc, z, u))] = [(xn, z, u) for xn in succ]
        for (xc, zm, um) in states:
            for x1 in s1.states:
                H[((xc, zm, um), x1)] = {
                    (u1, (vc, z, u2))
                    for z in h2(zm, um, x1)
                    for u2, vc in Hc(xc, (x1, z))
                    for u1 in h1(z, u2, x1)}
    elif t in (_T.ASRB, _T.ASRBB):
        states = tuple(itertools.product(Ct.states, Z1))
        internal = tuple(itertools.product(Ct.internal, Z1))
        for (xc, vc), succ in Ct.F.items():
            for z in Z1:
                for zp in Z1:
                    F[((xc, z), (vc, zp))] = [(xn, zp) for xn in succ]
        for xc, z in states:
            for x1 in s1.states:
                out = set()
                for u2, vc in Hc(xc, (x1, z)):
                    if t is _T.ASRB:
                        out.update((u1, (vc, zp)) for u1 in h1(z, u2, x1)
                                   for zp in h2(z, u2, x1, u1))
                    else:
                        out.update((u1, (vc, zp)) for zp in h2(z, u2)
                                   for u1 in h1(z, u2, x1, zp))
                H[((xc, z), x1)] = out
    else:
        states, internal = Ct.states, Ct.internal
        F = dict(Ct.F)
        for xc in states:
            for x1 in s1.states:
                H[(xc, x1)] = {
                    (u1, vc)
                    for z in h2(x1)
                    for u2, vc in Hc(xc, (x1, z))
                    for u1 in (h1(u2) if t is _T.FRR else h1(z, u2, x1))}
    flags = ("static",) if len(states) == 1 and len(internal) == 1 and F else ()
    system = GeneralSystem(states, s1.states, internal, s1.inputs, F, H, validate=False,
                           flags=flags)
    return ConcretizedController(t, system, iface, C2, Ct)


@dataclass(frozen=True)
class Step:
    x1: object
    z1: object
    x2: object
    xc: object
    u2: object
    vc: object
    u1: object


@dataclass(frozen=True)
class ClosedLoopTrace:
    """One run of the concrete closed loop with every interface variable exposed."""
    steps: tuple
    status: str

    @property
    def x1(self) -> tuple:
        return tuple(s.x1 for s in self.steps)

    @property
    def x2(self) -> tuple:
        return tuple(s.x2 for s in self.steps)

    def __len__(self):
        return len(self.steps)


def _decisions(t, iface, C2, xc, x1, z1, x2):
    """Admissible (u2, vc, u1, fixed z1+ or None) at one configuration."""
    h1, h2 = iface.h1, iface.h2
    out = []
    for u2, vc in sorted(C2.out(xc, x2), key=label_key):
        if t is _T.ASRBB:
            for zp in sorted(h2(z1, u2), key=label_key):
                out.extend((u2, vc, u1, (zp,)) for u1 in sorted(h1(z1, u2, x1, zp), key=label_key))
        elif t is _T.ASRB:
            for u1 in sorted(h1(z1, u2, x1), key=label_key):
                zs = h2(z1, u2, x1, u1)
                if zs:
                    out.append((u2, vc, u1, tuple(sorted(zs, key=label_key))))
        else:
            u1s = h1(u2) if t is _T.FRR else h1(z1, u2, x1)
            out.extend((u2, vc, u1, None) for u1 in sorted(u1s, key=label_key))
    return out


def _next_z(t, iface, z1, u2, x1p, fixed):
    if fixed is not None:
        return fixed
    zs = iface.h2(z1, u2, x1p) if t is _T.ASR else iface.h2(x1p)
    return tuple(sorted(zs, key=label_key))


def closed_loop_run(C1: ConcretizedController, s1: FiniteSystem, x1_0, horizon: int) -> set:
    """Enumerate every closed-loop run of C1 with ``s1`` up to ``horizon`` steps.

    Each step follows the type's evaluation order. A run ends ``blocked`` when
    the plant or the controller has no successor, ``stalled`` when the next
    configuration admits no decision, and ``truncated`` at the horizon.
    """
    if horizon < 1:
        raise UsageError("horizon must be at least 1")
    t, iface, C2 = C1.type, C1.iface, C1.C2
    live_cache = {}

    def live(cfg):
        if cfg not in live_cache:
            live_cache[cfg] = bool(_decisions(t, iface, C2, *cfg))
        return live_cache[cfg]

    frontier = []
    for x1 in x1_0:
        for z1 in iface.Z1:
            for x2 in sorted(iface.image(x1, z1), key=label_key):
                for xc in C2.states:
                    if live((xc, x1, z1, x2)):
                        frontier.append(((), (xc, x1, z1, x2)))
    runs = set()
    for k in range(horizon):
        nxt = []
        for prefix, (xc, x1, z1, x2) in frontier:
            for u2, vc, u1, fixed in _decisions(t, iface, C2, xc, x1, z1, x2):
                path = prefix + (Step(x1, z1, x2, xc, u2, vc, u1),)
                succ1 = s1.post(x1, u1)
                succc = C2.post(xc, vc)
                if not succ1 or not succc:
                    runs.add(ClosedLoopTrace(path, BLOCKED))
                    continue
                if k + 1 == horizon:
                    runs.add(ClosedLoopTrace(path, TRUNCATED))
                    continue
                for x1p in sorted(succ1, key=label_key):
                    for xcp in sorted(succc, key=label_key):
                        cfgs = [(xcp, x1p, zp, x2p)
                                for zp in _next_z(t, iface, z1, u2, x1p, fixed)
                                for x2p in sorted(iface.image(x1p, zp), key=label_key)]
                        alive = [c for c in cfgs if live(c)]
                        # a controller state is shared by all configurations that
                        # differ only in what the controller recomputes from x1
                        groups = {}
                        for c in cfgs:
                            groups.setdefault(_memory(t, c, z1, u2), []).append(c)
                        for mem, members in groups.items():
                            if not any(live(c) for c in members):
                                runs.add(ClosedLoopTrace(path, STALLED))
                        if not cfgs:
                            runs.add(ClosedLoopTrace(path, STALLED))
                        nxt.extend((path, c) for c in alive)
        frontier = nxt
    return runs


def _memory(t, cfg, z1, u2):
    xc, _, zp, _ = cfg
    if t is _T.ASR:
        return (xc, z1, u2)
    if t in (_T.ASRB, _T.ASRBB):
        return (xc, zp)
    return xc


def closed_loop_behavior(C1, s1: FiniteSystem, x1_0=None, horizon: int = 1):
    """x1-projected behavior of the feedback composition C1 × S1."""
    system = C1.system if isinstance(C1, ConcretizedController) else as_general(C1)
    x1_0 = s1.states if x1_0 is None else tuple(x1_0)
    loop = feedback_compose(system, s1, check=False)
    x0 = tuple(itertools.product(system.states, x1_0))
    return behavior(loop, x0, horizon, observe=_second)


def _second(y):
    return y[1]


def abstract_behavior(C2, s2: FiniteSystem, horizon: int):
    C2 = as_general(C2)
    loop = feedback_compose(C2, s2)
    return behavior(loop, tuple(itertools.product(C2.states, s2.states)), horizon,
                    observe=_second)


class _Trie:
    __slots__ = ("children", "ends")

    def __init__(self):
        self.children = {}
        self.ends = set()

    def add(self, trace, flag):
        node = self
        for y in trace:
            node = node.children.setdefault(y, _Trie())
        node.ends.add(flag)


def _related_match(trie: _Trie, t1, flag, R: BinaryRelation) -> bool:
    stack = [(trie, 0)]
    seen = set()
    while stack:
        node, k = stack.pop()
        if k == len(t1):
            if flag in node.ends:
                return True
            continue
        for x2 in R.image(t1[k]):
            child = node.children.get(x2)
            if child is not None and (id(child), k + 1) not in seen:
                seen.add((id(child), k + 1))
                stack.append((child, k + 1))
    return False


def verify_reproducibility(C1, s1: FiniteSystem, C2, s2: FiniteSystem, R, horizon: int,
                           x1_0=None, every_horizon: bool = False) -> CheckReport:
    """Check B(C1 × S1) ⊆ R^-1(B(C2 × S2)) on traces up to ``horizon``.

    Every concrete x1-trace must have an abstract x2-trace of the same length
    and end status with x2(k) ∈ R(x1(k)) at every step. With
    ``every_horizon`` the check is repeated for each horizon 1..horizon.
    """
    if horizon < 1:
        raise UsageError("horizon must be at least 1")
    R = R if isinstance(R, BinaryRelation) else BinaryRelation(R)
    horizons = range(1, horizon + 1) if every_horizon else (horizon,)
    checked = 0
    for h in horizons:
        concrete = closed_loop_behavior(C1, s1, x1_0, h)
        trie = _Trie()
        for t2, flag in abstract_behavior(C2, s2, h):
            trie.add(t2, flag)
        bad = [(t1, flag) for t1, flag in concrete if not _related_match(trie, t1, flag, R)]
        if bad:
            t1, flag = min(bad, key=label_key)
            return CheckReport(False, counterexample={"horizon": h, "trace": t1, "status": flag},
                               detail=f"no related abstract trace for {flag} run {t1!r}")
        checked += len(concrete)
    return CheckReport(True, witness={"traces": checked, "horizon": horizon})


def simulate_closed_loop(C1_type, iface: InterfaceSpec, C2, post, x1_0, horizon: int,
                         rng: random.Random | None = None) -> ClosedLoopTrace:
    """Simulate one closed-loop run against an opaque successor map ``post``.

    Choices among admissible values are made by ``rng`` when given, otherwise
    the smallest label is taken, so runs are reproducible.
    """
    t = RelationType.parse(C1_type)
    C2 = as_general(C2)

    def pick(options):
        options = sorted(options, key=label_key)
        if not options:
            return None
        return rng.choice(options) if rng is not None else options[0]

    # the initial shadow is free; only configurations the controller can act on are kept
    starts = [(xc, z, x2) for xc in C2.states for z in iface.Z1 for x2 in iface.image(x1_0, z)
              if _decisions(t, iface, C2, xc, x1_0, z, x2)]
    if not starts:
        return ClosedLoopTrace((), STALLED)
    xc, z1, x2 = pick(starts)
    x1 = x1_0
    steps = []
    for k in range(horizon):
        dec = _decisions(t, iface, C2, xc, x1, z1, x2)
        if not dec:
            return ClosedLoopTrace(tuple(steps), STALLED)
        u2, vc, u1, fixed = pick(dec) if rng is not None else dec[0]
        steps.append(Step(x1, z1, x2, xc, u2, vc, u1))
        succ1 = post(x1, u1)
        succc = C2.post(xc, vc)
        if not succ1 or not succc:
            return ClosedLoopTrace(tuple(steps), BLOCKED)
        if k + 1 == horizon:
            break
        x1p = pick(succ1)
        zp = pick(_next_z(t, iface, z1, u2, x1p, fixed))
        if zp is None:
            return ClosedLoopTrace(tuple(steps), STALLED)
        x2p = pick(iface.image(x1p, zp))
        if x2p is None:
            return ClosedLoopTrace(tuple(steps), STALLED)
        x1, z1, x2, xc = x1p, zp, x2p, pick(succc)
    return ClosedLoopTrace(tuple(steps), TRUNCATED)


def check_shadow(trace: ClosedLoopTrace, C2, s2: FiniteSystem, related) -> CheckReport:
    """Check a simulated run against the abstract closed loop step by step.

    ``related(x1, x2)`` decides membership in R. The abstract shadow must be
    a run of C2 × S2 and stay related to the concrete states.
    """
    C2 = as_general(C2)
    steps = trace.steps
    for k, s in enumerate(steps):
        if not related(s.x1, s.x2):
            return CheckReport(False, counterexample={"k": k, "x1": s.x1, "x2": s.x2},
                               detail=f"step {k}: concrete state not related to x2={s.x2!r}")
        if (s.u2, s.vc) not in C2.out(s.xc, s.x2):
            return CheckReport(False, counterexample={"k": k, "x2": s.x2, "u2": s.u2},
                               detail=f"step {k}: u2={s.u2!r} not issued by the abstract controller")
        if k + 1 < len(steps):
            nxt = steps[k + 1]
            if nxt.x2 not in s2.post(s.x2, s.u2):
                return CheckReport(False, counterexample={"k": k, "x2": s.x2, "u2": s.u2,
                                                          "x2+": nxt.x2},
                                   detail=f"step {k}: x2+={nxt.x2!r} not in F2({s.x2!r}, {s.u2!r})")
    return CheckReport(True, witness={"steps": len(steps)})
