"""Enumerated systems: simple and general systems, composition, behaviors.

Every system carries its label sets as ordered tuples; the tuple order is the
index order used for lexicographic tie-breaks. Transition and output maps are
stored sparsely: a missing key means the empty set.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Hashable, Iterable, Iterator, Mapping

from .exceptions import ComposabilityError, UsageError

EMPTY: frozenset = frozenset()

BLOCKED = "blocked"
STALLED = "stalled"
TRUNCATED = "truncated"
FLAGS = (BLOCKED, STALLED, TRUNCATED)


def label_key(x):
    """Total sort key over the label types used here (numbers, strings, tuples)."""
    if isinstance(x, tuple):
        return (2, tuple(label_key(e) for e in x))
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return (0, x, "")
    return (1, 0, str(x))


def _index(labels, what):
    idx = {}
    for i, lab in enumerate(labels):
        if lab in idx:
            raise UsageError(f"duplicate {what} label {lab!r}")
        idx[lab] = i
    return idx


def _check(label, idx, what):
    if label not in idx:
        raise UsageError(f"unknown {what} {label!r}")


class FiniteSystem:
    """Simple system (X, U, F) with a set-valued, possibly empty, transition map.

    ``trans`` maps ``(x, u)`` to an iterable of successor labels. Pairs not
    listed (or listed with an empty iterable) have no successors, which makes
    ``u`` unavailable at ``x``.
    """

    def __init__(self, states: Iterable[Hashable], inputs: Iterable[Hashable],
                 trans: Mapping | None = None):
        self.states = tuple(states)
        self.inputs = tuple(inputs)
        self._sidx = _index(self.states, "state")
        self._uidx = _index(self.inputs, "input")
        frozen = {}
        for (x, u), succ in (trans or {}).items():
            _check(x, self._sidx, "state")
            _check(u, self._uidx, "input")
            succ = frozenset(succ)
            for s in succ:
                _check(s, self._sidx, "state")
            if succ:
                frozen[(x, u)] = succ
        self.trans = MappingProxyType(frozen)
        self._avail = {}

    def state_index(self, x) -> int:
        _check(x, self._sidx, "state")
        return self._sidx[x]

    def input_index(self, u) -> int:
        _check(u, self._uidx, "input")
        return self._uidx[u]

    def has_input(self, u) -> bool:
        return u in self._uidx

    def post(self, x, u) -> frozenset:
        return self.trans.get((x, u), EMPTY)

    def available_inputs(self, x) -> tuple:
        """Inputs u with F(x, u) nonempty, in input order."""
        if x not in self._avail:
            _check(x, self._sidx, "state")
            self._avail[x] = tuple(u for u in self.inputs if (x, u) in self.trans)
        return self._avail[x]

    def is_deterministic(self) -> bool:
        return all(len(s) <= 1 for s in self.trans.values())

    def as_general(self) -> "GeneralSystem":
        """The sextuple (X, U, U, X, F, identity)."""
        H = {(x, u): ((x, u),) for x in self.states for u in self.inputs}
        return GeneralSystem(self.states, self.inputs, self.inputs, self.states,
                             self.trans, H, flags=("simple",))

    def __eq__(self, other):
        if not isinstance(other, FiniteSystem):
            return NotImplemented
        return (self.states == other.states and self.inputs == other.inputs
                and dict(self.trans) == dict(other.trans))

    def __hash__(self):
        return hash((self.states, self.inputs, frozenset(self.trans.items())))

    def __repr__(self):
        return (f"FiniteSystem(|X|={len(self.states)}, |U|={len(self.inputs)}, "
                f"transitions={sum(map(len, self.trans.values()))})")


class GeneralSystem:
    """System (X, U, V, Y, F, H) with F: X×V -> 2^X and H: X×U -> 2^(Y×V)."""

    def __init__(self, states, inputs, internal, outputs, F: Mapping, H: Mapping,
                 flags: Iterable[str] = (), validate: bool = True):
        self.states = tuple(states)
        self.inputs = tuple(inputs)
        self.internal = tuple(internal)
        self.outputs = tuple(outputs)
        sidx = _index(self.states, "state")
        uidx = _index(self.inputs, "input")
        vidx = _index(self.internal, "internal")
        yidx = _index(self.outputs, "output")
        self._yset = frozenset(yidx)
        Fz, Hz = {}, {}
        for (x, v), succ in F.items():
            succ = frozenset(succ)
            if validate:
                _check(x, sidx, "state")
                _check(v, vidx, "internal")
                for s in succ:
                    _check(s, sidx, "state")
            if succ:
                Fz[(x, v)] = succ
        for (x, u), yv in H.items():
            yv = frozenset(yv)
            if validate:
                _check(x, sidx, "state")
                _check(u, uidx, "input")
                for y, v in yv:
                    _check(y, yidx, "output")
                    _check(v, vidx, "internal")
            if yv:
                Hz[(x, u)] = yv
        self.F = MappingProxyType(Fz)
        self.H = MappingProxyType(Hz)
        self.flags = frozenset(flags)
        if validate:
            if "static" in self.flags and not self.is_static:
                raise UsageError("system flagged static is not static")
            if "autonomous" in self.flags and not self.is_autonomous:
                raise UsageError("system flagged autonomous has more than one input")
            if "simple" in self.flags and not self.is_simple:
                raise UsageError("system flagged simple is not simple")

    def post(self, x, v) -> frozenset:
        return self.F.get((x, v), EMPTY)

    def out(self, x, u) -> frozenset:
        return self.H.get((x, u), EMPTY)

    def output_labels(self, x) -> frozenset:
        """H'(x): every y emitted at x for some input."""
        return frozenset(y for u in self.inputs for y, _ in self.out(x, u))

    @property
    def is_static(self) -> bool:
        if len(self.states) != 1 or len(self.internal) != 1:
            return False
        x, v = self.states[0], self.internal[0]
        return self.post(x, v) == {x}

    @property
    def is_autonomous(self) -> bool:
        return len(self.inputs) == 1

    @property
    def is_simple(self) -> bool:
        if set(self.internal) != set(self.inputs) or set(self.outputs) != set(self.states):
            return False
        return all(self.out(x, u) == {(x, u)} for x in self.states for u in self.inputs)

    def __eq__(self, other):
        if not isinstance(other, GeneralSystem):
            return NotImplemented
        return (self.states == other.states and self.inputs == other.inputs
                and self.internal == other.internal and self.outputs == other.outputs
                and dict(self.F) == dict(other.F) and dict(self.H) == dict(other.H))

    def __hash__(self):
        return hash((self.states, self.inputs, self.internal, self.outputs))

    def __repr__(self):
        return (f"GeneralSystem(|X|={len(self.states)}, |U|={len(self.inputs)}, "
                f"|V|={len(self.internal)}, |Y|={len(self.outputs)})")


def as_general(sys) -> GeneralSystem:
    return sys.as_general() if isinstance(sys, FiniteSystem) else sys


def static_map(table: Mapping, inputs, outputs) -> GeneralSystem:
    """Static system realizing the set-valued map ``u -> table[u]``.

    Used for quantizers (a relation read as a map) and static controllers.
    """
    H = {(0, u): {(y, 0) for y in table.get(u, ())} for u in inputs}
    return GeneralSystem((0,), inputs, (0,), outputs, {(0, 0): {0}}, H, flags=("static",))


def serial_compose(s1, s2) -> GeneralSystem:
    """S2 ∘ S1: feed the outputs of ``s1`` into ``s2``."""
    s1, s2 = as_general(s1), as_general(s2)
    u2 = set(s2.inputs)
    for y in s1.outputs:
        if y not in u2:
            raise ComposabilityError(f"output {y!r} of the first system is not an input "
                                     "of the second", clause="Y1⊆U2", label=y)
    states = tuple(itertools.product(s1.states, s2.states))
    internal = tuple(itertools.product(s1.internal, s2.internal))
    F = {}
    for (x1, v1), a in s1.F.items():
        for (x2, v2), b in s2.F.items():
            F[((x1, x2), (v1, v2))] = itertools.product(a, b)
    H = {}
    for x1, x2 in states:
        for u1 in s1.inputs:
            yv = {(y2, (v1, v2)) for y1, v1 in s1.out(x1, u1) for y2, v2 in s2.out(x2, y1)}
            if yv:
                H[((x1, x2), u1)] = yv
    return GeneralSystem(states, s1.inputs, internal, s2.outputs, F, H, validate=False)


@dataclass(frozen=True)
class Composability:
    ok: bool
    clause: str | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def feedback_composable(ctrl, plant) -> Composability:
    """Check that ``ctrl`` is feedback composable with ``plant``.

    Clauses are checked in order Y2⊆U1, Y1⊆U2, (i), (ii); the first failing
    one is named in the result.
    """
    ctrl, plant = as_general(ctrl), as_general(plant)
    u1, u2 = set(ctrl.inputs), set(plant.inputs)
    for y in plant.outputs:
        if y not in u1:
            return Composability(False, "Y2⊆U1", f"plant output {y!r} is not a controller input")
    for y in ctrl.outputs:
        if y not in u2:
            return Composability(False, "Y1⊆U2", f"controller output {y!r} is not a plant input")
    if set(plant.internal) != u2:
        return Composability(False, "(i)", "plant internal variables differ from its inputs")
    for x2 in plant.states:
        ref = None
        for u in plant.inputs:
            yv = plant.out(x2, u)
            if any(v != u for _, v in yv):
                return Composability(False, "(i)", f"H({x2!r}, {u!r}) does not pass the input through")
            ys = frozenset(y for y, _ in yv)
            if ref is None:
                ref = ys
            elif ys != ref:
                return Composability(False, "(i)", f"plant output at {x2!r} depends on the input")
    for x1 in ctrl.states:
        for x2 in plant.states:
            for y2 in sorted(plant.output_labels(x2), key=plant.outputs.index):
                for y1, v1 in ctrl.out(x1, y2):
                    if (y2, y1) not in plant.out(x2, y1):
                        continue
                    if not plant.post(x2, y1) and ctrl.post(x1, v1):
                        return Composability(
                            False, "(ii)",
                            f"plant blocks at ({x2!r}, {y1!r}) but controller state {x1!r} moves")
    return Composability(True)


def feedback_compose(ctrl, plant, check: bool = True) -> GeneralSystem:
    """Closed loop ``ctrl × plant``; autonomous, with outputs (y_ctrl, y_plant).

    ``check=False`` skips the composability test; the product is then only an
    observation device (used to expose what a broken controller would do).
    """
    ctrl, plant = as_general(ctrl), as_general(plant)
    fc = feedback_composable(ctrl, plant) if check else Composability(True)
    if not fc:
        raise ComposabilityError(f"not feedback composable: clause {fc.clause}: {fc.detail}",
                                 clause=fc.clause)
    states = tuple(itertools.product(ctrl.states, plant.states))
    internal = tuple(itertools.product(ctrl.internal, plant.internal))
    outputs = tuple(itertools.product(ctrl.outputs, plant.outputs))
    F = {}
    for (x1, v1), a in ctrl.F.items():
        for (x2, v2), b in plant.F.items():
            F[((x1, x2), (v1, v2))] = itertools.product(a, b)
    H = {}
    for x1, x2 in states:
        yv = set()
        for y2 in plant.output_labels(x2):
            for y1, v1 in ctrl.out(x1, y2):
                for y2b, v2 in plant.out(x2, y1):
                    if y2b == y2:
                        yv.add(((y1, y2), (v1, v2)))
        if yv:
            H[((x1, x2), 0)] = yv
    return GeneralSystem(states, (0,), internal, outputs, F, H,
                         flags=("autonomous",), validate=False)


@dataclass(frozen=True)
class Trajectory:
    """Aligned input, internal, state and output sequences of one run."""
    u: tuple
    v: tuple
    x: tuple
    y: tuple

    def __len__(self):
        return len(self.x)


def is_trajectory(sys, traj: Trajectory) -> bool:
    sys = as_general(sys)
    n = len(traj.x)
    if not (len(traj.u) == len(traj.v) == len(traj.y) == n):
        return False
    for k in range(n):
        if (traj.y[k], traj.v[k]) not in sys.out(traj.x[k], traj.u[k]):
            return False
        if k + 1 < n and traj.x[k + 1] not in sys.post(traj.x[k], traj.v[k]):
            return False
    return True


@dataclass(frozen=True)
class BehaviorSet:
    """Output traces up to a horizon, each tagged with how it ended.

    ``blocked``: the final transition set is empty (a maximal finite trace).
    ``stalled``: the run moved to a state where no output is possible.
    ``truncated``: the run reached the horizon and may continue.
    """
    horizon: int
    traces: frozenset

    def __iter__(self) -> Iterator:
        return iter(self.traces)

    def __len__(self):
        return len(self.traces)

    def __contains__(self, item):
        return item in self.traces

    def with_flag(self, flag) -> frozenset:
        return frozenset(t for t, f in self.traces if f == flag)

    def project(self, component: int) -> "BehaviorSet":
        """Keep one component of tuple-valued outputs (the π projection)."""
        return BehaviorSet(self.horizon, project(self.traces, component))


def project(traces, component: int) -> frozenset:
    return frozenset((tuple(y[component] for y in t), f) for t, f in traces)


def behavior(sys, x0=None, horizon: int = 1, observe=None) -> BehaviorSet:
    """Enumerate every output trace of ``sys`` started in ``x0``, up to ``horizon``.

    ``observe`` maps each output before it is recorded (e.g. a projection);
    runs with equal observations are merged during enumeration.
    """
    if horizon < 1:
        raise UsageError("horizon must be at least 1")
    sys = as_general(sys)
    x0 = sys.states if x0 is None else tuple(x0)
    known = set(sys.states)
    for x in x0:
        if x not in known:
            raise UsageError(f"unknown initial state {x!r}")
    live_cache = {}

    def live(x):
        if x not in live_cache:
            live_cache[x] = any(sys.out(x, u) for u in sys.inputs)
        return live_cache[x]

    frontier = {((), x) for x in x0 if live(x)}
    traces = set()
    for k in range(horizon):
        nxt = set()
        for prefix, x in frontier:
            for u in sys.inputs:
                for y, v in sys.out(x, u):
                    p = prefix + ((y if observe is None else observe(y)),)
                    succ = sys.post(x, v)
                    if not succ:
                        traces.add((p, BLOCKED))
                    elif k + 1 == horizon:
                        traces.add((p, TRUNCATED))
                    else:
                        for xn in succ:
                            if live(xn):
                                nxt.add((p, xn))
                            else:
                                traces.add((p, STALLED))
        frontier = nxt
    return BehaviorSet(horizon, frozenset(traces))
