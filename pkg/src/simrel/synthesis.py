"""Static abstract controllers for safety and reachability on finite systems."""
from __future__ import annotations

from dataclasses import dataclass, field

from .exceptions import InfeasibleError, UsageError
from .system import EMPTY, FiniteSystem, GeneralSystem


@dataclass(frozen=True)
class StaticController:
    """Set-valued state feedback x2 -> {u2} over a domain D.

    ``feasible`` is False when D is empty; such a controller is a result, not an
    error, but it cannot be turned into a system.
    """
    kind: str
    states: tuple
    inputs: tuple
    domain: tuple
    table: dict
    value: dict | None = None
    objective: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return bool(self.domain)

    def __call__(self, x2) -> frozenset:
        return self.table.get(x2, EMPTY)


def _check_subset(s2: FiniteSystem, xs, what):
    known = set(s2.states)
    for x in xs:
        if x not in known:
            raise UsageError(f"{what} contains unknown state {x!r}")


def synthesize_safety(s2: FiniteSystem, safe) -> StaticController:
    """Maximal controlled-invariant subset of ``safe`` and its permissive controller."""
    safe = set(safe)
    _check_subset(s2, safe, "safe set")
    D = {x for x in s2.states if x in safe}
    while True:
        keep = {x for x in D
                if any(s2.post(x, u) <= D for u in s2.available_inputs(x))}
        if keep == D:
            break
        D = keep
    domain = tuple(x for x in s2.states if x in D)
    table = {x: frozenset(u for u in s2.available_inputs(x) if s2.post(x, u) <= D)
             for x in domain}
    return StaticController("safety", s2.states, s2.inputs, domain, table,
                            objective={"safe": [x for x in s2.states if x in safe]})


def synthesize_reach(s2: FiniteSystem, target, bound: int) -> StaticController:
    """Worst-case reachability of ``target`` within ``bound`` steps.

    The value of a state is the number of steps the controller needs against
    every resolution of nondeterminism. Outside the target, an input is kept
    when all its successors have strictly smaller value. Target states keep
    every available input.
    """
    if bound < 0:
        raise UsageError("reach bound must be nonnegative")
    target = set(target)
    _check_subset(s2, target, "target set")
    value = {x: 0 for x in s2.states if x in target}
    for k in range(1, bound + 1):
        new = {}
        for x in s2.states:
            if x in value:
                continue
            for u in s2.available_inputs(x):
                if all(y in value for y in s2.post(x, u)):
                    new[x] = k
                    break
        if not new:
            break
        value.update(new)
    domain = tuple(x for x in s2.states if x in value)
    table = {}
    for x in domain:
        if value[x] == 0:
            table[x] = frozenset(s2.available_inputs(x))
        else:
            table[x] = frozenset(
                u for u in s2.available_inputs(x)
                if all(value.get(y, bound + 1) < value[x] for y in s2.post(x, u)))
    return StaticController("reach", s2.states, s2.inputs, domain, table, value=value,
                            objective={"target": [x for x in s2.states if x in target],
                                  "bound": bound})


def controller_as_system(sc: StaticController) -> GeneralSystem:
    """Static system with H(0, x2) = map(x2) × {0}; inputs are all abstract states."""
    if not sc.feasible:
        raise InfeasibleError(f"{sc.kind} controller has an empty domain")
    H = {(0, x): {(u, 0) for u in sc(x)} for x in sc.domain}
    return GeneralSystem((0,), sc.states, (0,), sc.inputs, {(0, 0): {0}}, H,
                         flags=("static",))
