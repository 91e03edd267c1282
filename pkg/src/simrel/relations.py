"""Exhaustive checkers for the five simulation relation types.

All checkers evaluate the defining quantifier formula literally. Loops run in
index order, so the first violation found is the lexicographically first one
over (x1, x2, u2) (or (x2, u2) for ASRBB, whose outer quantifier is over x2).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .exceptions import InvariantViolation, UsageError
from .system import EMPTY, FiniteSystem


class BinaryRelation:
    """Finite relation R ⊆ X1 × X2 with cached forward and inverse images."""

    def __init__(self, pairs: Iterable = ()):
        self.pairs = frozenset((a, b) for a, b in pairs)
        fwd, inv = {}, {}
        for a, b in self.pairs:
            fwd.setdefault(a, set()).add(b)
            inv.setdefault(b, set()).add(a)
        self._fwd = {k: frozenset(v) for k, v in fwd.items()}
        self._inv = {k: frozenset(v) for k, v in inv.items()}

    def image(self, x1) -> frozenset:
        return self._fwd.get(x1, EMPTY)

    def preimage(self, x2) -> frozenset:
        return self._inv.get(x2, EMPTY)

    __call__ = image

    def image_of(self, xs) -> frozenset:
        out = set()
        for x in xs:
            out |= self.image(x)
        return frozenset(out)

    def inverse(self) -> "BinaryRelation":
        return BinaryRelation((b, a) for a, b in self.pairs)

    def is_strict(self, states1) -> bool:
        return all(self.image(x) for x in states1)

    def is_deterministic(self) -> bool:
        return all(len(v) <= 1 for v in self._fwd.values())

    def __contains__(self, pair):
        return pair in self.pairs

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __eq__(self, other):
        return isinstance(other, BinaryRelation) and self.pairs == other.pairs

    def __hash__(self):
        return hash(self.pairs)

    def __repr__(self):
        return f"BinaryRelation({len(self.pairs)} pairs)"


class RelationType(str, enum.Enum):
    ASR = "asr"
    ASRB = "asrb"
    ASRBB = "asrbb"
    MCR = "mcr"
    FRR = "frr"

    @classmethod
    def parse(cls, value) -> "RelationType":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise UsageError(f"unknown relation type {value!r}") from None


ALL_TYPES = (RelationType.ASR, RelationType.ASRB, RelationType.ASRBB,
             RelationType.MCR, RelationType.FRR)


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one relation check.

    ``witness`` holds the existential choices for the first quantified
    instance (empty dict when the universal quantifier is vacuous), and
    ``counterexample`` the first violated instance. Exactly one is set.
    """
    holds: bool
    witness: dict | None = None
    counterexample: dict | None = None
    detail: str = ""

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class ExtendedRelation:
    type: RelationType
    tuples: frozenset = field(default_factory=frozenset)

    def __contains__(self, t):
        return t in self.tuples

    def __len__(self):
        return len(self.tuples)


class _Ctx:
    """Shared lookups for one (s1, s2, R) triple."""

    def __init__(self, s1: FiniteSystem, s2: FiniteSystem, R: BinaryRelation):
        if not isinstance(R, BinaryRelation):
            R = BinaryRelation(R)
        s1_states, s2_states = set(s1.states), set(s2.states)
        for a, b in R.pairs:
            if a not in s1_states:
                raise UsageError(f"relation pair ({a!r}, {b!r}): {a!r} is not a concrete state")
            if b not in s2_states:
                raise UsageError(f"relation pair ({a!r}, {b!r}): {b!r} is not an abstract state")
        self.s1, self.s2, self.R = s1, s2, R
        self._ord2 = {x: i for i, x in enumerate(s2.states)}

    def image(self, x1):
        return sorted(self.R.image(x1), key=self._ord2.__getitem__)

    def pairs(self):
        for x1 in self.s1.states:
            for x2 in self.image(x1):
                yield x1, x2

    # per-successor predicates, each evaluated on the whole F1(x1, u1)
    def asr_ok(self, succ1, f2):
        return all(self.R.image(x) & f2 for x in succ1)

    def mcr_ok(self, succ1, f2):
        return all(self.R.image(x) and self.R.image(x) <= f2 for x in succ1)

    def asrb_targets(self, succ1, f2):
        """x2+ in F2 related to every x1+ in succ1, in abstract state order."""
        return [x2p for x2p in sorted(f2, key=self._ord2.__getitem__)
                if succ1 <= self.R.preimage(x2p)]

    def asrbb_good_targets(self, x2, u2):
        """x2+ in F2(x2,u2) for which every x1 in R^-1(x2) has a working input."""
        good = []
        for x2p in sorted(self.s2.post(x2, u2), key=self._ord2.__getitem__):
            pre = self.R.preimage(x2p)
            if all(any(self.s1.post(x1, u1) <= pre for u1 in self.s1.available_inputs(x1))
                   for x1 in self.R.preimage(x2)):
                good.append(x2p)
        return good

    def sorted_pre(self, x2):
        ord1 = {x: i for i, x in enumerate(self.s1.states)}
        return sorted(self.R.preimage(x2), key=ord1.__getitem__)


def _check_simple(ctx: _Ctx, pred, name) -> CheckReport:
    s1, s2 = ctx.s1, ctx.s2
    witness = None
    for x1, x2 in ctx.pairs():
        for u2 in s2.available_inputs(x2):
            f2 = s2.post(x2, u2)
            choice = None
            for u1 in s1.available_inputs(x1):
                ok = pred(s1.post(x1, u1), f2)
                if ok:
                    choice = (u1, ok)
                    break
            if choice is None:
                return CheckReport(False, counterexample={"x1": x1, "x2": x2, "u2": u2},
                                   detail=f"{name}: no concrete input at x1={x1!r} matches "
                                          f"u2={u2!r} from x2={x2!r}")
            if witness is None:
                witness = {"x1": x1, "x2": x2, "u2": u2, "u1": choice[0]}
                if isinstance(choice[1], list):
                    witness["x2+"] = choice[1][0]
    return CheckReport(True, witness=witness or {})


def _check_frr(ctx: _Ctx) -> CheckReport:
    s1, s2 = ctx.s1, ctx.s2
    witness = None
    for x1, x2 in ctx.pairs():
        avail1 = set(s1.available_inputs(x1))
        for u2 in s2.available_inputs(x2):
            if u2 not in avail1:
                return CheckReport(False, counterexample={"x1": x1, "x2": x2, "u2": u2, "clause": "i"},
                                   detail=f"FRR (i): {u2!r} available at x2={x2!r} but not at x1={x1!r}")
            f2 = s2.post(x2, u2)
            for x1p in sorted(s1.post(x1, u2), key=s1.state_index):
                img = ctx.R.image(x1p)
                if not img or not img <= f2:
                    return CheckReport(
                        False,
                        counterexample={"x1": x1, "x2": x2, "u2": u2, "x1+": x1p, "clause": "ii"},
                        detail=f"FRR (ii): R({x1p!r}) is empty or not inside F2({x2!r}, {u2!r})")
            if witness is None:
                witness = {"x1": x1, "x2": x2, "u2": u2, "u1": u2}
    return CheckReport(True, witness=witness or {})


def _check_asrbb(ctx: _Ctx) -> CheckReport:
    s1, s2 = ctx.s1, ctx.s2
    witness = None
    for x2 in s2.states:
        pre = ctx.sorted_pre(x2)
        for u2 in s2.available_inputs(x2):
            if not pre:
                continue
            good = ctx.asrbb_good_targets(x2, u2)
            if not good:
                return CheckReport(False, counterexample={"x2": x2, "u2": u2},
                                   detail=f"ASRBB: no common successor of ({x2!r}, {u2!r}) "
                                          "serves every related concrete state")
            if witness is None:
                witness = {"x2": x2, "u2": u2, "x2+": good[0]}
    return CheckReport(True, witness=witness or {})


def check_relation(t, s1: FiniteSystem, s2: FiniteSystem, R) -> CheckReport:
    """Decide whether ``R`` is a relation of type ``t`` from ``s1`` to ``s2``."""
    t = RelationType.parse(t)
    ctx = _Ctx(s1, s2, R)
    if t is RelationType.ASR:
        return _check_simple(ctx, ctx.asr_ok, "ASR")
    if t is RelationType.MCR:
        return _check_simple(ctx, ctx.mcr_ok, "MCR")
    if t is RelationType.ASRB:
        return _check_simple(ctx, ctx.asrb_targets, "ASRB")
    if t is RelationType.FRR:
        return _check_frr(ctx)
    return _check_asrbb(ctx)


def extended_relation(t, s1: FiniteSystem, s2: FiniteSystem, R) -> ExtendedRelation:
    """All tuples satisfying the per-type formula (the extended relation R_e)."""
    t = RelationType.parse(t)
    ctx = _Ctx(s1, s2, R)
    out = set()
    if t is RelationType.ASRBB:
        for x2 in s2.states:
            pre = ctx.sorted_pre(x2)
            for u2 in s2.available_inputs(x2):
                for x2p in ctx.asrbb_good_targets(x2, u2):
                    target = ctx.R.preimage(x2p)
                    for x1 in pre:
                        for u1 in s1.available_inputs(x1):
                            if s1.post(x1, u1) <= target:
                                out.add((x2, u2, x1, u1, x2p))
        return ExtendedRelation(t, frozenset(out))
    for x1, x2 in ctx.pairs():
        for u2 in s2.available_inputs(x2):
            f2 = s2.post(x2, u2)
            if t is RelationType.FRR:
                if u2 in s1.available_inputs(x1) and ctx.mcr_ok(s1.post(x1, u2), f2):
                    out.add((x2, u2, x1))
                continue
            pred = {RelationType.ASR: ctx.asr_ok, RelationType.MCR: ctx.mcr_ok,
                    RelationType.ASRB: ctx.asrb_targets}[t]
            for u1 in s1.available_inputs(x1):
                if pred(s1.post(x1, u1), f2):
                    out.add((x2, u2, x1, u1))
    return ExtendedRelation(t, frozenset(out))


_QUERY_ARITY = {RelationType.ASR: 3, RelationType.ASRB: 3, RelationType.MCR: 3,
                RelationType.ASRBB: 4, RelationType.FRR: 1}


def interface_input_map(t, ext: ExtendedRelation | None, query) -> frozenset:
    """The concrete inputs I_R^T offered for an abstract query.

    Queries are (x2, u2, x1) for ASR/ASRB/MCR, (x2, u2, x1, x2+) for ASRBB and
    (u2,) for FRR.
    """
    t = RelationType.parse(t)
    query = tuple(query) if isinstance(query, (tuple, list)) else (query,)
    if len(query) != _QUERY_ARITY[t]:
        raise UsageError(f"{t.name} input map takes {_QUERY_ARITY[t]} arguments, got {len(query)}")
    if t is RelationType.FRR:
        return frozenset(query)
    if ext is None or ext.type is not t:
        raise UsageError(f"{t.name} input map needs the {t.name} extended relation")
    if t is RelationType.ASRBB:
        x2, u2, x1, x2p = query
        return frozenset(e[3] for e in ext.tuples if e[:3] == (x2, u2, x1) and e[4] == x2p)
    return frozenset(e[3] for e in ext.tuples if e[:3] == query)


def input_map_table(ext: ExtendedRelation) -> dict:
    """Index an extended relation by its query tuple."""
    table = {}
    for e in ext.tuples:
        if ext.type is RelationType.FRR:
            continue
        key = e[:3] + (e[4],) if ext.type is RelationType.ASRBB else e[:3]
        table.setdefault(key, set()).add(e[3])
    return {k: frozenset(v) for k, v in table.items()}


def hierarchy_violations(results: dict, s1=None, s2=None, R=None) -> list:
    """List broken implications among a dict of check results.

    The conditional equivalences are only tested when the systems are given.
    """
    T = RelationType
    h = {t: bool(results[t]) for t in results}
    bad = []
    for a, b in ((T.ASRBB, T.ASRB), (T.ASRB, T.ASR), (T.FRR, T.MCR), (T.MCR, T.ASR)):
        if a in h and b in h and h[a] and not h[b]:
            bad.append(f"{a.name} holds but {b.name} does not")
    if s1 is None:
        return bad
    R = R if isinstance(R, BinaryRelation) else BinaryRelation(R)
    if s2.is_deterministic() and h.get(T.ASR) != h.get(T.ASRBB):
        bad.append("deterministic abstraction but ASR and ASRBB disagree")
    if R.is_deterministic() and h.get(T.ASR) != h.get(T.MCR):
        bad.append("deterministic relation but ASR and MCR disagree")
    if mcr_inputs_label_equal(s1, s2, R) and h.get(T.MCR) != h.get(T.FRR):
        bad.append("MCR inputs coincide with abstract inputs but MCR and FRR disagree")
    return bad


def mcr_inputs_label_equal(s1, s2, R) -> bool:
    """Whether every u1 offered by I_R^MCR equals the abstract input u2."""
    ext = extended_relation(RelationType.MCR, s1, s2, R)
    return all(e[3] == e[1] for e in ext.tuples)


def classify(s1: FiniteSystem, s2: FiniteSystem, R) -> dict:
    """Run all five checkers and cross-check them against the hierarchy."""
    R = R if isinstance(R, BinaryRelation) else BinaryRelation(R)
    results = {t: check_relation(t, s1, s2, R) for t in ALL_TYPES}
    bad = hierarchy_violations(results, s1, s2, R)
    if bad:
        raise InvariantViolation("relation checkers are inconsistent: " + "; ".join(bad))
    return results
