"""Interfaces between a concrete system and its abstraction.

An interface (Z1, h1, h2, Rt) turns an abstract input u2 into concrete inputs
u1 and keeps an auxiliary abstract memory z1. The argument lists of h1 and h2
depend on the relation type, and so does the order in which the chain
u1 / z1+ / x1+ is evaluated:

    asr    u1 = h1(z1,u2,x1)      x1+ = F1(x1,u1)       z1+ = h2(z1,u2,x1+)
    asrb   u1 = h1(z1,u2,x1)      z1+ = h2(z1,u2,x1,u1)  x1+ = F1(x1,u1)
    asrbb  z1+ = h2(z1,u2)        u1 = h1(z1,u2,x1,z1+)  x1+ = F1(x1,u1)
    mcr    u1 = h1(z1,u2,x1)      x1+ = F1(x1,u1)       z1+ = h2(x1+)
    frr    u1 = h1(u2)            x1+ = F1(x1,u1)       z1+ = h2(x1+)
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

from .exceptions import InvariantViolation, RelationError
from .relations import (BinaryRelation, CheckReport, RelationType, check_relation,
                        extended_relation, input_map_table)
from .system import EMPTY, FiniteSystem, label_key

SIGNATURES = {
    RelationType.ASR: (("z1", "u2", "x1"), ("z1", "u2", "x1+")),
    RelationType.ASRB: (("z1", "u2", "x1"), ("z1", "u2", "x1", "u1")),
    RelationType.ASRBB: (("z1", "u2", "x1", "z1+"), ("z1", "u2")),
    RelationType.MCR: (("z1", "u2", "x1"), ("x1+",)),
    RelationType.FRR: (("u2",), ("x1+",)),
}


class SetMap:
    """Set-valued map given by a finite table; missing keys map to the empty set."""

    def __init__(self, table=None):
        self.table = {k: frozenset(v) for k, v in (table or {}).items() if v}

    def __call__(self, *args):
        return self.table.get(args, EMPTY)

    def __eq__(self, other):
        return isinstance(other, SetMap) and self.table == other.table

    def __repr__(self):
        return f"SetMap({len(self.table)} entries)"


@dataclass(frozen=True)
class InterfaceSpec:
    """(Z1, h1, h2, Rt) together with the label sets needed to enumerate it.

    ``Rt`` is a finite relation over ((x1, z1), x2). Closed-form interfaces
    over continuous concrete states give ``rt_image`` instead.
    """
    kind: RelationType
    Z1: tuple
    h1: Callable
    h2: Callable
    Rt: BinaryRelation | None = None
    rt_image: Callable | None = None
    abstract_inputs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", RelationType.parse(self.kind))
        object.__setattr__(self, "Z1", tuple(self.Z1))
        object.__setattr__(self, "abstract_inputs", tuple(self.abstract_inputs))
        if self.Rt is None and self.rt_image is None:
            raise ValueError("an interface needs Rt or rt_image")
        if self.Rt is not None and not isinstance(self.Rt, BinaryRelation):
            object.__setattr__(self, "Rt", BinaryRelation(self.Rt))

    @property
    def signature(self):
        return SIGNATURES[self.kind]

    def image(self, x1, z1) -> frozenset:
        """Rt((x1, z1))."""
        if self.rt_image is not None:
            return frozenset(self.rt_image(x1, z1))
        return self.Rt.image((x1, z1))


def chain(iface: InterfaceSpec, post, x1, z1, u2) -> list:
    """Every (u1, x1+, z1+) the interface chain can produce from (x1, z1) under u2.

    ``post(x1, u1)`` returns the concrete successors.
    """
    h1, h2 = iface.h1, iface.h2
    out = []
    k = iface.kind
    if k is RelationType.ASRBB:
        for z1p in h2(z1, u2):
            for u1 in h1(z1, u2, x1, z1p):
                out.extend((u1, x1p, z1p) for x1p in post(x1, u1))
        return out
    if k is RelationType.ASRB:
        for u1 in h1(z1, u2, x1):
            zs = h2(z1, u2, x1, u1)
            if zs:
                out.extend((u1, x1p, z1p) for x1p in post(x1, u1) for z1p in zs)
        return out
    u1s = h1(u2) if k is RelationType.FRR else h1(z1, u2, x1)
    for u1 in u1s:
        for x1p in post(x1, u1):
            zs = h2(z1, u2, x1p) if k is RelationType.ASR else h2(x1p)
            out.extend((u1, x1p, z1p) for z1p in zs)
    return out


def canonical_interface(t, s1: FiniteSystem, s2: FiniteSystem, R) -> InterfaceSpec:
    """Standard interface for a relation of type ``t`` with Z1 = X2."""
    t = RelationType.parse(t)
    R = R if isinstance(R, BinaryRelation) else BinaryRelation(R)
    report = check_relation(t, s1, s2, R)
    if not report.holds:
        raise RelationError(f"{t.name} does not hold: {report.detail}", report=report)
    ext = extended_relation(t, s1, s2, R)
    if t is RelationType.FRR:
        h1 = _frr_h1
    else:
        h1 = SetMap(input_map_table(ext))
    F2 = s2.post
    if t is RelationType.ASR:
        def h2(z1, u2, x1p):
            return F2(z1, u2) & R.image(x1p)
    elif t is RelationType.ASRB:
        def h2(z1, u2, x1, u1):
            succ = s1.post(x1, u1)
            return frozenset(x2p for x2p in F2(z1, u2) if succ <= R.preimage(x2p))
    elif t is RelationType.ASRBB:
        table = {}
        for e in ext.tuples:
            table.setdefault((e[0], e[1]), set()).add(e[4])
        good = SetMap(table)

        def h2(z1, u2):
            return good(z1, u2)
    else:
        h2 = R.image
    return InterfaceSpec(t, s2.states, h1, h2, Rt=lift_relation(R),
                         abstract_inputs=s2.inputs)


def _frr_h1(u2):
    return frozenset((u2,))


def _rt_pairs(iface: InterfaceSpec, s1: FiniteSystem, s2: FiniteSystem):
    ord2 = {x: i for i, x in enumerate(s2.states)}
    for x1 in s1.states:
        for z1 in iface.Z1:
            img = iface.image(x1, z1)
            for x2 in sorted(img, key=lambda x: ord2.get(x, len(ord2))):
                yield x1, z1, x2


def validate_interface(iface: InterfaceSpec, s1: FiniteSystem, s2: FiniteSystem) -> CheckReport:
    """Check every chain outcome from every related triple.

    Besides x2+ ∈ F2(x2, u2), the chain must produce at least one outcome and
    each outcome must have a nonempty Rt image; without these the FRR
    characterization through the augmented system would not hold.
    """
    witness = None
    for x1, z1, x2 in _rt_pairs(iface, s1, s2):
        for u2 in s2.available_inputs(x2):
            outs = chain(iface, s1.post, x1, z1, u2)
            where = {"x1": x1, "z1": z1, "x2": x2, "u2": u2}
            if not outs:
                return CheckReport(False, counterexample=where,
                                   detail="interface chain produces no outcome")
            f2 = s2.post(x2, u2)
            for u1, x1p, z1p in sorted(outs, key=label_key):
                img = iface.image(x1p, z1p)
                bad = sorted(img - f2, key=label_key)
                if not img or bad:
                    ce = dict(where, u1=u1, **{"x1+": x1p, "z1+": z1p})
                    if bad:
                        ce["x2+"] = bad[0]
                        return CheckReport(False, counterexample=ce,
                                           detail=f"x2+={bad[0]!r} is not in F2({x2!r}, {u2!r})")
                    return CheckReport(False, counterexample=ce,
                                       detail=f"Rt(({x1p!r}, {z1p!r})) is empty")
            if witness is None:
                witness = dict(where, outcomes=len(outs))
    return CheckReport(True, witness=witness or {})


def augment(s1: FiniteSystem, iface: InterfaceSpec, abstract_inputs=None) -> FiniteSystem:
    """Augmented system with states X1 × Z1, inputs U2 and the chain as dynamics."""
    inputs = tuple(abstract_inputs if abstract_inputs is not None else iface.abstract_inputs)
    states = tuple(itertools.product(s1.states, iface.Z1))
    trans = {}
    for x1, z1 in states:
        for u2 in inputs:
            outs = chain(iface, s1.post, x1, z1, u2)
            if outs:
                trans[((x1, z1), u2)] = {(x1p, z1p) for _, x1p, z1p in outs}
    return FiniteSystem(states, inputs, trans)


def check_common_quantization(Rt) -> bool:
    """Related pairs sharing z1 must have pairwise intersecting images."""
    Rt = Rt if isinstance(Rt, BinaryRelation) else BinaryRelation(Rt)
    by_z = {}
    for (x1, z1), _ in Rt.pairs:
        by_z.setdefault(z1, set()).add(x1)
    for z1, xs in by_z.items():
        imgs = [Rt.image((x1, z1)) for x1 in xs]
        for a, b in itertools.combinations(imgs, 2):
            if not a & b:
                return False
    return True


def flatten_relation(Rt) -> BinaryRelation:
    """R = {(x1, x2) | some z1 has ((x1, z1), x2) in Rt}."""
    return BinaryRelation((x1, x2) for (x1, _), x2 in Rt)


def lift_relation(R) -> BinaryRelation:
    """Rt = {((x1, x2), x2) | (x1, x2) in R}, i.e. Z1 = X2."""
    return BinaryRelation(((x1, x2), x2) for x1, x2 in R)


def finite_rt(iface: InterfaceSpec, s1: FiniteSystem) -> BinaryRelation:
    if iface.Rt is not None:
        return iface.Rt
    return BinaryRelation(((x1, z1), x2) for x1 in s1.states for z1 in iface.Z1
                          for x2 in iface.image(x1, z1))


def interface_frr_equivalence(iface: InterfaceSpec, s1: FiniteSystem,
                              s2: FiniteSystem) -> CheckReport:
    """Validate the interface and cross-check it as an FRR on the augmented system."""
    direct = validate_interface(iface, s1, s2)
    aug = augment(s1, iface, s2.inputs)
    via_frr = check_relation(RelationType.FRR, aug, s2, finite_rt(iface, s1))
    if direct.holds != via_frr.holds:
        raise InvariantViolation(
            f"interface check says {direct.holds} but FRR on the augmented system says "
            f"{via_frr.holds} ({direct.detail or via_frr.detail})")
    return direct


def converse_regular(iface: InterfaceSpec, s1: FiniteSystem, s2: FiniteSystem) -> bool:
    """Conditions under which a valid interface yields a relation of its type.

    The chain must not discard a concrete successor (h2 is nonempty on every
    x1+ reachable through h1), and for the memoryless types every related
    memory value must be one that h2 can produce from x1, with FRR passing u2
    through unchanged. Common quantization is a separate requirement for the
    predictive types.
    """
    k = iface.kind
    memoryless = k in (RelationType.MCR, RelationType.FRR)
    for x1, z1, x2 in _rt_pairs(iface, s1, s2):
        if memoryless and z1 not in iface.h2(x1):
            return False
        if k in (RelationType.ASRB, RelationType.ASRBB):
            continue
        for u2 in s2.available_inputs(x2):
            if k is RelationType.FRR:
                u1s = iface.h1(u2)
                if not u1s <= {u2}:
                    return False
            else:
                u1s = iface.h1(z1, u2, x1)
            for u1 in u1s:
                for x1p in s1.post(x1, u1):
                    zs = iface.h2(z1, u2, x1p) if k is RelationType.ASR else iface.h2(x1p)
                    if not zs:
                        return False
    return True
