"""Seeded random instances (s1, s2, R) for property tests and the self-test."""
from __future__ import annotations

import itertools
import random

from .relations import BinaryRelation, RelationType, check_relation
from .system import FiniteSystem

_T = RelationType


def random_system(rng: random.Random, n_states: int, n_inputs: int, p_edge: float = 0.4,
                  prefix: str = "x", input_prefix: str = "u") -> FiniteSystem:
    states = tuple(f"{prefix}{i}" for i in range(n_states))
    inputs = tuple(f"{input_prefix}{j}" for j in range(n_inputs))
    trans = {}
    for x in states:
        for u in inputs:
            succ = {y for y in states if rng.random() < p_edge}
            if succ:
                trans[(x, u)] = succ
    return FiniteSystem(states, inputs, trans)


def random_deterministic_system(rng, n_states, n_inputs, p_avail=0.8, prefix="x",
                                input_prefix="u") -> FiniteSystem:
    states = tuple(f"{prefix}{i}" for i in range(n_states))
    inputs = tuple(f"{input_prefix}{j}" for j in range(n_inputs))
    trans = {(x, u): {rng.choice(states)} for x in states for u in inputs if rng.random() < p_avail}
    return FiniteSystem(states, inputs, trans)


def random_relation(rng, s1, s2, p: float = 0.35, strict: bool = False) -> BinaryRelation:
    pairs = {(a, b) for a in s1.states for b in s2.states if rng.random() < p}
    if strict:
        for a in s1.states:
            if not any(x == a for x, _ in pairs):
                pairs.add((a, rng.choice(s2.states)))
    return BinaryRelation(pairs)


def random_deterministic_relation(rng, s1, s2, p_defined: float = 0.9) -> BinaryRelation:
    return BinaryRelation((a, rng.choice(s2.states)) for a in s1.states if rng.random() < p_defined)


def random_instance(rng: random.Random, max1: int = 5, max2: int = 4, max_inputs: int = 3,
                    same_inputs: bool = True):
    """Unconstrained instance with at most the given numbers of states and inputs."""
    n1, n2 = rng.randint(1, max1), rng.randint(1, max2)
    m1 = rng.randint(1, max_inputs)
    m2 = m1 if same_inputs else rng.randint(1, max_inputs)
    s1 = random_system(rng, n1, m1, rng.choice((0.2, 0.35, 0.5)), "x")
    if rng.random() < 0.3:
        s2 = random_deterministic_system(rng, n2, m2, prefix="q")
    else:
        s2 = random_system(rng, n2, m2, rng.choice((0.2, 0.35, 0.5, 0.7)), "q")
    if rng.random() < 0.3:
        R = random_deterministic_relation(rng, s1, s2)
    else:
        R = random_relation(rng, s1, s2, rng.choice((0.2, 0.35, 0.5)), strict=rng.random() < 0.5)
    return s1, s2, R


def constructed_instance(rng: random.Random, t, max1: int = 5, max2: int = 4,
                         max_inputs: int = 3, p_skip: float = 0.15, p_extra: float = 0.15):
    """Instance whose abstraction is built so that a relation of type ``t`` tends to hold.

    The concrete system and relation are random; abstract transitions are
    assembled from the concrete ones the way the relation demands. The result
    is not guaranteed to pass: callers filter with ``check_relation``.
    """
    t = RelationType.parse(t)
    n1, n2, m = rng.randint(1, max1), rng.randint(1, max2), rng.randint(1, max_inputs)
    s1 = random_system(rng, n1, m, rng.choice((0.25, 0.4)), "x")
    R = random_relation(rng, s1, random_system(rng, n2, m, 0.0, "q"), 0.3, strict=True)
    X2 = tuple(f"q{i}" for i in range(n2))
    trans = {}
    for x2 in X2:
        pre = sorted(R.preimage(x2))
        for u2 in s1.inputs:
            if rng.random() < p_skip:
                continue
            succ = set()
            ok = True
            if t is _T.ASRBB:
                cands = [y for y in X2 if all(
                    any(s1.post(x1, u1) <= R.preimage(y) for u1 in s1.available_inputs(x1))
                    for x1 in pre)]
                if not cands:
                    ok = False
                else:
                    succ.add(rng.choice(cands))
            else:
                for x1 in pre:
                    avail = s1.available_inputs(x1)
                    if t is _T.FRR:
                        u1 = u2 if u2 in avail else None
                    else:
                        u1 = rng.choice(avail) if avail else None
                    if u1 is None:
                        ok = False
                        break
                    nxt = s1.post(x1, u1)
                    if t is _T.ASRB:
                        cands = [y for y in X2 if nxt <= R.preimage(y)]
                        if not cands:
                            ok = False
                            break
                        succ.add(rng.choice(cands))
                    else:
                        for x1p in sorted(nxt):
                            img = sorted(R.image(x1p))
                            if t is _T.ASR:
                                succ.add(rng.choice(img))
                            else:
                                succ.update(img)
            if not ok:
                continue
            if not succ:
                succ.add(rng.choice(X2))
            succ.update(y for y in X2 if rng.random() < p_extra)
            trans[(x2, u2)] = succ
    s2 = FiniteSystem(X2, s1.inputs, trans)
    return s1, s2, R


def passing_instances(t, count: int, seed: int = 0, max1: int = 5, max2: int = 4,
                      max_inputs: int = 3, max_tries: int = 100000):
    """``count`` instances on which relation ``t`` holds, drawn with a fixed seed."""
    t = RelationType.parse(t)
    rng = random.Random(f"{t.value}:{seed}")
    out = []
    tries = 0
    while len(out) < count and tries < max_tries:
        tries += 1
        if rng.random() < 0.8:
            inst = constructed_instance(rng, t, max1, max2, max_inputs)
        else:
            inst = random_instance(rng, max1, max2, max_inputs)
        if check_relation(t, *inst).holds and inst[2].pairs:
            out.append(inst)
    return out


def random_interface(rng: random.Random, t, s1, s2, n_memory: int = 2, p_h: float = 0.5,
                     p_rt: float = 0.3):
    """Interface of type ``t`` with random finite tables over its signature."""
    from .interface import SIGNATURES, InterfaceSpec, SetMap

    t = RelationType.parse(t)
    Z1 = tuple(f"z{i}" for i in range(n_memory))
    dom = {"z1": Z1, "z1+": Z1, "u2": s2.inputs, "x1": s1.states, "x1+": s1.states,
           "u1": s1.inputs}
    nu1, nu2 = SIGNATURES[t]

    def table(names, codomain):
        return {args: {c for c in codomain if rng.random() < p_h}
                for args in itertools.product(*(dom[n] for n in names))}

    Rt = BinaryRelation(((x1, z), x2) for x1 in s1.states for z in Z1 for x2 in s2.states
                        if rng.random() < p_rt)
    return InterfaceSpec(t, Z1, SetMap(table(nu1, s1.inputs)), SetMap(table(nu2, Z1)), Rt=Rt,
                         abstract_inputs=s2.inputs)
