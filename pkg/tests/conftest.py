import json
from pathlib import Path

import pytest

from simrel import BinaryRelation, FiniteSystem


def sys_a():
    """Two states, a -> b, b deadlocks."""
    return FiniteSystem(("a", "b"), ("u",), {("a", "u"): {"b"}})


def asr_fixture():
    """ASR holds, MCR fails at (a, A, U): R(b) = {B, C} is not inside F2(A, U) = {B}."""
    s2 = FiniteSystem(("A", "B", "C"), ("U",), {("A", "U"): {"B"}})
    R = BinaryRelation({("a", "A"), ("b", "B"), ("b", "C")})
    return sys_a(), s2, R


def identity_fixture():
    """Deterministic three-state system related to itself by the identity."""
    s = FiniteSystem(("p", "q", "r"), ("u", "w"), {
        ("p", "u"): {"q"}, ("q", "u"): {"r"}, ("r", "u"): {"p"},
        ("p", "w"): {"p"}, ("r", "w"): {"q"},
    })
    return s, s, BinaryRelation((x, x) for x in s.states)


def mcr_fixture():
    """MCR holds with a concrete input that differs from the abstract one, so FRR fails."""
    s1 = FiniteSystem(("x0", "x1", "x2"), ("a", "b"), {
        ("x0", "a"): {"x1"}, ("x0", "b"): {"x0"},
        ("x1", "a"): {"x1"}, ("x2", "b"): {"x2"}, ("x2", "a"): {"x1"},
    })
    s2 = FiniteSystem(("P", "Q"), ("a", "b"), {
        ("P", "b"): {"Q"}, ("Q", "a"): {"Q"},
    })
    R = BinaryRelation({("x0", "P"), ("x1", "Q"), ("x2", "Q")})
    return s1, s2, R


def nondet_fixture():
    """Nondeterministic plant and abstraction where every type holds."""
    s1 = FiniteSystem(("s0", "s1", "s2"), ("u", "v"), {
        ("s0", "u"): {"s1", "s2"}, ("s0", "v"): {"s0"},
        ("s1", "u"): {"s0"}, ("s2", "u"): {"s0"}, ("s1", "v"): {"s1"},
    })
    s2 = FiniteSystem(("L", "H"), ("u", "v"), {
        ("L", "u"): {"H"}, ("L", "v"): {"L"}, ("H", "u"): {"L"},
    })
    R = BinaryRelation({("s0", "L"), ("s1", "H"), ("s2", "H")})
    return s1, s2, R


FIXTURES = {
    "asr": asr_fixture,
    "identity": identity_fixture,
    "mcr": mcr_fixture,
    "nondet": nondet_fixture,
}


@pytest.fixture
def asr_case():
    return asr_fixture()


@pytest.fixture
def identity_case():
    return identity_fixture()


@pytest.fixture
def mcr_case():
    return mcr_fixture()


def write_case(tmp_path: Path, s1, s2, R):
    from simrel import io

    paths = []
    for name, obj in (("s1", io.dump_system(s1)), ("s2", io.dump_system(s2)),
                      ("r", io.dump_relation(R))):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(obj))
        paths.append(str(p))
    return paths
