import pytest

from simrel import (ALL_TYPES, BLOCKED, TRUNCATED, InterfaceSpec, RelationType, UsageError,
                    augment, behavior, canonical_interface, check_relation, closed_loop_run,
                    concretize, controller_as_system, feedback_compose, serial_compose,
                    synthesize_reach, synthesize_safety, verify_reproducibility)
from simrel.concretize import (check_shadow, closed_loop_behavior, relation_quantizer,
                               simulate_closed_loop)
from simrel.generators import passing_instances
from simrel.system import STALLED

from conftest import FIXTURES, asr_fixture, identity_fixture, mcr_fixture

T = RelationType


def _static(s2, safe=None):
    return controller_as_system(synthesize_safety(s2, s2.states if safe is None else safe))


def _all_inputs(s2):
    sc = synthesize_reach(s2, s2.states, 0)
    return controller_as_system(sc)


def test_frr_identity_collapses_to_c2_after_r():
    s, _, R = identity_fixture()
    C2 = _static(s)
    C1 = concretize("frr", canonical_interface("frr", s, s, R), C2, s)
    ref = serial_compose(relation_quantizer(R, s, C2.inputs), C2)
    assert C1.system.states == ref.states
    for xc in ref.states:
        for x1 in s.states:
            assert C1.system.out(xc, x1) == ref.out(xc, x1)


def test_mcr_static_preserved():
    s1, s2, R = mcr_fixture()
    C1 = concretize("mcr", canonical_interface("mcr", s1, s2, R), _all_inputs(s2), s1)
    assert C1.is_static and len(C1.states) == 1


def test_asr_not_static():
    s1, s2, R = asr_fixture()
    C2 = _all_inputs(s2)
    iface = canonical_interface("asr", s1, s2, R)
    C1 = concretize("asr", iface, C2, s1)
    assert not C1.is_static
    assert len(C1.states) == len(C2.states) * len(iface.Z1) * len(C2.outputs)
    assert {z for (_, z, _) in C1.states} == set(s2.states)


def test_predictive_state_shape():
    s1, s2, R = asr_fixture()
    C2 = _all_inputs(s2)
    for t in ("asrb", "asrbb"):
        iface = canonical_interface(t, s1, s2, R)
        C1 = concretize(t, iface, C2, s1)
        assert len(C1.states) == len(C2.states) * len(iface.Z1)


def test_concretize_type_mismatch():
    s1, s2, R = asr_fixture()
    with pytest.raises(UsageError):
        concretize("mcr", canonical_interface("asr", s1, s2, R), _all_inputs(s2), s1)


def test_closed_loop_run_asr_fixture():
    s1, s2, R = asr_fixture()
    C2 = controller_as_system(synthesize_reach(s2, {"B"}, 2))
    C1 = concretize("asr", canonical_interface("asr", s1, s2, R), C2, s1)
    runs = closed_loop_run(C1, s1, ["a"], 5)
    assert len(runs) == 1
    (run,) = runs
    assert run.x1 == ("a",) and run.status == STALLED
    assert run.steps[0].u1 == "u" and run.steps[0].x2 == "A"


def test_closed_loop_run_identity_matches_plant():
    s, _, R = identity_fixture()
    C2 = _all_inputs(s)
    C1 = concretize("frr", canonical_interface("frr", s, s, R), C2, s)
    runs = {(r.x1, r.status) for r in closed_loop_run(C1, s, s.states, 4)}
    # C2 only issues available inputs, so the plant's blocking moves never fire
    plant = {b for b in behavior(s, None, 4) if b[1] != BLOCKED}
    assert runs == plant


def test_closed_loop_run_empty_initial_set():
    s, _, R = identity_fixture()
    C1 = concretize("frr", canonical_interface("frr", s, s, R), _all_inputs(s), s)
    assert closed_loop_run(C1, s, [], 3) == set()
    with pytest.raises(UsageError):
        closed_loop_run(C1, s, s.states, 0)


def test_closed_loop_run_agrees_with_composition():
    for t in ALL_TYPES:
        for s1, s2, R in passing_instances(t, 10, seed=7):
            sc = synthesize_safety(s2, s2.states)
            if not sc.feasible:
                continue
            C1 = concretize(t, canonical_interface(t, s1, s2, R), controller_as_system(sc), s1)
            runs = {(r.x1, r.status) for r in closed_loop_run(C1, s1, s1.states, 4)}
            assert runs == set(closed_loop_behavior(C1, s1, s1.states, 4))


def test_runs_satisfy_the_chain():
    """Every recorded step is one the interface could take, in the type's order."""
    for make in FIXTURES.values():
        s1, s2, R = make()
        for t in ALL_TYPES:
            if not canonical_ok(t, s1, s2, R):
                continue
            iface = canonical_interface(t, s1, s2, R)
            C2 = _all_inputs(s2)
            for run in closed_loop_run(concretize(t, iface, C2, s1), s1, s1.states, 4):
                for a, b in zip(run.steps, run.steps[1:]):
                    assert b.x1 in s1.post(a.x1, a.u1)
                    assert b.x2 in s2.post(a.x2, a.u2)
                    assert b.x2 in R.image(b.x1)


def canonical_ok(t, s1, s2, R):
    return check_relation(t, s1, s2, R).holds


def test_reproducibility_on_fixtures():
    for make in FIXTURES.values():
        s1, s2, R = make()
        for t in ALL_TYPES:
            if not canonical_ok(t, s1, s2, R):
                continue
            for C2 in (_all_inputs(s2),):
                C1 = concretize(t, canonical_interface(t, s1, s2, R), C2, s1)
                assert verify_reproducibility(C1, s1, C2, s2, R, 6, every_horizon=True).holds


def test_reproducibility_identity_controller():
    s, _, R = identity_fixture()
    C2 = _all_inputs(s)
    C1 = concretize("frr", canonical_interface("frr", s, s, R), C2, s)
    assert verify_reproducibility(C1, s, C2, s, R, 5).holds


def test_corrupted_h1_breaks_reproducibility():
    s1, s2, R = mcr_fixture()
    good = canonical_interface("mcr", s1, s2, R)
    bad = InterfaceSpec("mcr", good.Z1, lambda z1, u2, x1: frozenset(s1.inputs), good.h2,
                        Rt=good.Rt, abstract_inputs=s2.inputs)
    C2 = _all_inputs(s2)
    rep = verify_reproducibility(concretize("mcr", bad, C2, s1), s1, C2, s2, R, 3)
    assert not rep.holds
    assert rep.counterexample["trace"][0] == "x0"


def test_augmented_loop_matches_concrete_loop():
    """x1-projections of C1 x S1 and of C~1 x S~1 coincide."""
    for t in ALL_TYPES:
        for s1, s2, R in passing_instances(t, 12, seed=9):
            sc = synthesize_safety(s2, s2.states)
            if not sc.feasible:
                continue
            iface = canonical_interface(t, s1, s2, R)
            C1 = concretize(t, iface, controller_as_system(sc), s1)
            aug = augment(s1, iface, s2.inputs)
            loop = feedback_compose(C1.Ct, aug, check=False)
            lifted = set(behavior(loop, None, 4, observe=lambda y: y[1][0]))
            assert set(closed_loop_behavior(C1, s1, s1.states, 4)) == lifted


def test_simulation_shadow_on_fixture():
    s1, s2, R = mcr_fixture()
    iface = canonical_interface("mcr", s1, s2, R)
    C2 = _all_inputs(s2)
    run = simulate_closed_loop("mcr", iface, C2, s1.post, "x0", 5)
    assert run.status == TRUNCATED and len(run) == 5
    assert check_shadow(run, C2, s2, lambda a, b: (a, b) in R).holds
    broken = check_shadow(run, C2, s2, lambda a, b: False)
    assert not broken.holds and broken.counterexample["k"] == 0


def test_blocked_runs_are_reported():
    s1, s2, R = asr_fixture()
    iface = canonical_interface("asrbb", s1, s2, R)
    C2 = _all_inputs(s2)
    runs = closed_loop_run(concretize("asrbb", iface, C2, s1), s1, ["a"], 3)
    assert {r.status for r in runs} <= {BLOCKED, STALLED}
