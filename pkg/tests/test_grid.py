import math

import numpy as np
import pytest

from simrel import ParameterError, UsageError
from simrel.grid import (Grid, GridParams, affine_testbed, build_grid, check_parameters,
                         construct_abstraction, euclidean_growth_bound, nearest_cell,
                         over_approx_target, quantize, sample_cell, snapped_image_bound,
                         soundness_violations, subgrid_cover)

CONFIGS = {
    1: {"asr": GridParams(0.5, 0.25), "mcr": GridParams(0.5, 0.25),
        "asrbb": GridParams(0.25, 0.25), "asrb": GridParams(0.25, 0.25, 0.2, 0.1)},
    2: {"asr": GridParams(0.25, 0.25), "mcr": GridParams(0.25, 0.25),
        "asrbb": GridParams(0.125, 0.25), "asrb": GridParams(0.25, 0.25, 0.125, 0.1)},
}


@pytest.fixture(scope="module")
def built():
    out = {}
    for n, cfg in CONFIGS.items():
        dyn, gb = affine_testbed(n)
        for t, gp in cfg.items():
            out[n, t] = (dyn, gb, gp, construct_abstraction(t, dyn, gb, gp))
    return out


def test_build_grid_examples():
    assert build_grid([(0, 1)], 0.5) == [(0.0,), (0.5,), (1.0,)]
    assert len(build_grid([(0, 1), (0, 1)], 0.5)) == 9
    assert build_grid([(0.1, 0.2)], 1.0) == []
    assert build_grid([(0.5, 0.7)], 5.0) == []
    assert build_grid([(-0.5, 0.7)], 5.0) == [(0.0,)]
    assert build_grid([(0, 1)], 0.2) == [(0.0,), (0.2,), (0.4,), (0.6,), (0.8,), (1.0,)]
    for eta in (0.0, -1.0):
        with pytest.raises(UsageError):
            build_grid([(0, 1)], eta)


def test_testbed_contraction():
    for n in (1, 2):
        _, gb = affine_testbed(n)
        assert gb.rho == pytest.approx(0.5)


def test_growth_bound_invariants_sampled():
    rng = np.random.default_rng(0)
    for n in (1, 2):
        dyn, gb = affine_testbed(n)
        for _ in range(2000):
            x, y = rng.uniform(0, 1, (2, n))
            u = np.asarray(dyn.U2[rng.integers(len(dyn.U2))])
            lhs = gb.value(dyn.step(y, gb.feedback(y, x, u)), dyn.step(x, u))
            assert lhs <= gb.rho * gb.value(y, x) + 1e-9
            z = rng.uniform(0, 1, n)
            assert gb.value(x, y) - gb.value(x, z) <= gb.gamma(np.linalg.norm(y - z)) + 1e-9


def test_quantize_examples():
    dyn, gb = affine_testbed(1)
    grid = Grid(dyn.lo, dyn.hi, 0.5)
    assert quantize(gb, grid, 0.25, [0.45]) == {(0.5,)}
    assert quantize(gb, grid, 0.25, [0.25]) == {(0.0,), (0.5,)}
    assert nearest_cell(grid, [0.25]) == (0.0,)
    assert nearest_cell(grid, [0.26]) == (0.5,)
    assert nearest_cell(grid, [7.0]) == (1.0,)


def test_nearest_cell_inside_quantize_under_strictness():
    rng = np.random.default_rng(1)
    for n, eta, eps in ((1, 0.5, 0.25), (2, 0.25, 0.25), (2, 0.125, 0.1)):
        dyn, gb = affine_testbed(n)
        grid = Grid(dyn.lo, dyn.hi, eta)
        assert check_parameters("mcr", gb, GridParams(eta, eps), n).ok
        for x in rng.uniform(0, 1, (500, n)):
            assert nearest_cell(grid, x) in quantize(gb, grid, eps, x)


def test_nearest_cell_tie_break_two_d():
    grid = Grid((0, 0), (1, 1), 0.5)
    assert nearest_cell(grid, [0.25, 0.75]) == (0.0, 0.5)


def test_over_approx_example():
    dyn, gb = affine_testbed(1)
    c, level = over_approx_target(dyn, gb, (0.5,), (0.0,), 0.25)
    assert c[0] == pytest.approx(0.45) and level == pytest.approx(0.125)
    xs = np.linspace(0.25, 0.75, 1001)
    img = np.array([dyn.step([x], gb.feedback([x], [0.5], [0.0]))[0] for x in xs])
    assert img.min() == pytest.approx(0.325) and img.max() == pytest.approx(0.575)
    c, level = over_approx_target(dyn, gb, (0.5,), (0.0,), 0.0)
    assert level == 0.0


def test_over_approx_without_contraction():
    dyn, _ = affine_testbed(1)
    gb1 = euclidean_growth_bound(lambda y, x, u: u, 1.0)
    assert over_approx_target(dyn, gb1, (0.5,), (0.0,), 0.25)[1] == 0.25


def test_check_parameters_examples():
    _, gb = affine_testbed(1)
    rep = check_parameters("asrbb", gb, GridParams(0.5, 0.25), 1)
    assert not rep.ok
    (bad,) = rep.failed
    assert bad.lhs == 0.5 and bad.rhs == pytest.approx(0.25) and bad.name.startswith("asrbb")
    assert check_parameters("asrbb", gb, GridParams(0.25, 0.25), 1).ok
    rep = check_parameters("asrb", gb, GridParams(0.25, 0.25, 0.2, 0.1), 1)
    assert rep.ok
    assert [c.rhs for c in rep.checks] == pytest.approx([0.5, 0.2, 0.25, 0.4])
    assert [c.lhs for c in rep.checks] == pytest.approx([0.25, 0.2, 0.05, 0.25])


def test_check_parameters_asrbb_needs_contraction():
    gb = euclidean_growth_bound(lambda y, x, u: u, 1.0)
    rep = check_parameters("asrbb", gb, GridParams(0.01, 0.25), 1)
    assert not rep.ok
    assert any(c.name.startswith("contraction") for c in rep.failed)


def test_check_parameters_asrb_requires_subgrid():
    _, gb = affine_testbed(1)
    with pytest.raises(UsageError):
        check_parameters("asrb", gb, GridParams(0.25, 0.25), 1)


def test_construction_rejects_failed_parameters():
    dyn, gb = affine_testbed(1)
    with pytest.raises(ParameterError) as err:
        construct_abstraction("asrbb", dyn, gb, GridParams(0.5, 0.25))
    assert "asrbb" in str(err.value)
    with pytest.raises(ParameterError):
        construct_abstraction("asr", dyn, gb, GridParams(0.75, 0.25))
    with pytest.raises(UsageError):
        construct_abstraction("frr", dyn, gb, GridParams(0.5, 0.25))


def test_subgrid_cover_golden():
    dyn, gb = affine_testbed(1)
    Z = subgrid_cover(gb, (0.5,), 0.25, 0.2, 0.1, dyn.lo, dyn.hi)
    assert Z == [(0.2,), (0.4,), (0.6,), (0.8,)]
    # 0.2..0.8 with radius 0.1 spans [0.1, 0.9] and so contains the cell [0.25, 0.75]
    assert Z[0][0] - 0.1 <= 0.25 and Z[-1][0] + 0.1 >= 0.75


def test_subgrid_cover_degenerate_cases():
    _, gb = affine_testbed(1)
    assert subgrid_cover(gb, (0.5,), 0.25, 0.25, 0.25) == [(0.5,)]
    assert subgrid_cover(gb, (0.5,), 1e-12, 0.2, 0.1) == [(0.4,)]


def test_subgrid_cover_contains_cell_two_d():
    dyn, gb = affine_testbed(2)
    rng = np.random.default_rng(2)
    lo, hi = np.asarray(dyn.lo), np.asarray(dyn.hi)
    for x2 in Grid(lo, hi, 0.25).points:
        Z = np.array(subgrid_cover(gb, x2, 0.25, 0.125, 0.1, lo, hi))
        pts = sample_cell(rng, gb, x2, 0.25, lo, hi, 300)
        d = np.linalg.norm(pts[:, None, :] - Z[None, :, :], axis=2).min(axis=1)
        assert np.all(d <= 0.1 + 1e-9)


def test_construct_examples_one_d(built):
    _, _, _, asr = built[1, "asr"]
    _, _, _, mcr = built[1, "mcr"]
    _, _, _, asrbb = built[1, "asrbb"]
    x, u = (0.5,), (0.0,)
    assert mcr.system.post(x, u) == {(0.5,)}
    assert asr.system.post(x, u) == {(0.5,)}
    assert asrbb.system.post(x, u) == {(0.5,)}


def test_asrb_one_d_example(built):
    dyn, gb, gp, abst = built[1, "asrb"]
    Z = subgrid_cover(gb, (0.5,), gp.eps, gp.eta2, gp.eps2, dyn.lo, dyn.hi)
    grid = Grid(dyn.lo, dyn.hi, gp.eta)
    expected = {nearest_cell(grid, dyn.step(z, gb.feedback(z, (0.5,), (0.0,)))) for z in Z}
    assert expected == {(0.25,), (0.5,)}
    assert abst.system.post((0.5,), (0.0,)) == expected
    for x2 in abst.system.states:
        for u2 in dyn.U2:
            assert len(abst.system.post(x2, u2)) <= abst.metadata["max_cover"]


def test_asr_inside_mcr(built):
    for n in (1, 2):
        asr = built[n, "asr"][3].system
        mcr = built[n, "mcr"][3].system
        assert asr.states == mcr.states
        for x2 in asr.states:
            for u2 in asr.inputs:
                assert asr.post(x2, u2) <= mcr.post(x2, u2)


def test_asr_strictly_smaller_somewhere_in_two_d(built):
    asr = built[2, "asr"][3].system
    mcr = built[2, "mcr"][3].system
    assert any(len(asr.post(x, u)) < len(mcr.post(x, u)) for x in asr.states for u in asr.inputs)


def test_asrbb_deterministic(built):
    for n in (1, 2):
        s2 = built[n, "asrbb"][3].system
        for x2 in s2.states:
            for u2 in s2.available_inputs(x2):
                assert len(s2.post(x2, u2)) == 1


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("t", ["asr", "mcr", "asrbb", "asrb"])
def test_sampled_soundness(built, n, t):
    dyn, gb, gp, abst = built[n, t]
    bad = soundness_violations(abst, dyn, gb, gp, 10_000, np.random.default_rng(11), tol=1e-9)
    assert bad == []


def test_mcr_matches_ball_intersection(built):
    # with V the 2-norm, S(x2', ε) meets S(c, ρε) iff ‖x2' - c‖ <= ε + ρε
    dyn, gb, gp, abst = built[2, "mcr"]
    for x2 in abst.system.states:
        for u2 in dyn.U2:
            c, level = over_approx_target(dyn, gb, x2, u2, gp.eps)
            want = {p for p in abst.grid.points
                    if np.linalg.norm(np.asarray(p) - c) <= gp.eps + level + 1e-9}
            assert abst.system.post(x2, u2) == want


def test_over_approximation_bound_sampled():
    rng = np.random.default_rng(5)
    for n in (1, 2):
        dyn, gb = affine_testbed(n)
        for eps in (0.1, 0.25):
            x2s = rng.uniform(0, 1, (10_000, n))
            u2s = np.asarray(dyn.U2)[rng.integers(len(dyn.U2), size=10_000)]
            for x2, u2 in zip(x2s, u2s):
                x = sample_cell(rng, gb, x2, eps, np.full(n, -np.inf), np.full(n, np.inf), 1)[0]
                c, level = over_approx_target(dyn, gb, x2, u2, eps)
                assert gb.value(dyn.step(x, gb.feedback(x, x2, u2)), c) <= level + 1e-9


def test_snapped_image_bound_sampled():
    rng = np.random.default_rng(6)
    for n, eta, eps, eps_t in ((1, 0.25, 0.25, 0.25), (2, 0.125, 0.25, 0.25), (2, 0.25, 0.1, 0.25)):
        dyn, gb = affine_testbed(n)
        assert snapped_image_bound(gb, eta, eps, eps_t, n).holds
        grid = Grid(dyn.lo, dyn.hi, eta)
        free = (np.full(n, -np.inf), np.full(n, np.inf))
        for _ in range(10_000):
            x2 = grid.points[rng.integers(len(grid))]
            u2 = dyn.U2[rng.integers(len(dyn.U2))]
            x1 = sample_cell(rng, gb, x2, eps, *free, 1)[0]
            target = grid.label(grid.nearest_key(dyn.step(x2, u2), clamp=False))
            x1p = dyn.step(x1, gb.feedback(x1, x2, u2))
            assert gb.value(x1p, target) <= eps_t + 1e-9


def test_snapped_image_bound_arithmetic():
    _, gb = affine_testbed(1)
    rep = snapped_image_bound(gb, 0.25, 0.25, 0.25, 1)
    assert rep.holds and rep.rhs == pytest.approx(0.25)
    assert not snapped_image_bound(gb, 0.3, 0.25, 0.25, 1).holds
    assert not snapped_image_bound(gb, 0.1, 0.25, 0.1, 1).holds


def test_asrb_without_contraction():
    dyn, gb = affine_testbed(1, a=1.0, k=0.0)
    assert gb.rho == pytest.approx(1.0)
    gp = GridParams(0.25, 0.25, 0.2, 0.1)
    assert check_parameters("asrb", gb, gp, 1).ok
    assert not check_parameters("asrbb", gb, GridParams(0.25, 0.25), 1).ok
    abst = construct_abstraction("asrb", dyn, gb, gp)
    assert abst.system.post((0.5,), (0.0,))
    assert soundness_violations(abst, dyn, gb, gp, 2000, np.random.default_rng(3)) == []


def test_dropped_transitions_recorded():
    dyn, gb = affine_testbed(1, a=1.0, k=-0.5, inputs=(0.0, 0.3))
    abst = construct_abstraction("asrbb", dyn, gb, GridParams(0.25, 0.25))
    dropped = abst.metadata["dropped_transitions"]
    assert [[1.0], [0.3]] in dropped
    assert not abst.system.post((1.0,), (0.3,))


def test_grid_params_validation():
    for bad in ((0, 0.25), (0.25, -1.0)):
        with pytest.raises(UsageError):
            GridParams(*bad)
    with pytest.raises(UsageError):
        GridParams(0.25, 0.25, eta2=0.0, eps2=0.1)


def test_closed_form_interface_maps(built):
    dyn, gb, gp, abst = built[1, "mcr"]
    (u1,) = abst.interface.h1((0.5,), (0.0,), (0.4,))
    assert u1[0] == pytest.approx(-0.4 * (0.4 - 0.5))
    assert abst.interface.h2((0.45,)) == {(0.5,)}
    assert math.isclose(abst.metadata["rho"], 0.5)
