"""Grid abstractions of contractive dynamics.

Abstract states are the points of the lattice ηZ^n (anchored at 0) that lie
in the state box; x1 is related to x2 when V(x1, x2) <= ε. Each relation type
gets its own abstract transition map, and a closed-form interface built from
the stabilizing feedback κ.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .exceptions import ParameterError, UsageError
from .interface import InterfaceSpec
from .relations import RelationType
from .system import EMPTY, FiniteSystem

_T = RelationType
TIE = 1e-12
RELATION_TOL = 1e-9


def _ident(r):
    return r


@dataclass(frozen=True)
class Dynamics:
    """x+ = f(x, u) on an axis-aligned box, with a finite abstract input set."""
    n: int
    nu: int
    f: Callable
    lo: tuple
    hi: tuple
    U2: tuple
    name: str = "dynamics"

    def step(self, x, u) -> np.ndarray:
        return np.asarray(self.f(np.asarray(x, float), np.asarray(u, float)), float)

    def in_box(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, float)
        return bool(np.all(x >= np.asarray(self.lo) - tol) and np.all(x <= np.asarray(self.hi) + tol))


@dataclass(frozen=True)
class GrowthBound:
    """Growth-bound function V under feedback κ with contraction factor ρ.

    ``alpha_lo``/``alpha_hi`` sandwich V between class-K∞ functions of the
    Euclidean distance and ``gamma`` bounds V(x,y) - V(x,z). Inverses are
    needed for the grid parameter inequalities.
    """
    V: Callable
    kappa: Callable
    rho: float
    alpha_lo: Callable = _ident
    alpha_hi: Callable = _ident
    gamma: Callable = _ident
    alpha_lo_inv: Callable = _ident
    alpha_hi_inv: Callable = _ident
    gamma_inv: Callable = _ident
    euclidean: bool = False
    name: str = "V"

    def value(self, x, y) -> float:
        return float(self.V(np.asarray(x, float), np.asarray(y, float)))

    def values(self, xs, y) -> np.ndarray:
        """V(x, y) for each row x of ``xs``."""
        xs = np.asarray(xs, float)
        y = np.asarray(y, float)
        if self.euclidean:
            return np.linalg.norm(xs - y, axis=-1)
        return np.array([self.value(x, y) for x in xs])

    def feedback(self, y, x, u) -> np.ndarray:
        return np.asarray(self.kappa(np.asarray(y, float), np.asarray(x, float),
                                     np.asarray(u, float)), float)


def _euclid(x, y):
    return float(np.linalg.norm(np.asarray(x) - np.asarray(y)))


def euclidean_growth_bound(kappa, rho) -> GrowthBound:
    """V(x, y) = ‖x - y‖2 with identity comparison functions."""
    return GrowthBound(_euclid, kappa, float(rho), euclidean=True, name="euclidean")


def affine_testbed(n: int = 1, a: float = 0.9, k: float = -0.4, lo=0.0, hi=1.0,
                   inputs=(0.0, 0.05)):
    """f(x,u) = a x + u with κ(y,x,u) = u + k (y - x), so ρ = |a + k|.

    U2 is the grid ``inputs``^n. Returns ``(Dynamics, GrowthBound)``.
    """
    A = a * np.eye(n)
    K = k * np.eye(n)
    rho = float(np.linalg.norm(A + K, 2))

    def f(x, u):
        return A @ x + u

    def kappa(y, x, u):
        return u + K @ (y - x)

    U2 = tuple(tuple(float(c) for c in p) for p in itertools.product(inputs, repeat=n))
    dyn = Dynamics(n, n, f, (float(lo),) * n, (float(hi),) * n, U2,
                   name=f"affine{n}d(a={a},k={k})")
    return dyn, euclidean_growth_bound(kappa, rho)


@dataclass(frozen=True)
class GridParams:
    eta: float
    eps: float
    eta2: float | None = None
    eps2: float | None = None

    def __post_init__(self):
        for name in ("eta", "eps"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        for name in ("eta2", "eps2"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise UsageError(f"{name} must be positive")


def _label(v) -> tuple:
    return tuple(float(c) for c in np.atleast_1d(v))


def _lattice(k, eta: float) -> float:
    # rounding keeps labels such as 0.6 free of representation noise
    return float(round(int(k) * eta, 12)) + 0.0


class Grid:
    """Lattice points k·η inside the box [lo, hi], in lexicographic order."""

    def __init__(self, lo, hi, eta: float):
        if not eta > 0:
            raise UsageError("grid step must be positive")
        self.eta = float(eta)
        self.lo = np.atleast_1d(np.asarray(lo, float))
        self.hi = np.atleast_1d(np.asarray(hi, float))
        self.n = len(self.lo)
        self.kmin = np.ceil(self.lo / self.eta - 1e-9).astype(int)
        self.kmax = np.floor(self.hi / self.eta + 1e-9).astype(int)
        ranges = [range(a, b + 1) for a, b in zip(self.kmin, self.kmax)]
        self.keys = list(itertools.product(*ranges))
        self.points = [self.label(k) for k in self.keys]
        self.array = np.array([list(p) for p in self.points], float).reshape(-1, self.n)
        self._by_key = dict(zip(self.keys, self.points))

    def label(self, k) -> tuple:
        return tuple(_lattice(ki, self.eta) for ki in k)

    def __len__(self):
        return len(self.points)

    def __contains__(self, p):
        return self.key(p) in self._by_key

    def key(self, p) -> tuple:
        return tuple(int(round(c / self.eta)) for c in p)

    def near(self, x, radius: float) -> list:
        """Grid points whose Euclidean distance to x may be at most ``radius``."""
        x = np.atleast_1d(np.asarray(x, float))
        a = np.maximum(np.ceil((x - radius) / self.eta - 1e-9).astype(int), self.kmin)
        b = np.minimum(np.floor((x + radius) / self.eta + 1e-9).astype(int), self.kmax)
        if np.any(a > b):
            return []
        ranges = [range(i, j + 1) for i, j in zip(a, b)]
        return [self._by_key[k] for k in itertools.product(*ranges)]

    def nearest_key(self, x, clamp: bool = True) -> tuple:
        """∞-norm argmin, ties broken toward the lexicographically smallest point.

        With ``clamp`` the argmin runs over the points in the box, otherwise
        over the whole lattice.
        """
        x = np.atleast_1d(np.asarray(x, float)) / self.eta
        c = np.ceil(x - 0.5 - TIE)
        if clamp:
            c = np.clip(c, self.kmin, self.kmax)
        m = float(np.max(np.abs(x - c)))
        v = np.ceil(x - m - TIE)
        if clamp:
            v = np.maximum(v, self.kmin)
        return tuple(int(k) for k in v)


def build_grid(bounds, eta: float) -> list:
    """Lattice points of ηZ^n inside ``bounds`` = [(lo, hi), ...], lexicographic."""
    lo = [b[0] for b in bounds]
    hi = [b[1] for b in bounds]
    return Grid(lo, hi, eta).points


def quantize(gb: GrowthBound, grid: Grid, eps: float, x, tol: float = 0.0) -> frozenset:
    """{x2 in grid : V(x, x2) <= ε}."""
    x = np.atleast_1d(np.asarray(x, float))
    cand = grid.near(x, gb.alpha_lo_inv(eps + tol) + TIE)
    if not cand:
        return EMPTY
    v = gb.values(np.array(cand), x) if gb.euclidean else np.array([gb.value(x, c) for c in cand])
    return frozenset(c for c, vi in zip(cand, v) if vi <= eps + tol)


def nearest_cell(grid: Grid, x) -> tuple:
    return grid.label(grid.nearest_key(x, clamp=True))


def snap(grid: Grid, x):
    """Nearest point of the whole lattice, or None when it lies outside the box."""
    k = grid.nearest_key(x, clamp=False)
    return grid._by_key.get(k)


def over_approx_target(dyn: Dynamics, gb: GrowthBound, x2, u2, eps: float):
    """(center, level): g(S(x2, ε)) lies in S(f(x2, u2), ρ ε)."""
    return dyn.step(x2, u2), gb.rho * eps


@dataclass(frozen=True)
class Inequality:
    name: str
    lhs: float
    rhs: float
    holds: bool
    strict: bool = False

    def __str__(self):
        op = "<" if self.strict else "<="
        mark = "ok" if self.holds else "FAILS"
        return f"{self.name}: {self.lhs:.6g} {op} {self.rhs:.6g} ({mark})"


@dataclass(frozen=True)
class ParameterReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    @property
    def failed(self) -> tuple:
        return tuple(c for c in self.checks if not c.holds)

    def __bool__(self):
        return self.ok


def _le(name, lhs, rhs):
    return Inequality(name, float(lhs), float(rhs), bool(lhs <= rhs + TIE))


def _safe_inv(fn, v):
    return fn(v) if v > 0 else -math.inf


def check_parameters(t, gb: GrowthBound, gp: GridParams, n: int) -> ParameterReport:
    """Evaluate the grid parameter inequalities a construction of type ``t`` needs."""
    t = RelationType.parse(t)
    c = 2.0 / math.sqrt(n)
    eps, eta, rho = gp.eps, gp.eta, gb.rho
    checks = [_le("strictness: eta <= 2/sqrt(n)*alpha_hi^-1(eps)", eta, c * gb.alpha_hi_inv(eps))]
    if t is _T.ASRBB:
        checks.append(Inequality("contraction: rho < 1", rho, 1.0, rho < 1, strict=True))
        bound = c * min(gb.alpha_hi_inv(eps), _safe_inv(gb.gamma_inv, (1 - rho) * eps))
        checks.append(_le("asrbb: eta <= 2/sqrt(n)*min(alpha_hi^-1(eps), gamma^-1((1-rho)*eps))",
                          eta, bound))
    elif t is _T.ASRB:
        if gp.eta2 is None or gp.eps2 is None:
            raise UsageError("asrb needs the sub-grid parameters eta2 and eps2")
        checks.append(_le("subgrid strictness: eta2 <= 2/sqrt(n)*alpha_hi^-1(eps2)",
                          gp.eta2, c * gb.alpha_hi_inv(gp.eps2)))
        checks.append(Inequality("prediction: rho*eps2 < eps", rho * gp.eps2, eps,
                                 rho * gp.eps2 < eps, strict=True))
        bound = c * min(gb.alpha_hi_inv(eps), _safe_inv(gb.gamma_inv, eps - rho * gp.eps2))
        checks.append(_le("asrb: eta <= 2/sqrt(n)*min(alpha_hi^-1(eps), gamma^-1(eps-rho*eps2))",
                          eta, bound))
    return ParameterReport(tuple(checks))


def snapped_image_bound(gb: GrowthBound, eta: float, eps: float, eps_target: float, n: int):
    """Condition under which g(S(x2, ε)) ⊆ S(snap(f(x2,u2)), ε_target)."""
    c = 2.0 / math.sqrt(n)
    return _le("snapped image: eta <= 2/sqrt(n)*gamma^-1(eps_target - rho*eps)",
               eta, c * _safe_inv(gb.gamma_inv, eps_target - gb.rho * eps))


# covers ---------------------------------------------------------------------

def _interval_cover(a: float, b: float, centers, radius: float):
    """Minimal cover of [a, b] by intervals [c - r, c + r]; None if impossible."""
    centers = sorted(centers)
    chosen = []
    pos = a
    first = True
    while first or pos < b - TIE:
        first = False
        best = None
        for c in centers:
            if c - radius <= pos + TIE and c + radius >= pos - TIE:
                if best is None or c + radius > best + radius + TIE:
                    best = c
        if best is None or (chosen and best + radius <= pos + TIE and pos < b - TIE):
            return None
        chosen.append(best)
        if best + radius >= b - TIE:
            break
        pos = best + radius
    return chosen


def _sample_region(gb: GrowthBound, center, level, lo, hi, h):
    """Sample points whose h-grid covers S(center, level) ∩ box."""
    center = np.atleast_1d(np.asarray(center, float))
    R = gb.alpha_lo_inv(level) if level > 0 else 0.0
    a = np.maximum(center - R, lo)
    b = np.minimum(center + R, hi)
    if np.any(a > b + TIE):
        return np.zeros((0, len(center))), 0.0
    axes = []
    for ai, bi in zip(a, b):
        m = max(1, int(math.ceil((bi - ai) / h - 1e-12)))
        axes.append(np.linspace(ai, bi, m + 1))
    step = max((ax[1] - ax[0]) if len(ax) > 1 else 0.0 for ax in axes)
    pts = np.array(list(itertools.product(*axes)), float)
    delta = step * math.sqrt(len(center)) / 2
    keep = gb.values(pts, center) <= level + gb.gamma(delta) + TIE
    return pts[keep], delta


def ball_cover(gb: GrowthBound, center, level, candidates, radius, lo, hi):
    """Greedy cover of S(center, level) ∩ box by cells S(c, radius), c in ``candidates``.

    Returns the chosen centers (in candidate order) or None when no cover could
    be certified. A candidate that contains the whole target set alone wins.
    Otherwise points are sampled on a fine grid and every sample must be
    covered with a margin γ(δ) equal to the sampling resolution, which makes
    the cover exact for the Euclidean V.
    """
    center = np.atleast_1d(np.asarray(center, float))
    cands = list(candidates)
    if not cands:
        return None
    R = gb.alpha_lo_inv(level) if level > 0 else 0.0
    if gb.euclidean:
        lo_a, hi_a = np.asarray(lo, float), np.asarray(hi, float)
        if np.any(np.maximum(center - R, lo_a) > np.minimum(center + R, hi_a) + TIE):
            return []
        d = np.linalg.norm(np.array(cands, float) - center, axis=1)
        for c, di in zip(cands, d):
            if di + level <= radius + TIE:
                return [c]
        if len(center) == 1:
            a = max(center[0] - level, float(lo_a[0]))
            b = min(center[0] + level, float(hi_a[0]))
            chosen = _interval_cover(a, b, [c[0] for c in cands], radius)
            if chosen is None:
                return None
            picked = set(chosen)
            return [c for c in cands if c[0] in picked]
    h = max(min(radius, level if level > 0 else radius) / 4.0, 1e-6)
    pts, delta = _sample_region(gb, center, level, lo, hi, h)
    if not len(pts):
        return []
    margin = radius - gb.gamma(delta)
    if margin <= 0:
        return None
    C = np.array(cands, float)
    cover = np.stack([gb.values(pts, c) <= margin + TIE for c in C], axis=1)
    if not np.all(cover.any(axis=1)):
        return None
    uncovered = np.ones(len(pts), bool)
    chosen = []
    while uncovered.any():
        gains = cover[uncovered].sum(axis=0)
        j = int(np.argmax(gains))
        chosen.append(j)
        uncovered &= ~cover[:, j]
    return [cands[j] for j in sorted(chosen)]


def subgrid_cover(gb: GrowthBound, x2, eps: float, eta2: float, eps2: float,
                  lo=None, hi=None) -> list:
    """Points z of the sub-lattice η'Z^n whose ε'-cells cover R^-1(x2) = S(x2, ε) ∩ box.

    The cover is greedy (exact interval cover in one dimension), so it is not
    claimed to be of minimum cardinality.
    """
    x2 = np.atleast_1d(np.asarray(x2, float))
    n = len(x2)
    lo = np.full(n, -np.inf) if lo is None else np.atleast_1d(np.asarray(lo, float))
    hi = np.full(n, np.inf) if hi is None else np.atleast_1d(np.asarray(hi, float))
    reach = gb.alpha_lo_inv(eps) + gb.alpha_lo_inv(eps2)
    kmin = np.ceil((x2 - reach) / eta2 - 1e-9).astype(int)
    kmax = np.floor((x2 + reach) / eta2 + 1e-9).astype(int)
    cands = [tuple(_lattice(k, eta2) for k in key)
             for key in itertools.product(*[range(a, b + 1) for a, b in zip(kmin, kmax)])]
    lo_c = np.where(np.isfinite(lo), lo, x2 - reach)
    hi_c = np.where(np.isfinite(hi), hi, x2 + reach)
    chosen = ball_cover(gb, x2, eps, cands, eps2, lo_c, hi_c)
    if chosen is None:
        raise ParameterError(f"could not certify a sub-grid cover of the cell at {tuple(x2)}")
    return chosen


# constructions ---------------------------------------------------------------

class Abstraction(NamedTuple):
    system: FiniteSystem
    interface: InterfaceSpec
    metadata: dict
    grid: Grid
    related: Callable


def _related_fn(gb, eps):
    def related(x1, x2):
        return gb.value(x1, x2) <= eps + RELATION_TOL
    return related


def _rt_image(gb, grid, eps):
    def image(x1, z1):
        return frozenset((z1,)) if z1 in grid and gb.value(x1, z1) <= eps + RELATION_TOL else EMPTY
    return image


def _require(report: ParameterReport):
    if not report.ok:
        raise ParameterError("parameter check failed: " + "; ".join(str(c) for c in report.failed),
                             failed=[c.name for c in report.failed])


def construct_abstraction(t, dyn: Dynamics, gb: GrowthBound, gp: GridParams,
                          check: bool = True) -> Abstraction:
    """Abstract ``dyn`` on the grid for t in {asr, mcr, asrbb} (asrb has its own builder)."""
    t = RelationType.parse(t)
    if t is _T.ASRB:
        return construct_asrb_abstraction(dyn, gb, gp, check=check)
    if t is _T.FRR:
        raise UsageError("no grid construction is provided for frr")
    report = check_parameters(t, gb, gp, dyn.n)
    if check:
        _require(report)
    grid = Grid(dyn.lo, dyn.hi, gp.eta)
    eps, rho = gp.eps, gb.rho
    lo, hi = np.asarray(dyn.lo, float), np.asarray(dyn.hi, float)
    trans, dropped, fallback = {}, [], []
    for x2 in grid.points:
        for u2 in dyn.U2:
            c, level = over_approx_target(dyn, gb, x2, u2, eps)
            if t is _T.ASRBB:
                tgt = snap(grid, c)
                succ = [tgt] if tgt is not None else []
            else:
                reach = gb.alpha_lo_inv(eps) + gb.alpha_lo_inv(level) + RELATION_TOL
                mcr = [p for p in grid.near(c, reach + TIE)
                       if gb.value(p, c) <= reach] if gb.euclidean else \
                      [p for p in grid.points if _cells_meet(gb, p, eps, c, level, lo, hi)]
                succ = mcr
                if t is _T.ASR and mcr:
                    cover = ball_cover(gb, c, level, mcr, eps, lo, hi)
                    if cover is None:
                        fallback.append((x2, u2))
                    else:
                        succ = cover
            if succ:
                trans[(x2, u2)] = succ
            else:
                dropped.append((x2, u2))
    system = FiniteSystem(grid.points, dyn.U2, trans)
    iface = _closed_form_interface(t, dyn, gb, gp, grid, system)
    meta = _metadata(t, dyn, gb, gp, report, grid, dropped, fallback)
    return Abstraction(system, iface, meta, grid, _related_fn(gb, eps))


def _cells_meet(gb, p, eps, c, level, lo, hi):
    # sampled intersection test for general V
    pts, _ = _sample_region(gb, c, level, lo, hi, max(level, eps) / 8.0)
    return bool(len(pts)) and bool(np.any(gb.values(pts, p) <= eps))


def _closed_form_interface(t, dyn, gb, gp, grid, system) -> InterfaceSpec:
    eps = gp.eps
    F2 = system.post

    def q(x):
        return quantize(gb, grid, eps, x, tol=RELATION_TOL)

    def u1_of(x1, z1, u2):
        return frozenset((_label(gb.feedback(x1, z1, u2)),))

    if t is _T.ASRBB:
        def h1(z1, u2, x1, z1p):
            return u1_of(x1, z1, u2) if z1p in F2(z1, u2) else EMPTY

        def h2(z1, u2):
            return F2(z1, u2)
    else:
        def h1(z1, u2, x1):
            return u1_of(x1, z1, u2) if F2(z1, u2) else EMPTY

        if t is _T.ASR:
            def h2(z1, u2, x1p):
                return F2(z1, u2) & q(x1p)
        else:
            def h2(x1p):
                return q(x1p)
    return InterfaceSpec(t, grid.points, h1, h2, rt_image=_rt_image(gb, grid, eps),
                         abstract_inputs=dyn.U2)


def _metadata(t, dyn, gb, gp, report, grid, dropped, fallback, **extra):
    meta = {
        "type": t.value,
        "dynamics": dyn.name,
        "V": gb.name,
        "rho": gb.rho,
        "eta": gp.eta,
        "eps": gp.eps,
        "n": dyn.n,
        "abstract_states": len(grid),
        "parameters_ok": report.ok,
        "inequalities": [str(c) for c in report.checks],
        "dropped_transitions": [[list(x), list(u)] for x, u in dropped],
        "cover_fallbacks": [[list(x), list(u)] for x, u in fallback],
    }
    if gp.eta2 is not None:
        meta["eta2"] = gp.eta2
        meta["eps2"] = gp.eps2
    meta.update(extra)
    return meta


def construct_asrb_abstraction(dyn: Dynamics, gb: GrowthBound, gp: GridParams,
                               check: bool = True) -> Abstraction:
    """Predictive abstraction built from sub-grid covers of every cell."""
    report = check_parameters(_T.ASRB, gb, gp, dyn.n)
    if check:
        _require(report)
    grid = Grid(dyn.lo, dyn.hi, gp.eta)
    lo, hi = np.asarray(dyn.lo, float), np.asarray(dyn.hi, float)
    covers = {x2: subgrid_cover(gb, x2, gp.eps, gp.eta2, gp.eps2, lo, hi) for x2 in grid.points}
    trans, dropped = {}, []
    for x2 in grid.points:
        for u2 in dyn.U2:
            succ = set()
            ok = True
            for z in covers[x2]:
                u1p = gb.feedback(z, x2, u2)
                tgt = snap(grid, dyn.step(z, u1p))
                if tgt is None:
                    ok = False
                    break
                succ.add(tgt)
            if ok and succ:
                trans[(x2, u2)] = succ
            else:
                dropped.append((x2, u2))
    system = FiniteSystem(grid.points, dyn.U2, trans)
    F2 = system.post

    def pivot(z1, x1):
        zs = covers.get(z1)
        if not zs:
            return None
        v = gb.values(np.array(zs, float), x1) if gb.euclidean else \
            np.array([gb.value(x1, z) for z in zs])
        return zs[int(np.argmin(v))]

    def h1(z1, u2, x1):
        if not F2(z1, u2):
            return EMPTY
        z = pivot(z1, x1)
        u1p = gb.feedback(z, z1, u2)
        return frozenset((_label(gb.feedback(x1, z, u1p)),))

    def h2(z1, u2, x1, u1):
        if not F2(z1, u2):
            return EMPTY
        z = pivot(z1, x1)
        tgt = snap(grid, dyn.step(z, gb.feedback(z, z1, u2)))
        return frozenset((tgt,)) if tgt is not None else EMPTY

    iface = InterfaceSpec(_T.ASRB, grid.points, h1, h2, rt_image=_rt_image(gb, grid, gp.eps),
                          abstract_inputs=dyn.U2)
    sizes = [len(covers[x]) for x in grid.points]
    meta = _metadata(_T.ASRB, dyn, gb, gp, report, grid, dropped, [],
                     max_cover=max(sizes) if sizes else 0)
    return Abstraction(system, iface, meta, grid, _related_fn(gb, gp.eps))


def sample_cell(rng: np.random.Generator, gb: GrowthBound, x2, eps, lo, hi, size: int):
    """Uniform samples of S(x2, ε) ∩ box by rejection from the bounding box."""
    x2 = np.atleast_1d(np.asarray(x2, float))
    R = gb.alpha_lo_inv(eps)
    a = np.maximum(x2 - R, lo)
    b = np.minimum(x2 + R, hi)
    out = []
    while len(out) < size:
        pts = rng.uniform(a, b, size=(max(2 * size, 16), len(x2)))
        keep = pts[gb.values(pts, x2) <= eps]
        out.extend(keep[: size - len(out)])
    return np.array(out)


def soundness_violations(abst: Abstraction, dyn: Dynamics, gb: GrowthBound, gp: GridParams,
                         samples: int, rng: np.random.Generator, tol: float = 1e-9) -> list:
    """Sample (x1, x2, u2) and test the defining formula of the abstraction's type.

    The concrete input is taken from the closed-form interface, so this checks
    the construction and the interface together.
    """
    t = abst.interface.kind
    s2, grid, iface = abst.system, abst.grid, abst.interface
    lo, hi = np.asarray(dyn.lo, float), np.asarray(dyn.hi, float)
    pairs = [(x2, u2) for x2 in grid.points for u2 in s2.available_inputs(x2)]
    idx = rng.integers(0, len(pairs), size=samples)
    bad = []
    for i in idx:
        x2, u2 = pairs[int(i)]
        x1 = sample_cell(rng, gb, x2, gp.eps, lo, hi, 1)[0]
        f2 = s2.post(x2, u2)
        if t is _T.ASRBB:
            (x2p,) = iface.h2(x2, u2)
            (u1,) = iface.h1(x2, u2, x1, x2p)
        else:
            (u1,) = iface.h1(x2, u2, x1)
        x1p = dyn.step(x1, u1)
        if t is _T.MCR:
            img = quantize(gb, grid, gp.eps, x1p, tol=tol)
            ok = bool(img) and img <= f2
        elif t is _T.ASR:
            ok = bool(quantize(gb, grid, gp.eps, x1p, tol=tol) & f2)
        else:
            if t is _T.ASRB:
                (x2p,) = iface.h2(x2, u2, x1, u1)
            ok = x2p in f2 and gb.value(x1p, x2p) <= gp.eps + tol
        if not ok:
            bad.append((tuple(x1), x2, u2))
    return bad
