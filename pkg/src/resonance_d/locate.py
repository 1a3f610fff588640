"""Zeros of the determinant in a k-plane rectangle.

Zeros are counted with the argument principle along the rectangle boundary,
boxes holding more than one zero are split into four, and isolated zeros
are polished with Muller's method.
"""
from __future__ import annotations

import cmath
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dfun import DConfig, DEvaluator, d_matrix_batch, select_theta
from .errors import (NotARoot, PhaseTrackingFailed, RegionShrunk,
                     ResonanceError, ZeroOnBoundary)
from .potential import PotentialSpec
from .surface import SurfacePoint

BOUNDARY_FLOOR = 1e-10
MAX_REFINE = 8
MULLER_MAXIT = 50
SPLIT_FRACTIONS = (0.5, 0.47, 0.53, 0.41, 0.59)


@dataclass(frozen=True)
class ContourSpec:
    """Axis-aligned rectangle in the k-plane, given by two opposite corners."""

    rect: Tuple[complex, complex]
    max_depth: int = 8
    boundary_samples: int = 64
    exclusion_margin: float = 1e-3

    def __post_init__(self):
        z1, z2 = complex(self.rect[0]), complex(self.rect[1])
        lo = complex(min(z1.real, z2.real), min(z1.imag, z2.imag))
        hi = complex(max(z1.real, z2.real), max(z1.imag, z2.imag))
        if not (lo.real < hi.real and lo.imag < hi.imag):
            raise ValueError("degenerate rectangle")
        if self.max_depth < 1 or self.boundary_samples < 2:
            raise ValueError("max_depth >= 1 and boundary_samples >= 2 required")
        object.__setattr__(self, "rect", (lo, hi))

    @property
    def lo(self) -> complex:
        return self.rect[0]

    @property
    def hi(self) -> complex:
        return self.rect[1]

    @property
    def diameter(self) -> float:
        return abs(self.hi - self.lo)


@dataclass
class ResonanceResult:
    point: SurfacePoint
    abs_D: float
    multiplicity: int
    C1: complex
    C2: complex
    eigen_residual: float
    newton_iters: int
    theta: float = 0.0


@dataclass
class Cluster:
    """A box at maximal depth that still encloses several zeros, or whose
    zero could not be refined."""

    lo: complex
    hi: complex
    count: int
    reason: str


class ResonanceList(list):
    """List of ResonanceResult with the diagnostics of the search attached."""

    def __init__(self, items=(), clusters=(), messages=(), n_evals=0, regions=()):
        super().__init__(items)
        self.clusters: List[Cluster] = list(clusters)
        self.messages: List[str] = list(messages)
        self.n_evals = n_evals
        self.regions: List[ContourSpec] = list(regions)


def admissible_regions(contour: ContourSpec) -> List[ContourSpec]:
    """Pull the rectangle off the cut Re k = 0, splitting it when it straddles the cut."""
    m = contour.exclusion_margin
    lo, hi = contour.lo, contour.hi
    if lo.real >= m or hi.real <= -m:
        return [contour]
    out = []
    if hi.real > m:
        out.append(replace(contour, rect=(complex(m, lo.imag), hi)))
    if lo.real < -m:
        out.append(replace(contour, rect=(lo, complex(-m, hi.imag))))
    warnings.warn(f"region {lo}..{hi} touches Re k = 0; replaced by {len(out)} "
                  f"rectangle(s) at distance {m}", RegionShrunk, stacklevel=3)
    return out


def _edge_points(lo: complex, hi: complex, n: int) -> np.ndarray:
    """Counter-clockwise boundary nodes, n per edge, starting at lo."""
    s = np.arange(n) / n
    c = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)]
    pts = [c[i] + (c[(i + 1) % 4] - c[i]) * s for i in range(4)]
    return np.concatenate(pts)


def _winding(ev: DEvaluator, lo: complex, hi: complex, n: int) -> int:
    z = _edge_points(lo, hi, n)
    z = np.append(z, z[0])
    f = ev(z)
    for level in range(MAX_REFINE + 1):
        small = np.abs(f) < BOUNDARY_FLOOR
        if np.any(small):
            raise ZeroOnBoundary(f"|D| < {BOUNDARY_FLOOR} at k={z[np.argmax(small)]}")
        dphi = np.angle(f[1:] / f[:-1])
        bad = np.abs(dphi) >= math.pi / 2
        if not np.any(bad):
            total = float(np.sum(dphi)) / (2 * math.pi)
            w = int(round(total))
            if abs(total - w) > 1e-3:
                raise PhaseTrackingFailed(f"non-integer winding {total}")
            return w
        if level == MAX_REFINE:
            # a jump that survives refinement next to a near-zero is a zero on the edge
            near = np.minimum(np.abs(f[:-1]), np.abs(f[1:]))[bad]
            if np.max(np.abs(dphi[bad])) > 0.9 * math.pi or np.min(near) < 1e-6 * np.median(np.abs(f)):
                raise ZeroOnBoundary(f"zero close to the edge of box {lo}..{hi}")
            break
        idx = np.nonzero(bad)[0]
        mids = 0.5 * (z[idx] + z[idx + 1])
        fm = ev(mids)
        z = np.insert(z, idx + 1, mids)
        f = np.insert(f, idx + 1, fm)
    raise PhaseTrackingFailed(f"phase jumps persist on box {lo}..{hi} after {MAX_REFINE} refinements")


def count_zeros(contour: ContourSpec, spec: PotentialSpec, cfg: DConfig = DConfig(),
                evaluator: Optional[DEvaluator] = None) -> int:
    """Winding number of D along the rectangle boundary."""
    ev = evaluator or DEvaluator(spec, cfg)
    total = 0
    for c in admissible_regions(contour):
        total += _winding(ev, c.lo, c.hi, c.boundary_samples)
    return total


def muller(f, x0, x1, x2, maxit=MULLER_MAXIT, xtol=1e-14):
    """Muller iteration for a complex scalar function; returns (root, |f|, iterations)."""
    f0, f1, f2 = f(x0), f(x1), f(x2)
    it = 0
    for it in range(1, maxit + 1):
        h1, h2 = x1 - x0, x2 - x1
        if h1 == 0 or h2 == 0 or h1 + h2 == 0:
            break
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = cmath.sqrt(b * b - 4 * a * f2)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0:
            # secant fallback
            if f2 == f1:
                break
            dx = -f2 * h2 / (f2 - f1)
        else:
            dx = -2 * f2 / den
        x3 = x2 + dx
        f3 = f(x3)
        x0, x1, x2, f0, f1, f2 = x1, x2, x3, f1, f2, f3
        if f3 == 0 or abs(dx) < xtol * max(1.0, abs(x3)):
            break
    return x2, abs(f2), it


def _null_vector(M):
    _, s, vh = np.linalg.svd(M)
    v = vh.conj()[-1]
    return v, s[-1] / s[0] if s[0] > 0 else math.inf


def _sample_xs(spec: PotentialSpec, n: int = 20):
    if spec.support is not None:
        a1, a2 = spec.support
        return np.linspace(a1 - 1.0, a2 + 1.0, n)
    return np.linspace(-3.0, 3.0, n)


def eigen_data(point: SurfacePoint, spec: PotentialSpec, cfg: DConfig = DConfig(),
               sample_xs: Optional[Sequence[float]] = None):
    """Null-vector coefficients, eigenfunction samples and integral-equation residual.

    Returns (C1, C2, xs, mu, residual, theta).
    """
    xs = np.asarray(_sample_xs(spec) if sample_xs is None else sample_xs, dtype=float)
    theta = select_theta(point.k, spec, cfg)
    anchors = (cfg.x_eval[0],) + tuple(float(x) for x in xs)
    c = replace(cfg, x_eval=anchors)
    D, Dp, u = d_matrix_batch([point.k], spec, theta, c, with_u=True)
    M = np.array([[D[0, 0, 0], D[0, 0, 1]], [Dp[0, 0, 0], Dp[0, 0, 1]]])
    v, ratio = _null_vector(M)
    if ratio > 0.1:
        raise NotARoot(f"k={point.k}: singular value ratio {ratio:.3g} > 0.1")
    C1, C2 = complex(v[0]), complex(v[1])
    mu = C1 * u[1:, 0, 0] + C2 * u[1:, 0, 1]
    Dmu = C1 * D[1:, 0, 0] + C2 * D[1:, 0, 1]
    # D(x, mu) = 0 is the integral equation mu = -(1/2k) int e^{-k|x-y|} V mu dy
    residual = float(np.max(np.abs(Dmu)) / max(np.max(np.abs(mu)), 1e-300))
    return C1, C2, xs, mu, residual, theta


def eigenfunction(result: ResonanceResult, spec: PotentialSpec, cfg: DConfig = DConfig(),
                  sample_xs: Optional[Sequence[float]] = None):
    """mu = C1 nu1 + C2 nu2 sampled at ray parameters sample_xs, as (x, value) pairs."""
    _, _, xs, mu, _, _ = eigen_data(result.point, spec, cfg, sample_xs)
    return list(zip(xs.tolist(), mu.tolist()))


class _Search:
    def __init__(self, ev, spec, cfg, root_tol, eig_tol, n, max_depth, threads):
        self.ev, self.spec, self.cfg = ev, spec, cfg
        self.root_tol, self.eig_tol = root_tol, eig_tol
        self.n, self.max_depth = n, max_depth
        self.pool = ThreadPoolExecutor(threads) if threads > 1 else None
        self.roots: List[ResonanceResult] = []
        self.clusters: List[Cluster] = []
        self.messages: List[str] = []

    def _map(self, fn, items):
        if self.pool is None:
            return [fn(x) for x in items]
        return list(self.pool.map(fn, items))

    def children(self, lo, hi):
        """Four sub-boxes with counts; split lines are moved off zeros."""
        last = None
        for fx in SPLIT_FRACTIONS:
            for fy in SPLIT_FRACTIONS:
                mx = lo.real + fx * (hi.real - lo.real)
                my = lo.imag + fy * (hi.imag - lo.imag)
                boxes = [(lo, complex(mx, my)), (complex(mx, lo.imag), complex(hi.real, my)),
                         (complex(mx, my), hi), (complex(lo.real, my), complex(mx, hi.imag))]
                try:
                    counts = self._map(lambda b: _winding(self.ev, b[0], b[1], self.n), boxes)
                    return list(zip(boxes, counts))
                except ZeroOnBoundary as exc:
                    last = exc
        raise last

    def refine(self, lo, hi) -> Optional[ResonanceResult]:
        c = 0.5 * (lo + hi)
        d = 0.1 * abs(hi - lo)
        try:
            k, absD, its = muller(self.ev.value, c - d, c + d * 1j, c)
        except ResonanceError as exc:
            self.messages.append(f"refinement at {c} failed: {exc}")
            return None
        slack = 1e-9 * abs(hi - lo)
        inside = (lo.real - slack <= k.real <= hi.real + slack
                  and lo.imag - slack <= k.imag <= hi.imag + slack)
        if not inside or absD > self.root_tol:
            return None
        point = SurfacePoint(k)
        try:
            C1, C2, _, _, res, theta = eigen_data(point, self.spec, self.cfg)
        except NotARoot as exc:
            self.messages.append(str(exc))
            return None
        return ResonanceResult(point=point, abs_D=absD, multiplicity=1, C1=C1, C2=C2,
                               eigen_residual=res, newton_iters=its, theta=theta)

    def solve(self, lo, hi, count, depth):
        if count <= 0:
            return
        if count == 1:
            r = self.refine(lo, hi)
            if r is not None:
                if r.eigen_residual > self.eig_tol:
                    self.messages.append(
                        f"root {r.point.k} rejected: eigen residual {r.eigen_residual:.3g}")
                    self.clusters.append(Cluster(lo, hi, count, "eigen residual"))
                    return
                self.roots.append(r)
                return
        if depth >= self.max_depth:
            reason = "refinement failed" if count == 1 else "max depth"
            self.clusters.append(Cluster(lo, hi, count, reason))
            return
        kids = self.children(lo, hi)
        total = sum(c for _, c in kids)
        if total != count:
            self.messages.append(f"winding {count} of {lo}..{hi} != sum of children {total}")
        for (a, b), c in kids:
            self.solve(a, b, c, depth + 1)


def find_resonances(region: ContourSpec, spec: PotentialSpec, cfg: DConfig = DConfig(),
                    root_tol: float = 1e-8, eig_tol: float = 1e-6, threads: int = 1,
                    evaluator: Optional[DEvaluator] = None) -> ResonanceList:
    """All zeros of D inside the region, with diagnostics attached to the list."""
    ev = evaluator or DEvaluator(spec, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RegionShrunk)
        regions = admissible_regions(region)
    messages = [str(w.message) for w in caught]
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    search = _Search(ev, spec, cfg, root_tol, eig_tol, region.boundary_samples,
                     region.max_depth, threads)
    search.messages.extend(messages)
    try:
        for c in regions:
            n = _winding(ev, c.lo, c.hi, c.boundary_samples)
            search.solve(c.lo, c.hi, n, 0)
    finally:
        if search.pool is not None:
            search.pool.shutdown()
    tol = 1e-8 * region.diameter
    uniq: List[ResonanceResult] = []
    for r in sorted(search.roots, key=lambda r: (r.point.k.real, r.point.k.imag)):
        if all(abs(r.point.k - u.point.k) > tol for u in uniq):
            uniq.append(r)
    return ResonanceList(uniq, search.clusters, search.messages, ev.n_evals, regions)
