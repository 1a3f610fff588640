"""Continued free resolvent, Nystrom generalized resolvent and Riesz projections.

The free kernel G_k(x, y) = -e^{-k|x-y|} / (2k) is the resolvent kernel of
d^2/dx^2 + lambda, lambda = -k^2, for Re k > 0, and the same expression is
its continuation to Re k < 0.  For a compactly supported V the generalized
resolvent solves

    u - A(lambda) V u = A(lambda) phi

on the support, discretized by Gauss-Legendre quadrature.  The kernel has a
kink on the diagonal, so every row is integrated with two panels split at
the diagonal, with the unknowns interpolated from the N primary nodes.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import ContourInvalid, SingularAtResonance, UnsupportedPotential
from .potential import PotentialSpec, SquareWell, evaluate
from .surface import SurfacePoint

PANEL = 40
COND_MAX = 1e14


def kernel(k: complex, x, y):
    return -np.exp(-k * np.abs(np.subtract(x, y))) / (2 * k)


@lru_cache(maxsize=64)
def _gauss(n: int):
    return leggauss(n)


def _gl(a: float, b: float, n: int):
    t, w = _gauss(n)
    return 0.5 * (b - a) * t + 0.5 * (a + b), 0.5 * (b - a) * w


def _split_rule(x: float, a: float, b: float, n: int = PANEL):
    """Nodes and weights on [a, b] with a panel break at x (when inside)."""
    if a < x < b:
        s1, w1 = _gl(a, x, n)
        s2, w2 = _gl(x, b, n)
        return np.concatenate([s1, s2]), np.concatenate([w1, w2])
    return _gl(a, b, 2 * n)


def free_resolvent(point: SurfacePoint, psi: Callable, x, support: Tuple[float, float],
                   n: int = 64):
    """int G_k(x, y) psi(y) dy over the support of psi, for scalar or array x."""
    k = point.k
    a, b = support
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.shape, dtype=complex)
    for i, xv in enumerate(xs):
        s, w = _split_rule(xv, a, b, n)
        out[i] = np.sum(kernel(k, xv, s) * np.asarray(psi(s), dtype=complex) * w)
    return out if np.ndim(x) else complex(out[0])


def free_resolvent_indicator(point: SurfacePoint, c: float, d: float, x: float) -> complex:
    """Closed form of the free resolvent applied to the indicator of [c, d]."""
    k = point.k

    def prim(lo, hi):
        # int_lo^hi e^{-k|x-y|} dy for an interval on one side of x
        if hi <= lo:
            return 0.0
        if hi <= x:
            return (cmath.exp(-k * (x - hi)) - cmath.exp(-k * (x - lo))) / k
        return (cmath.exp(-k * (lo - x)) - cmath.exp(-k * (hi - x))) / k

    total = prim(c, min(d, x)) + prim(max(c, x), d)
    return -total / (2 * k)


def fourier_resolvent_indicator(point: SurfacePoint, c: float, d: float, x: float,
                                tol: float = 1e-13) -> complex:
    """Spectral form (2 pi)^{-1/2} int (lambda - xi^2)^{-1} e^{i x xi} F[psi](xi) d xi.

    For psi the indicator of [c, d] this reduces to
    (1/pi) int_0^inf [sin((x-c) xi) - sin((x-d) xi)] / (xi (lambda - xi^2)) d xi,
    evaluated with a plain rule on [0, 1] and a Fourier-weighted rule beyond.
    Valid off the spectrum, i.e. for first-sheet points with lambda not >= 0.
    """
    lam = point.lam
    if point.k.real <= 0:
        raise ValueError("the spectral representation holds on the first sheet only")

    def g(xi):
        return 1.0 / (xi * (lam - xi * xi))

    total = 0j
    for a, sgn in ((x - c, 1.0), (x - d, -1.0)):
        if a == 0:
            continue
        s = math.copysign(1.0, a)
        om = abs(a)
        for part in (np.real, np.imag):
            head, _ = integrate.quad(lambda xi: part(np.sinc(om * xi / math.pi) * om / (lam - xi * xi)),
                                     0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
            tail, _ = integrate.quad(lambda xi: part(g(xi)), 1.0, np.inf, weight="sin", wvar=om,
                                     epsabs=tol, limlst=200)
            val = head + tail
            total += sgn * s * (val if part is np.real else 1j * val)
    return total / math.pi


# ---------------------------------------------------------------------------
# Nystrom discretization


def _bary_weights(t: np.ndarray, w: np.ndarray) -> np.ndarray:
    # barycentric weights for Gauss-Legendre nodes on [-1, 1]
    j = np.arange(len(t))
    return (-1.0) ** j * np.sqrt((1 - t * t) * w)


def _interp_matrix(x_nodes, lam, s):
    """Rows of Lagrange interpolation from x_nodes to the points s."""
    diff = s[:, None] - x_nodes[None, :]
    exact = diff == 0
    diff = np.where(exact, 1.0, diff)
    c = lam[None, :] / diff
    M = c / c.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if np.any(rows):
        M[rows] = exact[rows].astype(float)
    return M


@lru_cache(maxsize=16)
def _geometry(a1: float, a2: float, N: int, panel: int):
    t, w = leggauss(N)
    nodes = 0.5 * (a2 - a1) * t + 0.5 * (a1 + a2)
    weights = 0.5 * (a2 - a1) * w
    lam = _bary_weights(t, w)
    S = np.empty((N, 2 * panel))
    Wq = np.empty((N, 2 * panel))
    L = np.empty((N, 2 * panel, N))
    for i, y in enumerate(nodes):
        s, ws = _split_rule(y, a1, a2, panel)
        S[i], Wq[i] = s, ws
        L[i] = _interp_matrix(nodes, lam, s)
    return nodes, weights, lam, S, Wq, L


def _v_values(spec: PotentialSpec, s: np.ndarray) -> np.ndarray:
    if isinstance(spec, SquareWell):
        inside = (s > spec.a1) & (s < spec.a2)
        return np.where(inside, spec.h, np.where((s == spec.a1) | (s == spec.a2), spec.h / 2, 0j))
    flat = np.array([evaluate(spec, complex(v)) for v in s.ravel()])
    return flat.reshape(s.shape)


@dataclass
class NystromSystem:
    """Discretization of id - A(lambda) V on the support of V.

    kernel_matrix[i, j] is the weight of u(y_j) in the quadrature of
    int G_k(y_i, y) V(y) u(y) dy.
    """

    point: SurfacePoint
    spec: PotentialSpec
    nodes: np.ndarray
    weights: np.ndarray
    kernel_matrix: np.ndarray
    N: int
    panel: int

    @property
    def system_matrix(self) -> np.ndarray:
        return np.eye(self.N) - self.kernel_matrix

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.system_matrix, compute_uv=False)

    def condition(self) -> float:
        s = self.singular_values()
        return float(s[0] / s[-1]) if s[-1] > 0 else math.inf

    def extension_row(self, x: float) -> np.ndarray:
        """Weights c_j with int G_k(x, y) V(y) u(y) dy ~ sum_j c_j u(y_j)."""
        a1, a2 = self.spec.support
        nodes, _, lam, *_ = _geometry(a1, a2, self.N, self.panel)
        s, ws = _split_rule(min(max(x, a1), a2), a1, a2, self.panel)
        Lx = _interp_matrix(nodes, lam, s)
        return (kernel(self.point.k, x, s) * _v_values(self.spec, s) * ws) @ Lx


def nystrom_system(point: SurfacePoint, spec: PotentialSpec, N: int = 200,
                   panel: int = PANEL) -> NystromSystem:
    if spec.support is None:
        raise UnsupportedPotential("the Nystrom resolvent needs a compactly supported potential")
    a1, a2 = spec.support
    if not a1 < a2:
        raise UnsupportedPotential("empty support")
    nodes, weights, _, S, Wq, L = _geometry(float(a1), float(a2), N, panel)
    W = kernel(point.k, nodes[:, None], S) * _v_values(spec, S) * Wq
    K = np.einsum("im,imj->ij", W, L)
    return NystromSystem(point, spec, nodes, weights, K, N, panel)


def sigma_min(point: SurfacePoint, spec: PotentialSpec, N: int = 200) -> float:
    """Smallest singular value of id - A(lambda) V on the Nystrom nodes."""
    return float(nystrom_system(point, spec, N).singular_values()[-1])


@dataclass
class ResolventSolution:
    """u = R_lambda phi on the nodes, with Nystrom extension to any x."""

    system: NystromSystem
    values: np.ndarray
    phi: Callable
    phi_support: Tuple[float, float]
    cond: float

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(xs.shape, dtype=complex)
        for i, xv in enumerate(xs):
            out[i] = (free_resolvent(self.system.point, self.phi, xv, self.phi_support)
                      + self.system.extension_row(xv) @ self.values)
        return out if np.ndim(x) else complex(out[0])


def generalized_resolvent(point: SurfacePoint, spec: PotentialSpec, phi: Callable,
                          phi_support: Optional[Tuple[float, float]] = None,
                          N: int = 200) -> ResolventSolution:
    """Solve u - A(lambda) V u = A(lambda) phi by Nystrom discretization."""
    sysm = nystrom_system(point, spec, N)
    support = tuple(phi_support) if phi_support is not None else tuple(spec.support)
    rhs = free_resolvent(point, phi, sysm.nodes, support)
    M = sysm.system_matrix
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > COND_MAX:
        raise SingularAtResonance(f"Nystrom system singular at k={point.k} (cond {cond:.3g})")
    u = np.linalg.solve(M, rhs)
    return ResolventSolution(sysm, u, phi, support, cond)


def riesz_projection(root, radius: float, M: int, spec: PotentialSpec, phi: Callable,
                     sample_xs: Sequence[float], phi_support=None, N: int = 200,
                     known_roots: Sequence[complex] = ()):
    """Trapezoidal rule for (2 pi i)^{-1} oint R_lambda phi d lambda on a k-circle.

    ``root`` is a ResonanceResult, a SurfacePoint or a complex k.  With
    k_j = k0 + r e^{i t_j}, d lambda = -2 k dk, the rule is
    sum_j R(k_j) phi (-2 k_j) r e^{i t_j} / M.  Returns (x, value) pairs.
    """
    k0 = complex(getattr(getattr(root, "point", root), "k", root))
    if radius <= 0 or M < 3:
        raise ValueError("need radius > 0 and M >= 3")
    if abs(k0.real) <= radius:
        raise ContourInvalid("the contour would cross the cut Re k = 0")
    for z in known_roots:
        z = complex(z)
        if 0 < abs(z - k0) < 1.5 * radius:
            raise ContourInvalid(f"another root {z} lies within 1.5 r of {k0}")
    xs = np.asarray(sample_xs, dtype=float)
    acc = np.zeros(len(xs), dtype=complex)
    for j in range(M):
        e = cmath.exp(2j * math.pi * j / M)
        kj = k0 + radius * e
        u = generalized_resolvent(SurfacePoint(kj), spec, phi, phi_support, N)
        acc += u(xs) * (-2 * kj) * radius * e / M
    return list(zip(xs.tolist(), acc.tolist()))


def parallel_defect(a, b) -> float:
    """|b - (<a, b>/<a, a>) a| / |b|: 0 for proportional vectors."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    c = np.vdot(a, b) / np.vdot(a, a)
    return float(np.linalg.norm(b - c * a) / np.linalg.norm(b))
