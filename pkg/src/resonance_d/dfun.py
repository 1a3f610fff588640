"""The determinant D-function built from D(x, lambda, mu) and the Evans function.

For a solution u of the eigenvalue equation along the ray z = t w,
w = e^{i theta}, kappa = k w,

    D(x)  = u(x) + (I_+(x) + I_-(x)) / (2 kappa)
    D'(x) = u_t(x) + (I_+(x) - I_-(x)) / 2

with I_+(x) = int_x^L e^{-kappa (s-x)} g ds, I_-(x) = int_{-L}^x e^{kappa (s-x)} g ds
and g = w^2 V(s w) u(s).  The 2x2 determinant of (D, D') over two solutions
is reported with z-derivatives (D'/w), which makes it independent of the
ray angle and equal to 1 for V = 0.
"""
from __future__ import annotations

import cmath
import math
import threading
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (DecayViolation, DivergentIntegral, NearStripBoundary, NoAdmissibleRay,
                     OutsideAnalyticityDomain, XDependenceDetected)
from .ode import (default_L, integrate_fundamental, integrate_from_anchor, integrate_jost,
                  RaySolutions)
from .potential import PotentialSpec, SquareWell
from .surface import SurfacePoint

STRIP_MARGIN = 0.05
THETA_GRID = 0.02


@dataclass(frozen=True)
class DConfig:
    """Evaluation settings.

    theta : ray angle, or None for automatic selection
    L : truncation radius, or None for the default rule
    x_eval : anchors at which the determinant is formed and compared
    method : 'auto', 'real_axis' or 'rotated_ray'
    closed_form : use exact piecewise integrals for square wells on the real axis
    """

    theta: Optional[float] = None
    L: Optional[float] = None
    x_eval: Tuple[float, ...] = (-0.7, -0.3, 0.0, 0.4, 0.9)
    quad_tol: float = 1e-10
    ode_tol: float = 1e-10
    method: str = "auto"
    x0: float = 0.0
    closed_form: bool = True

    def __post_init__(self):
        if self.quad_tol <= 0 or self.ode_tol <= 0:
            raise ValueError("tolerances must be positive")
        if len(self.x_eval) == 0:
            raise ValueError("x_eval must be nonempty")
        if self.method not in ("auto", "real_axis", "rotated_ray"):
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "x_eval", tuple(float(x) for x in self.x_eval))


# ---------------------------------------------------------------------------
# ray selection


def _rotated_theta(k: complex, alpha: float) -> float:
    if alpha <= 0:
        raise NoAdmissibleRay(f"k={k}: rotation needs a potential analytic in a sector")
    if k.real >= 0:
        th = 0.5 * alpha
        return -th if k.imag >= 0 else th
    phi = abs(cmath.phase(k))
    want = phi - math.pi / 2 + 0.2
    mag = min(0.9 * alpha, want)
    mag = min(math.ceil(mag / THETA_GRID) * THETA_GRID, 0.98 * alpha)
    if math.cos(phi - mag) < 0.1:
        # the default clamp leaves the ray nearly parallel to the decay boundary
        mag = min(math.ceil(min(0.98 * alpha, want) / THETA_GRID) * THETA_GRID, 0.98 * alpha)
    if math.cos(phi - mag) <= 0:
        raise NoAdmissibleRay(
            f"k={k}: no ray with |theta| < {alpha} gives Re(k e^(i theta)) > 0")
    return -mag if k.imag >= 0 else mag


def select_theta(k: complex, spec: PotentialSpec, cfg: DConfig) -> float:
    if cfg.theta is not None:
        return float(cfg.theta)
    if cfg.method == "real_axis":
        return 0.0
    if cfg.method == "rotated_ray":
        return _rotated_theta(k, spec.half_angle)
    if k.real >= 0 or spec.support is not None or -k.real <= spec.decay_rate - STRIP_MARGIN:
        return 0.0
    return _rotated_theta(k, spec.half_angle)


def check_convergence(k: complex, spec: PotentialSpec, theta: float, warn: bool = True):
    """Raise DivergentIntegral unless the kernel integrals converge on the ray."""
    if theta != 0 and not abs(theta) < spec.half_angle:
        raise OutsideAnalyticityDomain(f"theta={theta} outside half_angle {spec.half_angle}")
    if spec.support is not None:
        return
    kappa = k * cmath.exp(1j * theta)
    growth = max(0.0, -kappa.real)
    rate = spec.decay_rate * math.cos(theta)
    if not growth < rate:
        raise DivergentIntegral(
            f"k={k}, theta={theta}: growth {growth:.3g} not below decay rate {rate:.3g}")
    if warn and growth > 0 and rate - growth < STRIP_MARGIN:
        warnings.warn(f"k={k} lies within {STRIP_MARGIN} of the strip boundary",
                      NearStripBoundary, stacklevel=3)


# ---------------------------------------------------------------------------
# D from integrated solutions


def d_from_solutions(sol: RaySolutions, xs: Sequence[float], with_u: bool = False):
    """D and its z-derivative at the breakpoints xs.

    Returns arrays of shape (len(xs), B, S); with ``with_u`` the solution
    values at xs are appended.
    """
    kap = sol.kappa[None, :, None]
    w = sol.omega
    idx = [sol.index(x) for x in xs]
    x = np.asarray(xs, dtype=float)[:, None, None]
    u, du = sol.u[idx], sol.du[idx]
    ip = np.exp(kap * x) * (sol.P[-1][None] - sol.P[idx])
    im = np.exp(-kap * x) * (sol.Q[idx] - sol.Q[0][None])
    D = u + (ip + im) / (2 * kap)
    Dp = du + 0.5 * (ip - im)
    if with_u:
        return D, Dp / w, u
    return D, Dp / w


def _exprel(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + 0.5 * z, np.expm1(zs) / zs)


def _propagate(u, du, q2, d):
    # exact transfer of (u, u') across a constant-coefficient stretch of length d
    q = np.sqrt(q2)
    qd = q * d
    ch = np.cosh(qd)
    sh_q = d * np.where(np.abs(qd) < 1e-8, 1.0 + qd * qd / 6, np.sinh(qd) / np.where(qd == 0, 1, qd))
    return u * ch + du * sh_q, u * q2 * sh_q + du * ch


def _sw_state(ks, spec: SquareWell, init, x0, x):
    """(u, u') at x for data ``init`` (B, 2, S) given at x0; real axis only."""
    k2 = (ks * ks)[:, None]
    u, du = init[:, 0, :].copy(), init[:, 1, :].copy()
    edges = [spec.a1, spec.a2]
    pts = [x0] + [e for e in (edges if x > x0 else edges[::-1]) if min(x0, x) < e < max(x0, x)] + [x]
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        q2 = k2 + (spec.h if spec.a1 < mid < spec.a2 else 0.0)
        u, du = _propagate(u, du, q2, hi - lo)
    return u, du


def squarewell_d(ks, spec: SquareWell, init, x0, xs):
    """Closed-form D and D' for the square well on the real axis.

    Inside the well u = A e^{q(s-a1)} + B e^{-q(s-a1)}, q^2 = h + k^2, and the
    kernel integrals reduce to exponential integrals evaluated exactly.
    Returns (D, D', u) of shape (len(xs), B, S), or None when q is too close to 0.
    """
    ks = np.asarray(ks, dtype=complex)
    init = np.asarray(init, dtype=complex)
    a1, a2, h = spec.a1, spec.a2, spec.h
    q = np.sqrt(h + ks * ks)[:, None]
    if np.any(np.abs(q) < 1e-8):
        return None
    k = ks[:, None]
    ua, dua = _sw_state(ks, spec, init, x0, a1)
    A = 0.5 * (ua + dua / q)
    Bc = 0.5 * (ua - dua / q)
    Ds, Dps, us = [], [], []
    for x in xs:
        ux, dux = _sw_state(ks, spec, init, x0, x)
        ip = np.zeros_like(ux)
        im = np.zeros_like(ux)
        lo, hi = max(x, a1), a2
        if hi > lo:
            d = hi - lo
            ip = h * d * (A * np.exp(-k * (lo - x) + q * (lo - a1)) * _exprel((q - k) * d)
                          + Bc * np.exp(-k * (lo - x) - q * (lo - a1)) * _exprel((-q - k) * d))
        lo, hi = a1, min(x, a2)
        if hi > lo:
            d = hi - lo
            im = h * d * (A * np.exp(k * (lo - x)) * _exprel((k + q) * d)
                          + Bc * np.exp(k * (lo - x)) * _exprel((k - q) * d))
        Ds.append(ux + (ip + im) / (2 * k))
        Dps.append(dux + 0.5 * (ip - im))
        us.append(ux)
    return np.array(Ds), np.array(Dps), np.array(us)


def _dets(D, Dp):
    # D, Dp: (J, B, 2) -> determinants (J, B) and a bound on their size (J, B)
    det = D[..., 0] * Dp[..., 1] - D[..., 1] * Dp[..., 0]
    frob2 = np.sum(np.abs(D) ** 2 + np.abs(Dp) ** 2, axis=-1)
    return det, 0.5 * frob2


def _spread(dets, scale):
    J = dets.shape[0]
    if J < 2:
        return np.zeros(dets.shape[1])
    diff = np.max(np.abs(dets[:, None, :] - dets[None, :, :]), axis=(0, 1))
    s = np.max(scale, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, diff / s, 0.0)


def _ray_L(spec, ks, theta, cfg):
    if cfg.L is not None:
        return float(cfg.L)
    return default_L(spec, ks, theta, cfg.quad_tol * 1e-2, cfg.x_eval + (cfg.x0,))


def _use_closed_form(spec, theta, cfg):
    return cfg.closed_form and isinstance(spec, SquareWell) and theta == 0


def _fundamental_init(B):
    init = np.zeros((B, 2, 2), dtype=complex)
    init[:, 0, 0] = 1.0
    init[:, 1, 1] = 1.0
    return init


def d_matrix_batch(ks, spec: PotentialSpec, theta: float, cfg: DConfig, init=None,
                   with_u: bool = False):
    """D and D' (z-derivative) of the solutions with data ``init`` at x0.

    All ks share the ray angle theta.  ``init`` defaults to the fundamental
    pair.  Returns (D, Dp) with shape (len(x_eval), B, S), plus the solution
    values when ``with_u`` is set.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    if init is None:
        init = _fundamental_init(len(ks))
    for k in ks:
        check_convergence(complex(k), spec, theta)
    if _use_closed_form(spec, theta, cfg):
        out = squarewell_d(ks, spec, init, cfg.x0, cfg.x_eval)
        if out is not None:
            return out if with_u else out[:2]
    L = _ray_L(spec, ks, theta, cfg)
    sol = integrate_from_anchor(ks, spec, theta, L, init, x0=cfg.x0, extra=cfg.x_eval,
                                rtol=cfg.ode_tol, atol=cfg.ode_tol * 1e-2)
    return d_from_solutions(sol, cfg.x_eval, with_u)


def bbD_batch(ks, spec: PotentialSpec, theta: float, cfg: DConfig, init=None):
    """Anchor-averaged determinant and relative anchor spread for a batch."""
    D, Dp = d_matrix_batch(ks, spec, theta, cfg, init)
    dets, scale = _dets(D, Dp)
    return dets.mean(axis=0), _spread(dets, scale)


# ---------------------------------------------------------------------------
# single-point API


def d_value(point: SurfacePoint, spec: PotentialSpec, mu, x: float, cfg: DConfig = DConfig()):
    """D(x, lambda, mu) and its z-derivative.

    ``mu`` is the solution given by its data (value, z-derivative) at cfg.x0.
    """
    theta = select_theta(point.k, spec, cfg)
    init = np.asarray(mu, dtype=complex).reshape(1, 2, 1)
    c = replace(cfg, x_eval=(float(x),))
    D, Dp = d_matrix_batch([point.k], spec, theta, c, init)
    return complex(D[0, 0, 0]), complex(Dp[0, 0, 0])


def bbD(point: SurfacePoint, spec: PotentialSpec, cfg: DConfig = DConfig()):
    """Determinant of D over the fundamental pair; returns (value, spread)."""
    theta = select_theta(point.k, spec, cfg)
    val, spread = bbD_batch([point.k], spec, theta, cfg)
    val, spread = complex(val[0]), float(spread[0])
    if spread > 1e3 * cfg.quad_tol:
        raise XDependenceDetected(f"anchor spread {spread:.3g} at k={point.k}")
    return val, spread


def jost_solutions(point: SurfacePoint, spec: PotentialSpec, cfg: DConfig = DConfig()):
    theta = select_theta(point.k, spec, cfg)
    kappa = point.k * cmath.exp(1j * theta)
    if kappa.real <= 0:
        raise DecayViolation(f"Re(k e^(i theta)) = {kappa.real:.3g} <= 0 at k={point.k}")
    check_convergence(point.k, spec, theta, warn=False)
    L = _ray_L(spec, [point.k], theta, cfg)
    return integrate_jost([point.k], spec, theta, L, extra=cfg.x_eval + (cfg.x0,),
                          rtol=cfg.ode_tol, atol=cfg.ode_tol * 1e-2)


def evans(point: SurfacePoint, spec: PotentialSpec, cfg: DConfig = DConfig()) -> complex:
    """Wronskian mu_+ mu_-' - mu_+' mu_- (z-derivatives) at z = x0 e^{i theta}."""
    sol = jost_solutions(point, spec, cfg)
    i = sol.index(cfg.x0)
    u, du = sol.u[i, 0], sol.du[i, 0] / sol.omega
    return complex(u[0] * du[1] - du[0] * u[1])


def bbD_jost(point: SurfacePoint, spec: PotentialSpec, cfg: DConfig = DConfig()) -> complex:
    """Determinant of D over the Jost pair (mu_+, mu_-)."""
    sol = jost_solutions(point, spec, cfg)
    D, Dp = d_from_solutions(sol, cfg.x_eval)
    dets, _ = _dets(D, Dp)
    return complex(dets[:, 0].mean())


def check_equivalence(point: SurfacePoint, spec: PotentialSpec, cfg: DConfig = DConfig()) -> float:
    """|2k D - E| / |E|."""
    d, _ = bbD(point, spec, cfg)
    e = evans(point, spec, cfg)
    return abs(2 * point.k * d - e) / max(abs(e), 1e-300)


# ---------------------------------------------------------------------------
# batched evaluator used by the root finder


class DEvaluator:
    """Cached, batched evaluation of the determinant at many k.

    Points are grouped by their ray angle and integrated together.  The
    object is safe to share between threads.
    """

    def __init__(self, spec: PotentialSpec, cfg: DConfig = DConfig(), batch: int = 64):
        self.spec = spec
        self.cfg = cfg
        self.batch = batch
        self._cache = {}
        self._lock = threading.Lock()
        self.n_evals = 0
        self.max_spread = 0.0

    def theta(self, k: complex) -> float:
        return select_theta(complex(k), self.spec, self.cfg)

    def __call__(self, ks) -> np.ndarray:
        ks = np.atleast_1d(np.asarray(ks, dtype=complex))
        out = np.empty(len(ks), dtype=complex)
        todo = {}
        with self._lock:
            for i, k in enumerate(ks):
                key = complex(k)
                if key in self._cache:
                    out[i] = self._cache[key]
                else:
                    todo.setdefault(key, []).append(i)
        if todo:
            groups = {}
            for key in todo:
                groups.setdefault(self.theta(key), []).append(key)
            for theta, keys in groups.items():
                # similar growth rates share a truncation radius
                keys.sort(key=lambda z: (z * cmath.exp(1j * theta)).real)
                for j in range(0, len(keys), self.batch):
                    chunk = keys[j:j + self.batch]
                    vals, spread = bbD_batch(chunk, self.spec, theta, self.cfg)
                    worst = float(np.max(spread))
                    if worst > 1e3 * self.cfg.quad_tol:
                        bad = chunk[int(np.argmax(spread))]
                        raise XDependenceDetected(f"anchor spread {worst:.3g} at k={bad}")
                    with self._lock:
                        self.max_spread = max(self.max_spread, worst)
                        self.n_evals += len(chunk)
                        for key, v in zip(chunk, vals):
                            self._cache[key] = complex(v)
                            for i in todo[key]:
                                out[i] = v
        return out

    def value(self, k: complex) -> complex:
        return complex(self([k])[0])
