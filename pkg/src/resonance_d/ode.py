"""Integration of u'' + (lambda - V) u = 0 along the ray z = t e^{i theta}.

In the ray parameter t the equation reads

    u_tt = (w^2 V(t w) + kappa^2) u,     w = e^{i theta},  kappa = k w,

where u(t) = mu(t w).  Derivatives stored in this module are t-derivatives;
z-derivatives are du/dt / w.

Besides u and u_t every solution carries two running integrals

    P(t) = int^t e^{-kappa s} g(s) ds,   Q(t) = int^t e^{kappa s} g(s) ds,
    g = w^2 V(s w) u(s),

so that the truncated kernel integrals needed for D(x, lambda, mu) are
differences of stored values and share the error control of the ODE.

The stepper is an embedded 8(5,3) Runge-Kutta scheme (Dormand-Prince
coefficients, taken from scipy) vectorised over a batch of k values; one
step size is shared by the whole batch.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import DOP853

from .errors import DecayViolation, OutsideAnalyticityDomain, StepSizeUnderflow
from .potential import Custom, PoschlTeller, PotentialSpec, SquareWell, tail_bound
from .surface import SurfacePoint

_A = DOP853.A
_B = DOP853.B
_C = DOP853.C
_E3 = DOP853.E3
_E5 = DOP853.E5
_NS = DOP853.n_stages

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
L_CAP = 200.0
# step cap when accepted steps are kept for interpolation
DENSE_H_MAX = 0.05


def _error_norm(K, h, scale, B):
    # K: (13, B*m) flattened stages; per-batch error estimate as in Hairer's DOP853
    err5 = np.abs((_E5 @ K) / scale) ** 2
    err3 = np.abs((_E3 @ K) / scale) ** 2
    e5 = err5.reshape(B, -1).sum(axis=1)
    e3 = err3.reshape(B, -1).sum(axis=1)
    denom = e5 + 0.01 * e3
    m = K.shape[1] // B
    with np.errstate(invalid="ignore", divide="ignore"):
        err = np.where(denom > 0, abs(h) * e5 / np.sqrt(denom * m), 0.0)
    return err


def rk_advance(fun, t0, t1, y, h, rtol, atol, steps=None, h_max=math.inf):
    """Advance the batch y (shape (B, m)) from t0 to t1.

    ``h`` is the magnitude of the first trial step.  Accepted steps are
    appended to ``steps`` as (t, y) when a list is given.  Returns the state
    at t1 and the suggested magnitude of the next step.
    """
    direction = 1.0 if t1 >= t0 else -1.0
    t = t0
    if t1 == t0:
        return y, h
    shape = y.shape
    B = shape[0]
    yf = y.reshape(-1)

    def ff(tt, v):
        return fun(tt, v.reshape(shape)).reshape(-1)

    f = ff(t, yf)
    K = np.empty((_NS + 1, yf.size), dtype=complex)
    h = min(abs(h), h_max)
    while direction * (t1 - t) > 0:
        span = abs(t1 - t)
        if h >= span or span - h < 1e-12 * max(1.0, abs(t)):
            h_try = span
            t_new = t1
        else:
            h_try = h
            t_new = t + direction * h_try
        if h_try < 1e-13 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size underflow at t={t}")
        hs = direction * h_try
        K[0] = f
        for s in range(1, _NS):
            K[s] = ff(t + _C[s] * hs, yf + hs * (_A[s, :s] @ K[:s]))
        y_new = yf + hs * (_B @ K[:_NS])
        f_new = ff(t_new, y_new)
        K[_NS] = f_new
        scale = atol + rtol * np.maximum(np.abs(yf), np.abs(y_new))
        err = np.max(_error_norm(K, hs, scale, B))
        if not np.isfinite(err):
            h = h_try * MIN_FACTOR
            continue
        if err <= 1.0:
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** (-1 / 8))
            t, yf, f = t_new, y_new, f_new
            if steps is not None:
                steps.append((t, yf.reshape(shape)))
            h = min(h_try * factor, h_max)
        else:
            h = h_try * max(MIN_FACTOR, SAFETY * err ** (-1 / 8))
    return yf.reshape(shape), h


def _ray_scalar(spec: PotentialSpec, theta: float):
    """Fast scalar t -> w^2 V(t w)."""
    w = cmath.exp(1j * theta)
    w2 = w * w
    if isinstance(spec, PoschlTeller):
        V0 = spec.V0

        def vf(t):
            return -w2 * V0 / cmath.cosh(t * w) ** 2
        return vf
    if isinstance(spec, SquareWell):
        raise TypeError("square wells are evaluated per segment")
    ev = spec.evaluator

    def vf(t):
        return w2 * complex(ev(t * w))
    return vf


def _segment_potential(spec, theta, lo, hi):
    if isinstance(spec, SquareWell):
        mid = 0.5 * (lo + hi)
        val = spec.h if spec.a1 < mid < spec.a2 else 0j
        return lambda t: val
    vf = _ray_scalar(spec, theta)
    if spec.support is not None:
        # keep evaluations inside the open segment to respect jumps at the edges
        eps = 1e-14 * max(1.0, abs(lo), abs(hi))
        a, b = lo + eps, hi - eps
        return lambda t: vf(min(max(t, a), b)) if a < b else vf(t)
    return vf


def _make_rhs(vfun, kappa):
    k2 = (kappa * kappa)[:, None]
    kap = -kappa[:, None]

    def fun(t, y):
        # y: (B, 4*S) laid out as [u | du | P | Q], each block S wide
        S = y.shape[1] // 4
        u = y[:, :S]
        g = vfun(t) * u
        em = np.exp(kap * t)
        return np.concatenate((y[:, S:2 * S], g + k2 * u, em * g, g / em), axis=1)
    return fun


def ray_breakpoints(spec: PotentialSpec, theta: float, L: float, extra: Iterable[float] = ()):
    pts = {-L, L}
    if spec.support is not None:
        for e in spec.support:
            if -L < e < L:
                pts.add(float(e))
    for x in extra:
        x = float(x)
        if not -L <= x <= L:
            raise ValueError(f"breakpoint {x} outside [-L, L] = [{-L}, {L}]")
        pts.add(x)
    return sorted(pts)


@dataclass
class RaySolutions:
    """A batch of solutions sampled at breakpoints of a common ray.

    Arrays are indexed [breakpoint, batch, solution].  ``du`` holds the
    t-derivative.  ``P`` and ``Q`` are the running kernel integrals
    described in the module docstring.
    """

    ks: np.ndarray
    theta: float
    L: float
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    steps: Optional[list] = field(default=None, repr=False)

    @property
    def omega(self) -> complex:
        return cmath.exp(1j * self.theta)

    @property
    def kappa(self) -> np.ndarray:
        return self.ks * self.omega

    def index(self, x: float) -> int:
        i = int(np.searchsorted(self.t, x))
        if i >= len(self.t) or abs(self.t[i] - x) > 1e-12 * max(1.0, abs(x)):
            raise KeyError(f"{x} is not a breakpoint of this solution")
        return i


def _pack(records: Dict[float, np.ndarray], ks, theta, L, S, steps=None):
    ts = np.array(sorted(records))
    Y = np.stack([records[t] for t in ts])  # (T, B, 4S)
    return RaySolutions(ks=ks, theta=theta, L=L, t=ts,
                        u=Y[:, :, :S], du=Y[:, :, S:2 * S],
                        P=Y[:, :, 2 * S:3 * S], Q=Y[:, :, 3 * S:], steps=steps)


def _sweep(spec, theta, kappa, y0, t_start, bps, rtol, atol, records, steps, h0):
    """Integrate from t_start through the ordered breakpoints ``bps``."""
    y = y0
    t = t_start
    h = h0
    for b in bps:
        vfun = _segment_potential(spec, theta, min(t, b), max(t, b))
        seg_steps = [] if steps is not None else None
        y, h = rk_advance(_make_rhs(vfun, kappa), t, b, y, h, rtol, atol, seg_steps,
                          DENSE_H_MAX if steps is not None else math.inf)
        if steps is not None:
            steps.extend(seg_steps)
        records[b] = y
        t = b
    return y


def _check_ray(spec, theta):
    if theta != 0 and not abs(theta) < spec.half_angle:
        raise OutsideAnalyticityDomain(
            f"ray angle {theta} outside the sector of analyticity ({spec.half_angle})")


def _h0(kappa, L):
    return min(0.05, 0.5 / (1.0 + float(np.max(np.abs(kappa))))) if L > 0 else 0.05


def integrate_from_anchor(ks, spec, theta, L, init, x0=0.0, extra=(), rtol=1e-10,
                          atol=1e-12, record_steps=False) -> RaySolutions:
    """Integrate solutions with given data at t = x0 outward to +-L.

    ``init`` has shape (B, 2, S): [value, z-derivative] for each of the S
    solutions at z = x0 e^{i theta}.
    """
    _check_ray(spec, theta)
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    w = cmath.exp(1j * theta)
    kappa = ks * w
    init = np.asarray(init, dtype=complex)
    B, _, S = init.shape
    y0 = np.zeros((B, 4 * S), dtype=complex)
    y0[:, :S] = init[:, 0, :]
    y0[:, S:2 * S] = init[:, 1, :] * w
    bps = ray_breakpoints(spec, theta, L, list(extra) + [x0])
    records = {x0: y0}
    steps = [] if record_steps else None
    fwd = [b for b in bps if b > x0]
    bwd = [b for b in reversed(bps) if b < x0]
    h0 = _h0(kappa, L)
    _sweep(spec, theta, kappa, y0, x0, fwd, rtol, atol, records, steps, h0)
    _sweep(spec, theta, kappa, y0, x0, bwd, rtol, atol, records, steps, h0)
    if steps is not None:
        steps.append((x0, y0))
        steps.sort(key=lambda r: r[0])
    return _pack(records, ks, theta, L, S, steps)


def integrate_fundamental(ks, spec, theta, L, x0=0.0, extra=(), rtol=1e-10, atol=1e-12,
                          record_steps=False) -> RaySolutions:
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    init = np.zeros((len(ks), 2, 2), dtype=complex)
    init[:, 0, 0] = 1.0
    init[:, 1, 1] = 1.0
    return integrate_from_anchor(ks, spec, theta, L, init, x0, extra, rtol, atol, record_steps)


def integrate_jost(ks, spec, theta, L, extra=(), rtol=1e-10, atol=1e-12,
                   record_steps=False) -> RaySolutions:
    """mu_+ from t = +L inward and mu_- from t = -L outward (S = 2)."""
    _check_ray(spec, theta)
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    w = cmath.exp(1j * theta)
    kappa = ks * w
    if np.any(kappa.real <= 0):
        raise DecayViolation("Jost solutions need Re(k e^{i theta}) > 0")
    B = len(ks)
    bps = ray_breakpoints(spec, theta, L, extra)
    e = np.exp(-kappa * L)
    h0 = _h0(kappa, L)
    # integrate from unit data and rescale by e^{-kappa L} afterwards (linear ODE)
    plus = np.zeros((B, 4), dtype=complex)
    plus[:, 0] = 1.0
    plus[:, 1] = -kappa
    minus = np.zeros((B, 4), dtype=complex)
    minus[:, 0] = 1.0
    minus[:, 1] = kappa
    rec_p = {L: plus}
    rec_m = {-L: minus}
    st_p = [] if record_steps else None
    st_m = [] if record_steps else None
    _sweep(spec, theta, kappa, plus, L, list(reversed(bps))[1:], rtol, atol, rec_p, st_p, h0)
    _sweep(spec, theta, kappa, minus, -L, bps[1:], rtol, atol, rec_m, st_m, h0)
    sc = e[:, None]
    for rec in (rec_p, rec_m):
        for t in rec:
            rec[t] = rec[t] * sc
    for st in (st_p, st_m):
        if st is not None:
            st[:] = [(t, y * sc) for t, y in st]
    plus, minus = plus * sc, minus * sc
    records = {}
    for t in bps:
        a, b = rec_p[t], rec_m[t]
        records[t] = np.concatenate(
            [a[:, 0:1], b[:, 0:1], a[:, 1:2], b[:, 1:2], a[:, 2:3], b[:, 2:3],
             a[:, 3:4], b[:, 3:4]], axis=1)
    steps = None
    if record_steps:
        steps = {"plus": sorted(st_p + [(L, plus)], key=lambda r: r[0]),
                 "minus": sorted(st_m + [(-L, minus)], key=lambda r: r[0])}
    return _pack(records, ks, theta, L, 2, steps)


def growth_rate(kappa) -> float:
    """Exponent c with |kernel * solution| <~ e^{c|s|} along the ray."""
    return 2.0 * max(0.0, float(np.max(-np.real(kappa))))


def default_L(spec: PotentialSpec, ks, theta: float, tol: float, anchors: Sequence[float] = ()):
    """Truncation radius: support + 1, or the smallest L with a small tail."""
    amax = max((abs(a) for a in anchors), default=0.0)
    if spec.support is not None:
        a1, a2 = spec.support
        return max(abs(a1), abs(a2), amax) + 1.0
    kappa = np.atleast_1d(np.asarray(ks, dtype=complex)) * cmath.exp(1j * theta)
    c = growth_rate(kappa)
    L = max(2.0, amax + 1.0)
    while L < L_CAP:
        if tail_bound(spec, L, theta, c) < tol:
            return L
        L += 0.5
    return L_CAP


# ---------------------------------------------------------------------------
# single-point objects


class _Dense:
    """Quintic Hermite interpolation between accepted steps."""

    def __init__(self, t, u, du, ddu):
        self.t, self.u, self.du, self.ddu = t, u, du, ddu

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        i = np.clip(np.searchsorted(self.t, x) - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[i], self.t[i + 1]
        h = (t1 - t0)[:, None]
        s = ((x - t0) / (t1 - t0))[:, None]
        y0, y1 = self.u[i], self.u[i + 1]
        d0, d1 = self.du[i] * h, self.du[i + 1] * h
        a0, a1 = self.ddu[i] * h * h, self.ddu[i + 1] * h * h
        s2, s3 = s * s, s * s * s
        h00 = 1 - 10 * s3 + 15 * s2 * s2 - 6 * s3 * s2
        h01 = 10 * s3 - 15 * s2 * s2 + 6 * s3 * s2
        h10 = s - 6 * s3 + 8 * s2 * s2 - 3 * s3 * s2
        h11 = -4 * s3 + 7 * s2 * s2 - 3 * s3 * s2
        h20 = 0.5 * s2 - 1.5 * s3 + 1.5 * s2 * s2 - 0.5 * s3 * s2
        h21 = 0.5 * s3 - s2 * s2 + 0.5 * s3 * s2
        return h00 * y0 + h01 * y1 + h10 * d0 + h11 * d1 + h20 * a0 + h21 * a1


def _dense_from_steps(spec, theta, k, steps, S, cols):
    t = np.array([r[0] for r in steps])
    Y = np.array([r[1][0] for r in steps])
    # drop duplicated breakpoint times
    t, idx = np.unique(t, return_index=True)
    Y = Y[idx]
    w = cmath.exp(1j * theta)
    kap2 = (k * w) ** 2
    V = np.array([w * w * _v_at(spec, theta, ti) for ti in t])
    u = Y[:, cols]
    du = Y[:, [c + S for c in cols]]
    ddu = (V[:, None] + kap2) * u
    return t, u, du, ddu, _Dense(t, u, du, ddu)


def _v_at(spec, theta, t):
    from .potential import on_ray
    return complex(on_ray(spec, np.array([t]), theta)[0])


@dataclass
class FundamentalPair:
    """nu_1, nu_2 with [1, 0] and [0, 1] data at z = x0 e^{i theta}.

    ``dnu1``/``dnu2`` are z-derivatives.  Calling the object interpolates
    (nu1, nu2) at arbitrary ray parameters.
    """

    point: SurfacePoint
    theta: float
    x0: float
    L: float
    grid: np.ndarray
    nu1: np.ndarray
    dnu1: np.ndarray
    nu2: np.ndarray
    dnu2: np.ndarray
    raw: RaySolutions = field(repr=False)
    _dense: _Dense = field(repr=False)

    def __call__(self, t):
        return self._dense(t)

    def wronskian(self) -> np.ndarray:
        return self.nu1 * self.dnu2 - self.dnu1 * self.nu2


@dataclass
class JostPair:
    point: SurfacePoint
    theta: float
    L: float
    grid: np.ndarray
    mu_plus: np.ndarray
    dmu_plus: np.ndarray
    mu_minus: np.ndarray
    dmu_minus: np.ndarray
    raw: RaySolutions = field(repr=False)


def fundamental_pair(point: SurfacePoint, spec: PotentialSpec, theta: float = 0.0,
                     L: Optional[float] = None, tol: float = 1e-10, x0: float = 0.0,
                     extra=()) -> FundamentalPair:
    if L is None:
        L = default_L(spec, [point.k], theta, tol, [x0, *extra])
    sol = integrate_fundamental([point.k], spec, theta, L, x0=x0, extra=extra, rtol=tol,
                                atol=tol * 1e-2, record_steps=True)
    t, u, du, ddu, dense = _dense_from_steps(spec, theta, point.k, sol.steps, 2, [0, 1])
    w = cmath.exp(1j * theta)
    return FundamentalPair(point=point, theta=theta, x0=x0, L=L, grid=t,
                           nu1=u[:, 0], dnu1=du[:, 0] / w, nu2=u[:, 1], dnu2=du[:, 1] / w,
                           raw=sol, _dense=dense)


def jost_pair(point: SurfacePoint, spec: PotentialSpec, theta: float = 0.0,
              L: Optional[float] = None, tol: float = 1e-10, extra=()) -> JostPair:
    if L is None:
        L = default_L(spec, [point.k], theta, tol, extra)
    sol = integrate_jost([point.k], spec, theta, L, extra=extra, rtol=tol, atol=tol * 1e-2,
                         record_steps=True)
    w = cmath.exp(1j * theta)
    tp = np.array([r[0] for r in sol.steps["plus"]])
    yp = np.array([r[1][0] for r in sol.steps["plus"]])
    tm = np.array([r[0] for r in sol.steps["minus"]])
    ym = np.array([r[1][0] for r in sol.steps["minus"]])
    grid = np.union1d(tp, tm)
    # sample both on the union grid by quintic interpolation
    outs = []
    for tt, yy in ((tp, yp), (tm, ym)):
        tt, idx = np.unique(tt, return_index=True)
        yy = yy[idx]
        V = np.array([w * w * _v_at(spec, theta, ti) for ti in tt])
        ddu = (V + (point.k * w) ** 2) * yy[:, 0]
        d = _Dense(tt, yy[:, 0:1], yy[:, 1:2], ddu[:, None])
        ud = _Dense(tt, yy[:, 1:2], ddu[:, None],
                    (np.gradient(ddu, tt) if len(tt) > 2 else ddu)[:, None])
        outs.append((d(grid)[:, 0], ud(grid)[:, 0]))
    (mp, dmp), (mm, dmm) = outs
    return JostPair(point=point, theta=theta, L=L, grid=grid, mu_plus=mp, dmu_plus=dmp / w,
                    mu_minus=mm, dmu_minus=dmm / w, raw=sol)
