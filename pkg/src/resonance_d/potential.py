"""Potentials V(x) of the one dimensional operator -d^2/dx^2 + V.

Each potential carries the metadata that decides which continuation
routes are available:

* ``decay_rate``  largest a with exp(2a|x|) V in L^2 (inf for compact support),
* ``half_angle``  half opening of the double sector |arg(+-z)| < alpha on which
  V is holomorphic (0 if V is only defined on the real line),
* ``support``     (a1, a2) for compactly supported potentials, else None.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from .errors import OutsideAnalyticityDomain


@dataclass(frozen=True)
class SquareWell:
    """V = h on (a1, a2), 0 elsewhere, h/2 on the two jump points."""

    h: complex
    a1: float
    a2: float

    def __post_init__(self):
        if not self.a1 < self.a2:
            raise ValueError("square well needs a1 < a2")
        object.__setattr__(self, "h", complex(self.h))

    decay_rate = math.inf
    half_angle = 0.0

    @property
    def support(self) -> Tuple[float, float]:
        return (float(self.a1), float(self.a2))


@dataclass(frozen=True)
class PoschlTeller:
    """V(z) = -V0 / cosh(z)^2."""

    V0: complex
    half_angle: float = 1.2

    def __post_init__(self):
        object.__setattr__(self, "V0", complex(self.V0))
        if not 0 <= self.half_angle < math.pi / 2:
            raise ValueError("half_angle must lie in [0, pi/2)")

    decay_rate = 1.0
    support = None


@dataclass(frozen=True)
class Custom:
    """User supplied evaluator; decay_rate and half_angle are taken on trust."""

    evaluator: Callable[[complex], complex]
    decay_rate: float = 0.0
    half_angle: float = 0.0
    support: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.decay_rate < 0 or self.half_angle < 0:
            raise ValueError("decay_rate and half_angle must be non-negative")
        if self.half_angle >= math.pi / 2:
            raise ValueError("half_angle must be below pi/2")
        if self.support is not None:
            lo, hi = self.support
            if lo > hi:
                raise ValueError("support must be an ordered interval")
            object.__setattr__(self, "decay_rate", math.inf)


PotentialSpec = Union[SquareWell, PoschlTeller, Custom]


def zero_potential() -> Custom:
    """V = 0, expressed as a compactly supported custom potential."""
    return Custom(evaluator=lambda z: 0.0, decay_rate=math.inf,
                  half_angle=math.pi / 2 - 1e-3, support=(0.0, 0.0))


def is_zero(spec: PotentialSpec) -> bool:
    return isinstance(spec, Custom) and spec.support == (0.0, 0.0)


def _check_domain(spec: PotentialSpec, z: complex):
    if z.imag == 0:
        return
    ang = min(abs(cmath.phase(z)), abs(cmath.phase(-z)))
    if spec.half_angle <= 0 or ang >= spec.half_angle:
        raise OutsideAnalyticityDomain(
            f"V is not analytic at z={z!r} (half_angle={spec.half_angle})")


def evaluate(spec: PotentialSpec, z: complex) -> complex:
    z = complex(z)
    _check_domain(spec, z)
    if isinstance(spec, SquareWell):
        x = z.real
        if spec.a1 < x < spec.a2:
            return spec.h
        if x == spec.a1 or x == spec.a2:
            return spec.h / 2
        return 0j
    if isinstance(spec, PoschlTeller):
        return -spec.V0 / cmath.cosh(z) ** 2
    return complex(spec.evaluator(z))


def on_ray(spec: PotentialSpec, t, theta: float) -> np.ndarray:
    """Vectorised V(t e^{i theta}) for real t; theta must be admissible."""
    t = np.asarray(t, dtype=float)
    if theta != 0 and not abs(theta) < spec.half_angle:
        raise OutsideAnalyticityDomain(
            f"ray angle {theta} outside half_angle {spec.half_angle}")
    if isinstance(spec, SquareWell):
        out = np.where((t > spec.a1) & (t < spec.a2), spec.h, 0j)
        out = np.where((t == spec.a1) | (t == spec.a2), spec.h / 2, out)
        return out.astype(complex)
    z = t * np.exp(1j * theta)
    if isinstance(spec, PoschlTeller):
        return -spec.V0 / np.cosh(z) ** 2
    f = np.vectorize(lambda w: complex(spec.evaluator(w)), otypes=[complex])
    return f(z)


def _interval_exp_integral(lo, hi, c):
    """Integral of exp(c |y|) over [lo, hi]."""
    if hi <= lo:
        return 0.0
    def prim(y):
        if c == 0:
            return y
        return math.copysign(math.expm1(c * abs(y)) / c, y)
    return prim(hi) - prim(lo)


def tail_bound(spec: PotentialSpec, x: float, theta: float = 0.0, c: float = 0.0) -> float:
    """Upper bound for the one-sided tails of |V(y e^{i theta})| e^{c|y|}.

    Returns max over the two sides of the integral over y >= x and over
    y <= -x.  Non-increasing in x; 0 once x leaves a compact support.
    """
    if theta != 0 and not abs(theta) < spec.half_angle:
        raise OutsideAnalyticityDomain(
            f"ray angle {theta} outside half_angle {spec.half_angle}")
    x = float(x)
    if x < 0:
        raise ValueError("x must be non-negative")
    if spec.support is not None:
        a1, a2 = spec.support
        if isinstance(spec, SquareWell):
            mag = abs(spec.h)
            right = mag * _interval_exp_integral(max(x, a1), a2, c)
            left = mag * _interval_exp_integral(a1, min(-x, a2), c)
            return max(right, left)
        if x >= max(abs(a1), abs(a2)):
            return 0.0
        right = _quad_tail(spec, max(x, a1), a2, theta, c) if a2 > x else 0.0
        left = _quad_tail(spec, -min(-x, a2), -a1, theta, c, mirror=True) if a1 < -x else 0.0
        return max(right, left)
    if isinstance(spec, PoschlTeller):
        rate = 2.0 * math.cos(theta) - c
        if x <= 0 or rate <= 0:
            return math.inf
        q = math.exp(-2.0 * x * math.cos(theta))
        return 4.0 * abs(spec.V0) * math.exp(-rate * x) / (rate * (1.0 - q) ** 2)
    right = _quad_tail(spec, x, math.inf, theta, c)
    left = _quad_tail(spec, x, math.inf, theta, c, mirror=True)
    return max(right, left)


def _quad_tail(spec, lo, hi, theta, c, mirror=False):
    # numeric estimate for custom potentials; not a rigorous bound
    sgn = -1.0 if mirror else 1.0
    w = cmath.exp(1j * theta)

    def f(y):
        return abs(spec.evaluator(sgn * y * w)) * math.exp(c * y)

    val, _ = integrate.quad(f, lo, hi, limit=200)
    return val
