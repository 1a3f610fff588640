"""Points on the two-sheeted surface of sqrt(lambda), stored in k = sqrt(-lambda).

The surface minus the branch point is the punctured k-plane, so every
navigation step is done on ``k`` and ``lambda = -k**2`` is only derived.
Re k > 0 is the physical (first) sheet, Re k < 0 the second sheet and
Re k == 0 the cut (positive real lambda axis).
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

from .errors import BranchPoint


class Sheet(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"
    CUT = "cut"


@dataclass(frozen=True)
class SurfacePoint:
    k: complex

    def __post_init__(self):
        k = complex(self.k)
        if k == 0:
            raise BranchPoint("k = 0 is the branch point lambda = 0")
        object.__setattr__(self, "k", k)

    @property
    def lam(self) -> complex:
        return -self.k * self.k

    @property
    def sheet(self) -> Sheet:
        if self.k.real > 0:
            return Sheet.FIRST
        if self.k.real < 0:
            return Sheet.SECOND
        return Sheet.CUT

    @property
    def arg_lambda(self) -> float:
        """arg(lambda) = 2 arg(k) - pi, with arg(k) in (-pi, pi]."""
        ph = cmath.phase(self.k)
        if ph == -math.pi:
            # signed zero imaginary part; the convention is arg k in (-pi, pi]
            ph = math.pi
        return 2.0 * ph - math.pi

    def __repr__(self):
        return f"SurfacePoint(k={self.k!r}, sheet={self.sheet.value})"


def lambda_of(point: SurfacePoint) -> complex:
    return point.lam


def from_lambda(lam: complex, sheet: Sheet | str = Sheet.FIRST) -> SurfacePoint:
    """Lift ``lam`` onto the requested sheet.

    Points on the positive real axis are returned on the cut (Im k >= 0)
    whatever sheet was asked for.
    """
    lam = complex(lam)
    if lam == 0:
        raise BranchPoint("lambda = 0 is the branch point")
    sheet = Sheet(sheet)
    if sheet is Sheet.CUT:
        raise ValueError("request FIRST or SECOND; the cut is assigned automatically")
    if lam.imag == 0 and lam.real > 0:
        # avoid signed-zero ambiguity of sqrt(-lam)
        return SurfacePoint(1j * math.sqrt(lam.real))
    k = cmath.sqrt(-lam)
    if k.real == 0:
        return SurfacePoint(complex(0.0, abs(k.imag)))
    if sheet is Sheet.SECOND:
        k = -k
    return SurfacePoint(k)


def in_strip(point: SurfacePoint, a: float) -> bool:
    """-a < Im sqrt(lambda) < a, i.e. |Re k| < a."""
    if a <= 0:
        raise ValueError("strip half-width must be positive")
    return abs(point.k.real) < a


def in_sector(point: SurfacePoint, alpha: float) -> bool:
    """-2 pi - 2 alpha < arg(lambda) < 2 alpha, i.e. |arg k| < pi/2 + alpha."""
    if not 0 < alpha < math.pi / 2:
        raise ValueError("alpha must lie in (0, pi/2)")
    return abs(cmath.phase(point.k)) < math.pi / 2 + alpha
