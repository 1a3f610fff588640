"""Closed-form resonance data for the square well and the Poschl-Teller potential.

These routines use only elementary functions, bisection and a scalar Newton
iteration, so they are independent of the ODE and quadrature machinery.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import ExcludedPoint
from .surface import Sheet, SurfacePoint


class Family(str, enum.Enum):
    SQUARE_WELL_CHAR = "square_well_characteristic"
    SQUARE_WELL_TANCOT = "square_well_tan_cot"
    POSCHL_TELLER_FIRST = "poschl_teller_first"
    POSCHL_TELLER_SECOND = "poschl_teller_second"
    SEMICLASSICAL = "semiclassical"


@dataclass(frozen=True)
class OracleRoot:
    point: SurfacePoint
    family: Family
    n: Optional[int]
    residual: float


def _check_sw(point: SurfacePoint, h: complex):
    lam = point.lam
    if lam == 0 or abs(lam - h) == 0:
        raise ExcludedPoint(f"lambda = {lam} is excluded (0 or h)")


def _q(k: complex, h: complex) -> complex:
    # sqrt(h - lambda) = sqrt(h + k^2), canonical Re >= 0
    return cmath.sqrt(complex(h) + k * k)


def squarewell_characteristic(point: SurfacePoint, h: complex, a1: float, a2: float) -> complex:
    """e^{2 q w} - (q - k)^4 / h^2 with q = sqrt(h + k^2), w = a2 - a1.

    For Re q = 0 the other orientation of q is also tried and the residual
    of smaller modulus is returned.
    """
    _check_sw(point, h)
    k, h, w = point.k, complex(h), a2 - a1
    q = _q(k, h)
    vals = [cmath.exp(2 * q * w) - (q - k) ** 4 / h ** 2]
    if abs(q.real) < 1e-10:
        q = -q
        vals.append(cmath.exp(2 * q * w) - (q - k) ** 4 / h ** 2)
    return min(vals, key=abs)


def squarewell_reduced(k: complex, h: complex, w: float) -> complex:
    """1 - (q - k)^4 e^{-2 q w} / h^2; vanishes at the same points, bounded growth."""
    q = _q(k, h)
    return 1 - (q - k) ** 4 * cmath.exp(-2 * q * w) / complex(h) ** 2


def squarewell_bbD_closed(point: SurfacePoint, h: complex, a1: float, a2: float) -> complex:
    """Closed-form determinant for the square well.

    D = h^2 e^{(q-k) w} / (4 k q (q-k)^2) * (1 - (q-k)^4 e^{-2 q w} / h^2)

    which equals E / (2k) with E the Jost Wronskian.  The expression is even in
    q and tends to 1 as h -> 0; small |h| uses the equivalent form
    e^{-k w} [(q+k)^2 e^{q w} - (q-k)^2 e^{-q w}] / (4 k q), which has no 0/0.
    """
    _check_sw(point, h)
    k, h, w = point.k, complex(h), a2 - a1
    q = _q(k, h)
    if abs(q) < 1e-12:
        # q -> 0 limit of the regular form
        return cmath.exp(-k * w) * (4 * k + 2 * k * k * w) / (4 * k)
    if abs(h) < 1e-3 * abs(k) ** 2 or abs(q - k) < 1e-8 * abs(k):
        return cmath.exp(-k * w) * ((q + k) ** 2 * cmath.exp(q * w)
                                    - (q - k) ** 2 * cmath.exp(-q * w)) / (4 * k * q)
    return (h * h * cmath.exp((q - k) * w) / (4 * k * q * (q - k) ** 2)
            * (1 - (q - k) ** 4 * cmath.exp(-2 * q * w) / (h * h)))


def squarewell_bbD_printed(point: SurfacePoint, h: complex, a1: float, a2: float) -> complex:
    """The determinant formula with prefactor h / (4 k (q-k)^2).

    Kept for comparison: it shares the zeros of the corrected form but
    differs from it by the factor h / q.
    """
    _check_sw(point, h)
    k, h, w = point.k, complex(h), a2 - a1
    q = _q(k, h)
    return (h * cmath.exp((q - k) * w) / (4 * k * (q - k) ** 2)
            * (1 - (q - k) ** 4 * cmath.exp(-2 * q * w) / (h * h)))


def _bisect(f, lo, hi, tol=1e-15, maxit=200):
    flo = f(lo)
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def squarewell_bound_states(h: float, a1: float, a2: float) -> List[SurfacePoint]:
    """First-sheet roots lambda = -r, 0 < r < -h, of the even/odd equations.

    With s = sqrt(-r - h) and p = sqrt(r) the even states solve
    s sin(w s / 2) - p cos(w s / 2) = 0 and the odd states
    s cos(w s / 2) + p sin(w s / 2) = 0; both are the tan/cot relations
    multiplied through to remove poles.  Returned as k = sqrt(r) > 0,
    ordered by increasing r.
    """
    h = float(h)
    w = a2 - a1
    if not (h < 0 and w > 0):
        raise ValueError("need h < 0 and a2 > a1")
    smax = math.sqrt(-h)

    def even(s):
        p = math.sqrt(max(-h - s * s, 0.0))
        return s * math.sin(w * s / 2) - p * math.cos(w * s / 2)

    def odd(s):
        p = math.sqrt(max(-h - s * s, 0.0))
        return s * math.cos(w * s / 2) + p * math.sin(w * s / 2)

    roots = []
    grid = np.linspace(0.0, smax, 4000)
    for f in (even, odd):
        vals = [f(s) for s in grid]
        for i in range(len(grid) - 1):
            a, b = vals[i], vals[i + 1]
            if a == 0 and 0 < grid[i] < smax:
                roots.append(grid[i])
            elif a * b < 0:
                roots.append(_bisect(f, grid[i], grid[i + 1]))
    out = []
    for s in roots:
        r = -h - s * s
        if 0 < r < -h:
            out.append(SurfacePoint(math.sqrt(r)))
    out.sort(key=lambda p: -p.k.real)
    return out


def _newton_reduced(k, h, w, maxit=60, tol=1e-15):
    """Newton on f(k) = 1 - (q-k)^4 e^{-2qw}/h^2, q' = k/q."""
    h = complex(h)
    for _ in range(maxit):
        q = cmath.sqrt(h + k * k)
        e = cmath.exp(-2 * q * w)
        f = 1 - (q - k) ** 4 * e / (h * h)
        dq = k / q
        df = -(4 * (q - k) ** 3 * (dq - 1) * e - 2 * w * dq * (q - k) ** 4 * e) / (h * h)
        step = f / df
        k = k - step
        if abs(step) < tol * max(1.0, abs(k)):
            break
    return k


def squarewell_second_sheet_roots(h: float, a1: float, a2: float, re_min: float, im_max: float,
                                  n_max: int = 200) -> List[OracleRoot]:
    """Second-sheet roots in the box re_min < Re k < 0, |Im k| < im_max.

    Complex roots are seeded from the large-|k| balance
    2 k w ~ log(h^2 / (16 k^4)) + 2 pi i n (the principal q is close to -k
    on the second sheet) and polished by Newton.  Real
    negative roots are located by a sign scan on the real axis.
    """
    h = complex(h)
    w = a2 - a1
    found: List[complex] = []

    def add(k):
        if not (re_min < k.real < 0 and abs(k.imag) < im_max):
            return
        if abs(squarewell_reduced(k, h, w)) > 1e-9:
            return
        if all(abs(k - f) > 1e-9 for f in found):
            found.append(k)

    for n in range(-n_max, n_max + 1):
        if n == 0:
            continue
        # fixed-point seed: 2 k w = log(h^2 / (16 k^4)) + 2 pi i n
        k = complex(-1.0, math.pi * n / w)
        for _ in range(50):
            k = (cmath.log(h * h / (16 * k ** 4)) + 2j * math.pi * n) / (2 * w)
        if abs(k.imag) > im_max + 5:
            continue
        add(_newton_reduced(k, h, w))
    # purely real roots (antibound states); the reduced function is real there
    xs = np.linspace(re_min, -1e-6, 6000)
    fv = [squarewell_reduced(complex(x), h, w) for x in xs]
    for i in range(len(xs) - 1):
        a, b = fv[i], fv[i + 1]
        if abs(a.imag) < 1e-9 and abs(b.imag) < 1e-9 and a.real * b.real < 0:
            r = _bisect(lambda x: squarewell_reduced(complex(x), h, w).real, xs[i], xs[i + 1])
            add(_newton_reduced(complex(r), h, w))
    found.sort(key=lambda z: (z.imag, z.real))
    return [OracleRoot(SurfacePoint(k), Family.SQUARE_WELL_CHAR, None,
                       abs(squarewell_characteristic(SurfacePoint(k), h, a1, a2)))
            for k in found]


def poschl_teller_roots(V0: complex, sheet, n_range: Tuple[int, int] = (0, 10)) -> List[OracleRoot]:
    """k = +-sqrt(V0 + 1/4) - n - 1/2 for n in n_range (inclusive), filtered by sheet."""
    sheet = Sheet(sheet)
    s = cmath.sqrt(complex(V0) + 0.25)
    fam = Family.POSCHL_TELLER_FIRST if sheet is Sheet.FIRST else Family.POSCHL_TELLER_SECOND
    out: List[OracleRoot] = []
    for n in range(n_range[0], n_range[1] + 1):
        for sgn in (1, -1):
            k = sgn * s - n - 0.5
            if k == 0:
                continue
            if sheet is Sheet.FIRST and not k.real > 0:
                continue
            if sheet is Sheet.SECOND and not k.real < 0:
                continue
            if any(abs(k - r.point.k) < 1e-14 for r in out):
                continue
            # residual of (k + n + 1/2)^2 = V0 + 1/4
            res = abs((k + n + 0.5) ** 2 - (complex(V0) + 0.25))
            out.append(OracleRoot(SurfacePoint(k), fam, n, res))
    return out


def semiclassical_roots(V0: float, hbar: float, n_range: Tuple[int, int] = (0, 0)):
    """Second-sheet roots of the hbar-scaled well and their leading-order lambda.

    exact  : k = +-sqrt(V0 + hbar^2/4) - hbar (n + 1/2), kept when Re k < 0
    leading: lambda = -V0 +- 2 i sqrt(-V0) (n + 1/2) hbar
    Returns a list of (SurfacePoint, leading lambda) with matching signs.
    """
    if not (V0 < 0 and hbar > 0):
        raise ValueError("need V0 < 0 and hbar > 0")
    s = cmath.sqrt(V0 + hbar * hbar / 4)
    out = []
    for n in range(n_range[0], n_range[1] + 1):
        for sgn in (1, -1):
            k = sgn * s - hbar * (n + 0.5)
            if not k.real < 0:
                continue
            p = SurfacePoint(k)
            # the branch with Im k = sgn Im s has lambda on the matching side
            side = 1 if p.lam.imag > 0 else -1
            lead = -V0 + side * 2j * math.sqrt(-V0) * (n + 0.5) * hbar
            out.append((p, lead))
    return out
