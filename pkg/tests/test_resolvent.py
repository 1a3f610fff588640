import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from resonance_d import PoschlTeller, SquareWell, SurfacePoint
from resonance_d.errors import ContourInvalid, SingularAtResonance, UnsupportedPotential
from resonance_d.resolvent import (fourier_resolvent_indicator, free_resolvent,
                                   free_resolvent_indicator, generalized_resolvent,
                                   nystrom_system, parallel_defect, riesz_projection, sigma_min)

H = -10.0
SW = SquareWell(H, 0, 1)
ROOT = -2.96418393865527 + 4.47669260484520j


def indicator(a, b):
    return lambda y: ((np.asarray(y) >= a) & (np.asarray(y) <= b)).astype(float)


def poly(y):
    y = np.asarray(y, dtype=float)
    return 1 + 0.5 * y * y


def test_free_resolvent_example():
    val = free_resolvent(SurfacePoint(1.0), indicator(-1, 1), 0.0, (-1, 1))
    assert abs(val + (1 - math.exp(-1))) < 1e-13


def test_free_resolvent_off_support():
    k = 0.8 + 0.5j
    p = SurfacePoint(k)
    a = free_resolvent(p, poly, 3.0, (0, 1))
    b = free_resolvent(p, poly, 4.5, (0, 1))
    assert abs(b / a - cmath.exp(-1.5 * k)) < 1e-12


@pytest.mark.parametrize("k", [1.0, 0.5 + 2j, 2 - 1j, 0.2 + 0.1j])
@pytest.mark.parametrize("x", [-0.7, 0.3, 2.0])
def test_free_resolvent_three_routes(k, x):
    p = SurfacePoint(k)
    quad = free_resolvent(p, indicator(-0.5, 1), x, (-0.5, 1))
    closed = free_resolvent_indicator(p, -0.5, 1, x)
    fourier = fourier_resolvent_indicator(p, -0.5, 1, x)
    assert abs(quad - closed) < 1e-12
    assert abs(fourier - closed) < 1e-9


def _jost_sw(k, x):
    """Closed-form Jost solutions (mu_+, mu_-) of the square well on (0, 1)."""
    q = cmath.sqrt(H + k * k)

    def outside(a, b, t):
        # solution of u'' = k^2 u with u(0) = a, u'(0) = b
        return a * cmath.cosh(k * t) + b * cmath.sinh(k * t) / k

    def inside(a, b, t):
        return a * cmath.cosh(q * t) + b * cmath.sinh(q * t) / q

    def dinside(a, b, t):
        return a * q * cmath.sinh(q * t) + b * cmath.cosh(q * t)

    # mu_+ = e^{-k x} for x >= 1
    a1, b1 = cmath.exp(-k), -k * cmath.exp(-k)
    if x >= 1:
        mp = cmath.exp(-k * x)
    elif x >= 0:
        mp = inside(a1, b1, x - 1)
    else:
        mp = outside(inside(a1, b1, -1), dinside(a1, b1, -1), x)
    # mu_- = e^{k x} for x <= 0
    if x <= 0:
        mm = cmath.exp(k * x)
    elif x <= 1:
        mm = inside(1, k, x)
    else:
        mm = outside(inside(1, k, 1), dinside(1, k, 1), x - 1)
    return mp, mm


def _green_apply(k, phi, a, b, x):
    # E = mu_+ mu_-' - mu_+' mu_- evaluated at 0, where mu_- = e^{kx}
    q = cmath.sqrt(H + k * k)
    a1, b1 = cmath.exp(-k), -k * cmath.exp(-k)
    mp0 = a1 * cmath.cosh(q) - b1 * cmath.sinh(q) / q
    dmp0 = -a1 * q * cmath.sinh(q) + b1 * cmath.cosh(q)
    E = mp0 * k - dmp0

    def g(y):
        mp_x, mm_x = _jost_sw(k, x)
        mp_y, mm_y = _jost_sw(k, y)
        return (mp_x * mm_y if y <= x else mm_x * mp_y) / (-E) * phi(y)

    pts = [p for p in (0.0, 1.0, x) if a < p < b]
    re = integrate.quad(lambda y: g(y).real, a, b, points=pts or None, epsabs=1e-14, epsrel=1e-13,
                        limit=200)[0]
    im = integrate.quad(lambda y: g(y).imag, a, b, points=pts or None, epsabs=1e-14, epsrel=1e-13,
                        limit=200)[0]
    return re + 1j * im


@pytest.mark.parametrize("k", [1.2 + 0.5j, 0.7 - 2j, -1.5 + 2j, -2.2 - 3.3j])
def test_resolvent_matches_jost_green_function(k):
    p = SurfacePoint(k)
    sol = generalized_resolvent(p, SW, poly, (0, 1), N=120)
    for x in (-0.8, 0.25, 0.6, 1.7):
        ref = _green_apply(k, lambda y: 1 + 0.5 * y * y, 0.0, 1.0, x)
        assert abs(sol(x) - ref) < 1e-9 * max(1.0, abs(ref))


def test_zero_well_reduces_to_free_resolvent():
    p = SurfacePoint(0.9 + 0.4j)
    sol = generalized_resolvent(p, SquareWell(0, 0, 1), poly, (0, 1), N=40)
    for x in (-0.5, 0.5, 1.5):
        assert abs(sol(x) - free_resolvent(p, poly, x, (0, 1))) < 1e-14


def test_off_node_fredholm_residual():
    p = SurfacePoint(-1.1 + 2.5j)
    k = p.k
    sol = generalized_resolvent(p, SW, poly, (0, 1), N=120)
    for x in (0.137, 0.5021, 0.913):
        def f(y):
            return -cmath.exp(-k * abs(x - y)) / (2 * k) * H * sol(y)
        re = integrate.quad(lambda y: f(y).real, 0, 1, points=[x], epsabs=1e-13, limit=200)[0]
        im = integrate.quad(lambda y: f(y).imag, 0, 1, points=[x], epsabs=1e-13, limit=200)[0]
        rhs = free_resolvent(p, poly, x, (0, 1)) + re + 1j * im
        assert abs(sol(x) - rhs) < 1e-9 * abs(sol(x))


def test_nystrom_n_versus_2n():
    p = SurfacePoint(-2.0 + 3.0j)
    xs = np.linspace(-0.5, 1.5, 9)
    a = generalized_resolvent(p, SW, poly, (0, 1), N=100)(xs)
    b = generalized_resolvent(p, SW, poly, (0, 1), N=200)(xs)
    assert np.max(np.abs(a - b)) < 1e-8 * np.max(np.abs(b))


def test_singular_at_resonance():
    with pytest.raises(SingularAtResonance):
        generalized_resolvent(SurfacePoint(ROOT), SW, poly, (0, 1))
    ring = [sigma_min(SurfacePoint(ROOT + 0.3 * cmath.exp(2j * math.pi * j / 16)), SW)
            for j in range(16)]
    assert sigma_min(SurfacePoint(ROOT), SW) < 1e-6 * np.median(ring)


def test_unsupported_potential():
    with pytest.raises(UnsupportedPotential):
        nystrom_system(SurfacePoint(1.0), PoschlTeller(1))


def test_cut_continuity():
    vals = []
    for e in (1e-4, -1e-4):
        sol = generalized_resolvent(SurfacePoint(complex(e, 2.0)), SW, poly, (0, 1), N=80)
        vals.append(sol(0.4))
    assert abs(vals[0] - vals[1]) < 1e-2 * abs(vals[0])


def test_riesz_projection_rank_one():
    xs = np.linspace(-0.5, 1.5, 9)
    a = [v for _, v in riesz_projection(ROOT, 0.5, 64, SW, poly, xs, (0, 1))]
    b = [v for _, v in riesz_projection(ROOT, 0.5, 64, SW, indicator(0.2, 0.7), xs, (0.2, 0.7))]
    assert parallel_defect(a, b) < 1e-8
    c = [v for _, v in riesz_projection(ROOT, 0.5, 128, SW, poly, xs, (0, 1))]
    assert np.max(np.abs(np.subtract(a, c))) < 1e-8 * np.max(np.abs(c))


def test_riesz_projection_empty_and_invalid():
    xs = np.linspace(0, 1, 5)
    out = [v for _, v in riesz_projection(-2 + 2j, 0.5, 64, SW, poly, xs, (0, 1))]
    assert np.max(np.abs(out)) < 1e-10
    with pytest.raises(ContourInvalid):
        riesz_projection(-0.3 + 1j, 0.5, 16, SW, poly, xs, (0, 1))
    with pytest.raises(ContourInvalid):
        riesz_projection(ROOT, 0.5, 16, SW, poly, xs, (0, 1), known_roots=[ROOT + 0.6])
