import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resonance_d import Custom, PoschlTeller, SquareWell, evaluate, tail_bound, zero_potential
from resonance_d.errors import OutsideAnalyticityDomain
from resonance_d.potential import on_ray


def test_square_well_values():
    sw = SquareWell(-10, 0, 1)
    assert evaluate(sw, 0.5) == -10
    assert evaluate(sw, 0.0) == -5
    assert evaluate(sw, 1.0) == -5
    assert evaluate(sw, 2.0) == 0
    assert sw.support == (0.0, 1.0)
    with pytest.raises(OutsideAnalyticityDomain):
        evaluate(sw, 0.5 + 0.1j)
    with pytest.raises(ValueError):
        SquareWell(1, 1, 0)


def test_poschl_teller_values():
    pt = PoschlTeller(6)
    assert abs(evaluate(pt, 0) + 6) < 1e-15
    z = 0.3 * cmath.exp(0.5j)
    assert abs(evaluate(pt, z) + 6 / cmath.cosh(z) ** 2) < 1e-14
    with pytest.raises(OutsideAnalyticityDomain):
        evaluate(pt, 1j)


@given(st.floats(-5, 5), st.floats(-1.1, 1.1))
def test_schwarz_reflection(r, ang):
    pt = PoschlTeller(-1.0)
    z = r * cmath.exp(1j * ang)
    if abs(z) < 1e-9:
        return
    assert abs(evaluate(pt, z.conjugate()) - evaluate(pt, z).conjugate()) < 1e-12 * (1 + abs(evaluate(pt, z)))


def test_on_ray_matches_evaluate():
    pt = PoschlTeller(2.0)
    t = np.linspace(-3, 3, 7)
    v = on_ray(pt, t, 0.4)
    ref = [evaluate(pt, x * cmath.exp(0.4j)) for x in t]
    assert np.allclose(v, ref, rtol=1e-14)
    with pytest.raises(OutsideAnalyticityDomain):
        on_ray(pt, t, 1.3)


def test_tail_bound_examples():
    assert tail_bound(SquareWell(-10, 0, 1), 2.0) == 0.0
    b0 = tail_bound(PoschlTeller(1), 10)
    b1 = tail_bound(PoschlTeller(1), 10, theta=-0.3)
    assert 0 < b0 <= 4.2e-9
    assert 0 < b1 <= 2.1e-8
    # the bound dominates the actual one-sided tail integral
    y = np.linspace(10, 40, 20001)
    for th, b in ((0.0, b0), (-0.3, b1)):
        f = np.abs(1 / np.cosh(y * cmath.exp(1j * th)) ** 2)
        assert np.trapezoid(f, y) <= b * (1 + 1e-6)


@given(st.floats(0.5, 12), st.floats(0.1, 4))
def test_tail_bound_monotone(x, dx):
    pt = PoschlTeller(3)
    assert tail_bound(pt, x + dx) <= tail_bound(pt, x) * (1 + 1e-9)


def test_custom_and_zero():
    z = zero_potential()
    assert evaluate(z, 0.3) == 0
    assert z.support == (0.0, 0.0)
    c = Custom(lambda w: cmath.exp(-w * w), decay_rate=1.0, half_angle=0.5)
    assert abs(evaluate(c, 1.0) - math.exp(-1)) < 1e-15
    with pytest.raises(ValueError):
        Custom(lambda w: 0, half_angle=2.0)
