import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resonance_d import SurfacePoint
from resonance_d.errors import ExcludedPoint
from resonance_d.oracle import (poschl_teller_roots, semiclassical_roots, squarewell_bbD_closed,
                                squarewell_bbD_printed, squarewell_bound_states,
                                squarewell_characteristic, squarewell_second_sheet_roots)


def test_bound_states_satisfy_tan_cot():
    roots = squarewell_bound_states(-10, 0, 1)
    assert len(roots) == 2
    ks = sorted(r.k.real for r in roots)
    assert ks[0] == pytest.approx(0.0324421675065, abs=1e-10)
    assert ks[1] == pytest.approx(2.54759163282183, abs=1e-10)
    for p in roots:
        k = p.k.real
        s = math.sqrt(10 - k * k)
        even = s * math.tan(s / 2) - k
        odd = s / math.tan(s / 2) + k
        assert min(abs(even), abs(odd)) < 1e-9
        assert abs(squarewell_characteristic(p, -10, 0, 1)) < 1e-8


def test_bound_state_count_grows_with_depth():
    # a well of depth h holds ceil(sqrt(|h|) w / pi) states
    for h in (-1.0, -10.0, -50.0):
        assert len(squarewell_bound_states(h, 0, 1)) == math.ceil(math.sqrt(-h) / math.pi)


def test_second_sheet_roots():
    roots = squarewell_second_sheet_roots(-10, 0, 1, re_min=-3, im_max=8)
    ks = [r.point.k for r in roots if r.point.k.real < -1e-3]
    assert len(ks) == 2
    assert min(abs(k - (-2.96418393865527 + 4.47669260484520j)) for k in ks) < 1e-10
    for r in roots:
        assert r.residual < 1e-8


@given(st.floats(-3, 3), st.floats(-6, 6))
def test_printed_form_differs_by_q_over_h(re, im):
    k = complex(re, im)
    if abs(k) < 0.1 or abs(k * k + 10) < 0.1 or abs(re) < 1e-3:
        return
    p = SurfacePoint(k)
    q = cmath.sqrt(-10 + k * k)
    a = squarewell_bbD_closed(p, -10, 0, 1)
    b = squarewell_bbD_printed(p, -10, 0, 1)
    assert abs(b * -10 / q - a) <= 1e-9 * max(1.0, abs(a))


@given(st.floats(-3, 3), st.floats(-4, 4))
def test_conjugate_symmetry(re, im):
    k = complex(re, im)
    if abs(k) < 0.1 or abs(re) < 1e-3:
        return
    a = squarewell_bbD_closed(SurfacePoint(k), -10, 0, 1)
    b = squarewell_bbD_closed(SurfacePoint(k.conjugate()), -10, 0, 1)
    assert abs(a - b.conjugate()) <= 1e-9 * max(1.0, abs(a))


def test_weak_well_limit():
    p = SurfacePoint(0.7 + 0.4j)
    for h in (1e-3, 1e-6):
        assert abs(squarewell_bbD_closed(p, h, 0, 1) - 1) < 10 * h


def test_excluded_points():
    with pytest.raises(ExcludedPoint):
        squarewell_characteristic(SurfacePoint(2.0), -4, 0, 1)


def test_poschl_teller_lists():
    first = sorted(r.point.k.real for r in poschl_teller_roots(6, "first"))
    assert first == pytest.approx([1.0, 2.0])
    second = [r.point.k for r in poschl_teller_roots(-1, "second", (0, 1))]
    expect = [-0.5 + 0.866025403784j, -0.5 - 0.866025403784j,
              -1.5 + 0.866025403784j, -1.5 - 0.866025403784j]
    for z in expect:
        assert min(abs(z - k) for k in second) < 1e-10
    # V0 >= -1/4: every second-sheet root is real
    assert all(abs(r.point.k.imag) < 1e-14 for r in poschl_teller_roots(1, "second"))


def test_semiclassical_remainder_is_second_order():
    ratios = []
    for hb in (0.2, 0.1, 0.05):
        pairs = semiclassical_roots(-1, hb)
        assert len(pairs) == 2
        p, lead = pairs[0]
        ratios.append(abs(p.lam - lead) / hb ** 2)
    assert max(ratios) / min(ratios) < 2
