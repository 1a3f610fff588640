import numpy as np
import pytest

from resonance_d import ContourSpec, DConfig, PoschlTeller, SquareWell, count_zeros
from resonance_d import eigenfunction, find_resonances
from resonance_d.errors import RegionShrunk
from resonance_d.locate import admissible_regions, muller

SW = SquareWell(-10, 0, 1)


def test_muller_on_polynomial():
    k, res, its = muller(lambda z: (z - 1.5j) * (z + 2), 1.0, 1.2j, 1.4j)
    assert abs(k - 1.5j) < 1e-13 and res < 1e-12


def test_counts_and_additivity():
    spec = PoschlTeller(6)
    assert count_zeros(ContourSpec((0.5 - 0.5j, 2.5 + 0.5j)), spec) == 2
    left = count_zeros(ContourSpec((0.5 - 0.5j, 1.5 + 0.5j)), spec)
    right = count_zeros(ContourSpec((1.5 - 0.5j, 2.5 + 0.5j)), spec)
    assert (left, right) == (1, 1)
    assert count_zeros(ContourSpec((2.5 - 0.5j, 4 + 0.5j)), spec) == 0


def test_square_well_second_sheet():
    found = find_resonances(ContourSpec((-3 - 8j, -1e-3 + 8j)), SW)
    assert len(found) == 2 and not found.clusters
    ks = sorted((r.point.k for r in found), key=lambda z: z.imag)
    assert abs(ks[1] - (-2.96418393865527 + 4.47669260484520j)) < 1e-9
    assert abs(ks[0] - ks[1].conjugate()) < 1e-9
    for r in found:
        assert r.abs_D < 1e-8 and r.eigen_residual < 1e-6


def test_eigenfunction_decays_for_bound_state():
    found = find_resonances(ContourSpec((2 - 0.5j, 3 + 0.5j)), SW)
    assert len(found) == 1
    xs = [-4.0, -2.0, 0.5, 3.0, 5.0]
    mu = np.array([v for _, v in eigenfunction(found[0], SW, sample_xs=xs)])
    k = found[0].point.k.real
    # outside the well mu is a pure decaying exponential on each side
    scale = np.max(np.abs(mu))
    assert abs(mu[0] - mu[1] * np.exp(-2 * k)) < 1e-8 * scale
    assert abs(mu[4] - mu[3] * np.exp(-2 * k)) < 1e-8 * scale


def test_eigenfunction_grows_for_resonance():
    found = find_resonances(ContourSpec((-3.5 + 4j, -2.5 + 5j)), SW)
    assert len(found) == 1
    k = found[0].point.k
    mu = dict(eigenfunction(found[0], SW, sample_xs=[3.0, 5.0]))
    assert abs(mu[5.0] / mu[3.0] - np.exp(-2 * k)) < 1e-7 * abs(np.exp(-2 * k))
    assert abs(mu[5.0]) > abs(mu[3.0])


def test_unresolved_cluster_is_reported():
    found = find_resonances(ContourSpec((0.5 - 0.5j, 2.5 + 0.5j), max_depth=1), PoschlTeller(6),
                            root_tol=1e-30)
    assert len(found) == 0
    assert sum(c.count for c in found.clusters) == 2


def test_region_touching_cut_is_shrunk():
    c = ContourSpec((-1 + 1j, 1 + 2j))
    with pytest.warns(RegionShrunk):
        parts = admissible_regions(c)
    assert len(parts) == 2
    assert all(abs(p.lo.real) >= 1e-3 - 1e-15 and abs(p.hi.real) >= 1e-3 - 1e-15 for p in parts)


def test_poschl_teller_rotated_pair():
    found = find_resonances(ContourSpec((-1.65 + 0.8j, -1.35 + 0.95j)), PoschlTeller(-1))
    assert len(found) == 1
    assert abs(found[0].point.k - (-1.5 + 0.8660254037844386j)) < 1e-6
    assert found[0].theta < 0


def test_explicit_method_real_axis():
    cfg = DConfig(method="real_axis")
    found = find_resonances(ContourSpec((-0.9 + 0.5j, -0.1 + 1.2j)), PoschlTeller(-1), cfg)
    assert len(found) == 1
    assert abs(found[0].point.k - (-0.5 + 0.8660254037844386j)) < 1e-6
    assert found[0].theta == 0.0
