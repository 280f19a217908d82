import math

import numpy as np
import pytest
from scipy.special import j0, j1, struve

from qcompass import catalog
from qcompass.domain import (bessel_j, circle_directions, default_directions, domain_report, fibonacci_sphere,
                             gamma0, gamma0_equation, isolated_radius, phi_max_asymptotic_2d, ray_root, struve_h)
from qcompass.spin import make_spin_system


def test_direction_grids():
    f = fibonacci_sphere(500)
    assert np.allclose(np.linalg.norm(f, axis=1), 1)
    assert abs(f.mean(axis=0)).max() < 0.01
    assert default_directions(2).shape == (360, 2)
    assert default_directions(3).shape == (2000, 3)
    assert np.allclose(np.linalg.norm(circle_directions(7), axis=1), 1)


def test_ghz_root_and_r():
    g = catalog.ghz_1d(4)
    assert ray_root(g, [1.0]).radius == pytest.approx(math.pi / 8, abs=1e-9)
    rep = domain_report(g)
    assert rep.r_coefficient == pytest.approx(math.pi / 2, abs=1e-6)


def test_ring_radius_and_amplitude_method():
    rep = domain_report(catalog.get("qc2d-n4"))
    assert rep.method == "amplitude-roots"
    assert rep.phi_max == pytest.approx(0.443, abs=1e-3)
    assert rep.phi_max == min(rep.radii) and min(rep.radii) > 0


def test_special_functions_against_scipy():
    for x in (0.3, 1.1, 2.5):
        assert bessel_j(0, x) == pytest.approx(j0(x), rel=1e-12)
        assert bessel_j(1, x) == pytest.approx(j1(x), rel=1e-12)
        assert struve_h(0, x) == pytest.approx(struve(0, x), rel=1e-12)
        assert struve_h(1, x) == pytest.approx(struve(1, x), rel=1e-12)


def test_gamma0():
    g = gamma0()
    assert g == pytest.approx(1.10836, abs=1e-5)
    assert abs(gamma0_equation(g)) < 1e-12
    assert math.sqrt(2) * g == pytest.approx(1.5675, abs=1e-4)


def test_asymptotic_radius_large_j():
    J = 128
    s = catalog.qc_2d_even(J)
    r = ray_root(s, [1.0, 0.0]).radius
    assert r == pytest.approx(phi_max_asymptotic_2d(J), rel=0.01)


def test_tetrahedral_isolated_radius():
    s = catalog.get("qc3d-n4")
    assert isolated_radius(s) == pytest.approx(math.asin(math.sqrt(2 / 3)) / 2, abs=1e-5)


def test_ring_amplitudes_share_a_phase():
    # antiunitary symmetry: along a ray every outcome amplitude is real up to one fixed phase per outcome
    s = catalog.get("qc2d-n4")
    from qcompass.spin import unitary
    sys = make_spin_system(4)
    vecs = [np.linalg.eigh(e)[1][:, -1] for e in s.effects]
    n = np.array([np.cos(0.7), np.sin(0.7)])
    for v in vecs:
        amps = np.array([np.vdot(v, unitary(sys, t * n) @ s.psi) for t in np.linspace(0.05, 1.0, 9)])
        ref = amps[np.argmax(abs(amps))]
        assert np.abs((amps * np.conj(ref) / abs(ref)).imag).max() < 1e-10
