import numpy as np
import pytest

from qcompass import catalog
from qcompass.majorana import (coherent_state, constellation, husimi, husimi_grid, point_match_distance,
                               state_from_constellation)
from qcompass.spin import make_spin_system, rotation


def test_tetrahedron():
    p = constellation(catalog.get("qc3d-n4").psi).points
    g = p @ p.T
    assert np.allclose(g[~np.eye(4, dtype=bool)], -1 / 3, atol=1e-9)


def test_octahedron():
    p = constellation(catalog.get("qc3d-n6").psi).points
    dots = np.sort((p @ p.T)[~np.eye(6, dtype=bool)])
    assert np.allclose(dots[:6], -1, atol=1e-9) and np.allclose(dots[6:], 0, atol=1e-9)


def test_coherent_state_points_along_its_axis():
    pts = constellation(coherent_state(4, 0.3, 0.2)).angles
    assert np.allclose(pts, [0.3, 0.2], atol=1e-3)  # fourfold root, spread ~ eps^(1/4)
    north = constellation(make_spin_system(3).basis(1.5)).points
    south = constellation(make_spin_system(3).basis(-1.5)).points
    assert np.allclose(north, [0, 0, 1]) and np.allclose(south, [0, 0, -1])


def test_husimi_vanishes_at_antipodes():
    rng = np.random.default_rng(4)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    for th, ph in constellation(psi).angles:
        assert husimi(psi, np.pi - th, ph + np.pi) < 1e-20


def test_husimi_grid_normalization():
    psi = catalog.get("qc3d-n4").psi
    th, ph, q = husimi_grid(psi, 200, 200)
    integral = (2 * 2 + 1) / (4 * np.pi) * np.sum(q * np.sin(th)[:, None]) * (th[1] - th[0]) * (ph[1] - ph[0])
    assert integral == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError):
        husimi_grid(psi, 4, 4)


def test_round_trip_and_equivariance():
    rng = np.random.default_rng(1)
    psi = rng.normal(size=7) + 1j * rng.normal(size=7)
    psi /= np.linalg.norm(psi)
    back = state_from_constellation(constellation(psi))
    assert abs(np.vdot(psi, back)) == pytest.approx(1.0, abs=1e-10)
    sys = make_spin_system(6)
    a = 0.7
    ry = np.array([[np.cos(a), 0, np.sin(a)], [0, 1, 0], [-np.sin(a), 0, np.cos(a)]])
    rotated = constellation(rotation(sys, "y", a) @ psi).points
    assert point_match_distance(rotated, constellation(psi).points @ ry.T) < 1e-9


def test_zero_state_rejected():
    with pytest.raises(ValueError):
        constellation(np.zeros(3))
