import numpy as np
import pytest

from qcompass.bayes import GaussianPrior
from qcompass.circuits import (CircuitSpec, circuit_cost, circuit_parts, ghz_circuit, optimize_angles, realize,
                               rotated_measurement_triplet, sequence_unitary)
from qcompass.info import fim, trace_inverse
from qcompass.spin import make_spin_system, rotation


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_ghz_circuit_fisher_diagonal(N):
    sol = realize(ghz_circuit(N))
    F = fim(sol.psi, sol.povm, np.zeros(3))
    assert np.allclose(F, np.diag([N, N, N * N]), rtol=1e-8, atol=1e-8)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_ghz_circuit_prepares_cat_state(N):
    psi, _ = circuit_parts(ghz_circuit(N))
    # all weight on |J,+-J>, equal halves; the relative phase is convention dependent
    assert abs(psi[0]) ** 2 + abs(psi[-1]) ** 2 == pytest.approx(1.0, abs=1e-12)
    assert abs(psi[0]) ** 2 == pytest.approx(0.5, abs=1e-12)


def test_triplet_pools_to_isotropic():
    for N, f in ((3, 5.0), (4, 8.0)):
        pooled = sum(fim(*circuit_parts(c), np.zeros(3)) for c in rotated_measurement_triplet(N)) / 3
        assert np.allclose(pooled, f * np.eye(3), atol=1e-8)
    assert trace_inverse(5.0 * np.eye(3)) == pytest.approx(0.6)


def test_sequence_order():
    sys = make_spin_system(2)
    u = sequence_unitary(sys, [("rot_x", 0.3), ("rot_z", 0.5)])
    assert np.allclose(u, rotation(sys, "z", 0.5) @ rotation(sys, "x", 0.3))


def test_spec_validation_and_roundtrip():
    with pytest.raises(ValueError):
        CircuitSpec(3, [("rot_w", 0.1)])
    with pytest.raises(ValueError):
        CircuitSpec(3, [("rot_x", np.inf)])
    c = ghz_circuit(4)
    back = CircuitSpec.from_dict(c.to_dict())
    assert np.array_equal(back.angles, c.angles)
    w = c.with_angles(c.angles + 4 * np.pi).wrapped()
    assert np.allclose(w.angles, c.angles)


def test_angle_search_does_not_lose_ground():
    prior = GaussianPrior.isotropic(3, 2.0 ** -3, nodes_per_axis=8)
    layout = ghz_circuit(2)
    start = circuit_cost(layout, prior)
    fit = optimize_angles(layout, prior, restarts=1, polish=False, maxiter=150)
    assert fit.xi <= start + 1e-15
    assert len(fit.history) == 1
