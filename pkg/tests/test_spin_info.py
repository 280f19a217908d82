import numpy as np
import pytest
from scipy.linalg import expm

from qcompass import catalog
from qcompass.exceptions import DegenerateInputError, InvalidPovmError
from qcompass.info import (Povm, check_povm, cond_probs, fim, qfim, quasiclassical_check, sld, sld_povm,
                           trace_inverse)
from qcompass.spin import derivative_states, encode, make_spin_system, unitary


@pytest.mark.parametrize("N", [1, 2, 3, 4, 7])
def test_spin_algebra(N):
    s = make_spin_system(N)
    comm = s.jx @ s.jy - s.jy @ s.jx
    assert np.allclose(comm, 1j * s.jz)
    casimir = s.jx @ s.jx + s.jy @ s.jy + s.jz @ s.jz
    assert np.allclose(casimir, s.J * (s.J + 1) * np.eye(s.dim))
    assert np.allclose(np.diag(s.jz).real, s.m)
    assert s.m[0] == s.J


def test_unitary_matches_scipy_expm():
    s = make_spin_system(5)
    phi = np.array([0.3, -1.1, 0.7])
    ref = expm(-1j * (phi[0] * s.jx + phi[1] * s.jy + phi[2] * s.jz))
    assert np.allclose(unitary(s, phi), ref, atol=1e-12)
    assert np.allclose(unitary(s, [0.4]), expm(-0.4j * s.jz), atol=1e-12)


def test_encode_rejects_bad_input():
    s = make_spin_system(3)
    with pytest.raises(ValueError):
        encode(s, np.ones(3), [0.1])
    with pytest.raises(ValueError):
        encode(s, np.ones(4) / 2, [np.nan])
    with pytest.raises(ValueError):
        encode(s, np.ones(4) / 2, np.zeros(4))


def test_derivative_states_finite_difference():
    s = make_spin_system(4)
    rng = np.random.default_rng(2)
    psi = rng.normal(size=5) + 1j * rng.normal(size=5)
    psi /= np.linalg.norm(psi)
    phi = np.array([0.5, -0.2, 1.3])
    der = derivative_states(s, psi, phi)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        fd = (encode(s, psi, phi + e) - encode(s, psi, phi - e)) / (2 * h)
        assert np.allclose(der[i], fd, atol=1e-8)


def test_povm_validation_names_invariant():
    eye = np.eye(2)
    with pytest.raises(InvalidPovmError, match="sum to identity"):
        check_povm([eye, eye])
    with pytest.raises(InvalidPovmError, match="positive semidefinite"):
        check_povm([np.diag([2.0, 0]), np.diag([-1.0, 1])])
    with pytest.raises(InvalidPovmError, match="Hermitian"):
        check_povm([np.array([[0.5, 1], [0, 0.5]]), np.array([[0.5, -1], [0, 0.5]])])
    with pytest.raises(InvalidPovmError, match="at least 2"):
        check_povm([eye])


def test_probabilities_sum_to_one():
    s = catalog.get("qc3d-n4")
    p = cond_probs(s.psi, s.povm, [0.2, -0.4, 0.1])
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert p.min() >= 0


def test_ghz_fim_is_n_squared():
    for N in (2, 4, 6):
        g = catalog.ghz_1d(N)
        assert fim(g.psi, g.povm, [0.0])[0, 0] == pytest.approx(N * N, rel=1e-10)
        assert qfim(g.psi, [0.0])[0, 0] == pytest.approx(N * N, rel=1e-10)


def test_zero_probability_outcome_limit():
    # the third GHZ effect never fires; its rank-one limit adds nothing
    g = catalog.ghz_1d(4)
    info = fim(g.psi, g.povm, [0.0], return_info=True)
    assert 2 in info.zero_outcomes and not info.singular


def test_quasiclassical_ring_state():
    s = make_spin_system(4)
    for phi in ([0, 0], [0.3, -0.7], [1.2, 0.4]):
        assert quasiclassical_check(s.basis(0), phi) < 1e-12


def test_sld_reproduces_qfim():
    s = catalog.get("qc3d-n4")
    phi = np.array([0.1, 0.2, -0.3])
    L = sld(s.psi, phi)
    out = encode(s.system, s.psi, phi)
    sym = np.array([[np.vdot(out, (a @ b + b @ a) @ out).real / 2 for b in L] for a in L])
    assert np.allclose(sym, qfim(s.psi, phi), atol=1e-10)


def test_sld_povm_saturates_for_quasiclassical_state():
    psi = make_spin_system(4).basis(0)
    pv = sld_povm(psi, np.zeros(2))
    assert trace_inverse(fim(psi, pv, np.zeros(2))) == pytest.approx(trace_inverse(qfim(psi, np.zeros(2))), rel=1e-8)


def test_sld_povm_degenerate_input():
    with pytest.raises(DegenerateInputError):
        sld_povm(make_spin_system(2).basis(1), np.zeros(1))


def test_trace_inverse_singular():
    assert trace_inverse(np.diag([1.0, 0.0])) == np.inf
    assert trace_inverse(np.diag([2.0, 4.0])) == pytest.approx(0.75)


def test_povm_from_vectors_projective():
    p = Povm.from_vectors(np.eye(3))
    assert p.is_projective()
