import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qcompass import catalog
from qcompass.bayes import GaussianPrior, QuadratureCache, xi_optimal
from qcompass.exceptions import DescentViolationError
from qcompass.info import fim
from qcompass.optimize import (AnnealSchedule, CompassOptimizer, _check_descent, cost, evaluate,
                               measurement_operators, normalize_effects, optimize, posterior_estimators,
                               run_width, update_povm, update_state)
from qcompass.spin import make_spin_system


@pytest.fixture(scope="module")
def setup2d():
    sys = make_spin_system(2)
    cache = QuadratureCache(sys, GaussianPrior.isotropic(2, 0.25, nodes_per_axis=12))
    rng = np.random.default_rng(5)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi /= np.linalg.norm(psi)
    x = rng.normal(size=(6, 3, 3)) + 1j * rng.normal(size=(6, 3, 3))
    return cache, psi, normalize_effects(x @ x.conj().transpose(0, 2, 1))


def test_normalize_effects_complete(setup2d):
    _, _, eff = setup2d
    assert np.allclose(eff.sum(axis=0), np.eye(3), atol=1e-12)
    assert np.linalg.eigvalsh(eff).min() > -1e-12


def test_blocks_do_not_increase_cost(setup2d):
    cache, psi, eff = setup2d
    est = posterior_estimators(psi, eff, cache)
    x0 = cost(psi, eff, est, cache)
    b = measurement_operators(psi, est, cache)
    eff2, x1, _ = update_povm(b, eff)
    assert x1 <= x0 + 1e-14
    assert x1 == pytest.approx(cost(psi, eff2, est, cache), rel=1e-10)
    psi2 = update_state(eff2, est, cache)
    assert cost(psi2, eff2, est, cache) <= x1 + 1e-14


def test_posterior_estimators_match_bayes(setup2d):
    cache, psi, eff = setup2d
    est = posterior_estimators(psi, eff, cache)
    assert cost(psi, eff, est, cache) == pytest.approx(xi_optimal(psi, eff, cache.prior, cache), rel=1e-10)


def test_run_width_monotone_history(setup2d):
    cache, psi, eff = setup2d
    hist = []
    run_width(psi, eff, cache, False, 1e-12, 50, history=hist)
    assert all(b <= a + 1e-13 for a, b in zip(hist, hist[1:]))


def test_descent_guard():
    with pytest.raises(DescentViolationError):
        _check_descent(1.0, 0.5, "state")
    _check_descent(0.5, 0.5 - 1e-12, "state")


def test_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(deltas=(0.1, 0.2))
    with pytest.raises(ValueError):
        AnnealSchedule(restarts=0)


def test_one_phase_projective_reaches_heisenberg():
    sched = AnnealSchedule(deltas=(0.25, 0.125), restarts=2, seed=1, max_sweeps=300)
    sol, trace = optimize(2, 1, kind="projective", schedule=sched)
    assert fim(sol.psi, sol.povm, [0.0])[0, 0] == pytest.approx(4.0, rel=1e-3)
    assert len(trace.records) == 4 and len(trace.stages) == 2


def test_optimize_deterministic():
    sched = AnnealSchedule(deltas=(0.25,), restarts=1, seed=3, max_sweeps=40)
    a, _ = optimize(2, 2, schedule=sched, nodes_per_axis=10)
    b, _ = optimize(2, 2, schedule=sched, nodes_per_axis=10)
    assert np.array_equal(a.psi, b.psi) and np.array_equal(a.effects, b.effects)


def test_estimator_api():
    est = CompassOptimizer(N=2, d=2, deltas=(0.25, 0.125), restarts=1, max_sweeps=100, nodes_per_axis=10)
    with pytest.raises(NotFittedError):
        est.predict([0])
    c = clone(est)
    assert c.get_params()["N"] == 2
    est.fit()
    probs = est.transform([[0.0, 0.0], [0.1, 0.2]])
    assert probs.shape[0] == 2 and np.allclose(probs.sum(axis=1), 1)
    assert est.predict([0, 1]).shape == (2, 2)
    assert est.score() < 0
    assert est.cost_coefficients().C1 == pytest.approx(np.trace(est.fisher_), rel=1e-8)


def test_evaluate_catalog_sensor():
    s = catalog.get("qc2d-n4")
    rep = evaluate(s, 2.0 ** -5)
    assert rep.effective_variance == pytest.approx(4 / 24, rel=5e-3)


def test_bad_arguments():
    with pytest.raises(ValueError):
        optimize(2, 4)
    with pytest.raises(ValueError):
        optimize(2, 2, kind="sdp")
