"""Block-coordinate descent of the single-shot Bayesian cost over state, measurement and estimators.

Every block subproblem is solved so that the cost cannot increase:

* estimators: posterior means (closed form);
* state: lowest eigenvector of the cost operator ``A`` (the cost is ``<psi|A|psi>``);
* measurement: the cost is linear in the effects, ``sum_mu Tr(M_mu B_mu)``. The
  general class uses a fixed-point iteration of the minimum-error discrimination
  type; the projective class runs Cayley-retraction descent on the basis unitary.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bayes import GaussianPrior, QuadratureCache, cost_coefficients, effective_variance
from .exceptions import DescentViolationError
from .info import P_FLOOR, Povm, fim
from .sensor import SensorSolution
from .spin import make_spin_system

log = logging.getLogger(__name__)

DESCENT_TOL = 1e-10


# --- cost pieces ------------------------------------------------------------


def _moment_ops(states, cache):
    """``S0 = sum w |psi><psi|``, ``S1_i = sum w phi_i |psi><psi|``, ``S2 = sum w |phi|^2 |psi><psi|``."""
    w = cache.weights
    dphi = cache.phis
    s0 = np.einsum("n,na,nb->ab", w, states, states.conj())
    s1 = np.einsum("n,ni,na,nb->iab", w, dphi, states, states.conj())
    s2 = np.einsum("n,na,nb->ab", w * (dphi ** 2).sum(axis=1), states, states.conj())
    return s0, s1, s2


def measurement_operators(psi, estimators, cache) -> np.ndarray:
    """``B_mu = sum_n w_n |phi_n - zeta_mu|^2 |psi_n><psi_n|`` for every outcome."""
    s0, s1, s2 = _moment_ops(cache.states(psi), cache)
    z = np.asarray(estimators, dtype=float)
    b = (z ** 2).sum(axis=1)[:, None, None] * s0[None] - 2 * np.tensordot(z, s1, axes=1) + s2[None]
    return (b + b.conj().transpose(0, 2, 1)) / 2


def state_operator(effects, estimators, cache) -> np.ndarray:
    """``A = sum_n w_n U_n^dag (sum_mu |phi_n - zeta_mu|^2 M_mu) U_n``."""
    z = np.asarray(estimators, dtype=float)
    zi = np.tensordot(z.T, effects, axes=1)  # (d, dim, dim)
    z2 = np.tensordot((z ** 2).sum(axis=1), effects, axes=1)
    phis = cache.phis
    dim = effects.shape[1]
    q = (phis ** 2).sum(axis=1)[:, None, None] * np.eye(dim)[None] - 2 * np.tensordot(phis, zi, axes=1) + z2[None]
    u = cache.unitaries
    a = np.einsum("n,nba,nbc,ncd->ad", cache.weights, u.conj(), q, u)
    return (a + a.conj().T) / 2


def posterior_estimators(psi, effects, cache) -> np.ndarray:
    """Posterior-mean estimators; outcomes of vanishing probability map to the prior centre."""
    st = cache.states(psi)
    p = np.clip(np.einsum("na,lab,nb->ln", st.conj(), effects, st).real, 0, None)
    rho = p @ cache.weights
    rvec = (p * cache.weights) @ cache.phis
    est = np.tile(cache.prior.center, (len(rho), 1))
    ok = rho >= P_FLOOR
    est[ok] = rvec[ok] / rho[ok, None]
    return est


def cost(psi, effects, estimators, cache) -> float:
    """Single-shot cost ``sum_mu Tr(M_mu B_mu)``."""
    b = measurement_operators(psi, estimators, cache)
    return float(np.einsum("lab,lba->", effects, b).real)


# --- block updates ----------------------------------------------------------


def _canonical_phase(v):
    k = int(np.argmax(np.abs(v) - 1e-12 * np.arange(v.size)))
    return v * np.exp(-1j * np.angle(v[k]))


def update_state(effects, estimators, cache, tol: float = 1e-12) -> np.ndarray:
    """Minimal eigenvector of the cost operator.

    Degenerate minima are resolved deterministically: the returned vector is the
    projection of the lowest-index basis vector with nonzero overlap onto the
    minimal eigenspace, phase-fixed so its largest amplitude is real positive.
    """
    effects = effects.effects if isinstance(effects, Povm) else np.asarray(effects, dtype=complex)
    a = state_operator(effects, estimators, cache)
    w, v = np.linalg.eigh(a)
    scale = max(1.0, abs(w).max())
    block = v[:, w < w[0] + tol * scale]
    proj = block @ block.conj().T
    for k in range(proj.shape[0]):
        col = proj[:, k]
        if np.linalg.norm(col) > 1e-6:
            vec = col / np.linalg.norm(col)
            break
    return _canonical_phase(vec)


def _inv_sqrt(g):
    w, v = np.linalg.eigh((g + g.conj().T) / 2)
    w = np.clip(w, 1e-300, None)
    return (v / np.sqrt(w)) @ v.conj().T


def normalize_effects(effects) -> np.ndarray:
    """Symmetric completeness restoration ``M -> G^-1/2 M G^-1/2`` with ``G = sum M``."""
    s = _inv_sqrt(effects.sum(axis=0))
    out = s[None] @ effects @ s[None]
    return (out + out.conj().transpose(0, 2, 1)) / 2


def update_povm(b, effects, max_iter: int = 400, tol: float = 1e-10):
    """Minimize ``sum_mu Tr(M_mu B_mu)`` over POVMs by a discrimination-type fixed point.

    With ``W_mu = c I - B_mu`` (positive semidefinite) the iteration
    ``M_mu <- L^-1 W_mu M_mu W_mu L^-1``, ``L = (sum_mu W_mu M_mu W_mu)^(1/2)``
    increases ``sum Tr(M W)``. The best iterate is returned, so the result never
    has a higher cost than the input.

    Returns
    -------
    (effects, value, converged)
    """
    dim = b.shape[1]
    c = np.linalg.eigvalsh(b).max() * (1 + 1e-9) + 1e-300
    wmat = c * np.eye(dim)[None] - b
    m = effects.copy()
    best = m
    best_val = float(np.einsum("lab,lba->", m, b).real)
    converged = False
    for _ in range(max_iter):
        t = wmat @ m @ wmat
        lam_inv = _inv_sqrt(t.sum(axis=0))
        m = lam_inv[None] @ t @ lam_inv[None]
        m = (m + m.conj().transpose(0, 2, 1)) / 2
        val = float(np.einsum("lab,lba->", m, b).real)
        gain = best_val - val
        if val < best_val:
            best, best_val = m, val
        if abs(gain) <= tol * max(abs(best_val), 1e-300):
            converged = True
            break
    return best, best_val, converged


def _cayley(u, x, tau):
    dim = u.shape[0]
    return np.linalg.solve(np.eye(dim) + tau / 2 * x, (np.eye(dim) - tau / 2 * x) @ u)


def update_projective(b, basis, max_iter: int = 200, tol: float = 1e-10):
    """Descent on the unitary whose columns define a rank-1 orthogonal measurement.

    The Riemannian gradient ``X = G U^dag - U G^dag`` (``G_mu = 2 B_mu u_mu``) is
    followed along the Cayley curve with Armijo backtracking.

    Returns
    -------
    (basis, value, converged)
    """

    def value(u):
        return float(np.einsum("al,lab,bl->", u.conj(), b, u).real)

    u = basis.copy()
    f = value(u)
    tau = 1.0
    for _ in range(max_iter):
        g = 2 * np.einsum("lab,bl->al", b, u)
        x = g @ u.conj().T - u @ g.conj().T
        gnorm = np.linalg.norm(x) ** 2 / 2
        if gnorm < 1e-30:
            return u, f, True
        tau = min(tau * 2, 1e3)
        while tau > 1e-14:
            cand = _cayley(u, x, tau)
            fc = value(cand)
            if fc <= f - 1e-4 * tau * gnorm:
                break
            tau /= 2
        else:
            return u, f, True
        step = f - fc
        u, f = cand, fc
        if step <= tol * max(abs(f), 1e-300):
            return u, f, True
    return u, f, False


def prune_effects(psi, effects, estimators, cache, weight_tol: float = 1e-8, prune_tol: float = 1e-12):
    """Drop effects with ``Tr(M) rho < weight_tol`` when renormalizing costs at most ``prune_tol``."""
    st = cache.states(psi)
    rho = np.einsum("na,lab,nb->ln", st.conj(), effects, st).real @ cache.weights
    weight = np.trace(effects, axis1=1, axis2=2).real * rho
    keep = weight >= weight_tol
    if keep.all() or keep.sum() < 2:
        return effects, estimators
    before = cost(psi, effects, estimators, cache)
    cand = normalize_effects(effects[keep])
    est = posterior_estimators(psi, cand, cache)
    after = cost(psi, cand, est, cache)
    if after <= before + prune_tol * max(before, 1e-300):
        return cand, est
    return effects, estimators


# --- driver -----------------------------------------------------------------


@dataclass
class AnnealSchedule:
    """Decreasing prior widths and sweep controls.

    ``inner_tol`` is relative to the prior variance at each width.
    """

    deltas: tuple = (2.0 ** -2, 2.0 ** -3, 2.0 ** -4, 2.0 ** -5)
    restarts: int = 4
    seed: int = 0
    inner_tol: float = 1e-15
    max_sweeps: int = 2000

    def __post_init__(self):
        self.deltas = tuple(float(x) for x in self.deltas)
        if not self.deltas or any(x <= 0 for x in self.deltas):
            raise ValueError("deltas must be positive")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ValueError("deltas must be strictly decreasing")
        if self.restarts < 1 or self.max_sweeps < 1:
            raise ValueError("restarts and max_sweeps must be >= 1")


@dataclass
class CostReport:
    """Cost summary of a sensor under one prior."""

    delta: float
    xi: float
    prior_var: float
    effective_variance: float
    sweeps: int = 0
    converged: bool = True

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class AnnealTrace:
    """One record per (restart, width) with the effective variance reached."""

    records: list = field(default_factory=list)
    # (delta, SensorSolution) of the winning restart after each width
    stages: list = field(default_factory=list)

    def add(self, **rec):
        self.records.append(rec)

    def for_restart(self, r):
        return [x for x in self.records if x["restart"] == r]


def _prior(d, delta, phi0, cov_shape, nodes):
    shape = np.eye(d) if cov_shape is None else np.asarray(cov_shape, dtype=float)
    return GaussianPrior(phi0, delta ** 2 * shape, nodes)


def _random_start(rng, dim, n_eff, projective):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    if projective:
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        q, r = np.linalg.qr(z)
        return psi, q * (np.diag(r) / np.abs(np.diag(r)))
    x = rng.normal(size=(n_eff, dim, dim)) + 1j * rng.normal(size=(n_eff, dim, dim))
    return psi, normalize_effects(x @ x.conj().transpose(0, 2, 1))


def _effects_from_basis(u):
    return np.einsum("al,bl->lab", u, u.conj())


def _check_descent(new, old, what):
    if new > old + DESCENT_TOL * max(1.0, abs(old)):
        raise DescentViolationError(f"{what} update increased the cost from {old!r} to {new!r}")


def run_width(psi, meas, cache, projective, inner_tol, max_sweeps, history=None, fix_state=False):
    """Sweep estimators, measurement and state at one prior width until the cost stagnates.

    ``meas`` is an effect array, or a basis unitary for the projective class.
    Returns ``(psi, meas, estimators, xi, sweeps, converged)``.
    """
    effects = _effects_from_basis(meas) if projective else meas
    est = posterior_estimators(psi, effects, cache)
    xi = cost(psi, effects, est, cache)
    tol = inner_tol * cache.prior.var
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        start = xi
        est = posterior_estimators(psi, effects, cache)
        x1 = cost(psi, effects, est, cache)
        _check_descent(x1, xi, "estimator")
        b = measurement_operators(psi, est, cache)
        if projective:
            meas, x2, _ = update_projective(b, meas)
            effects = _effects_from_basis(meas)
        else:
            effects, x2, _ = update_povm(b, effects)
        _check_descent(x2, x1, "measurement")
        if fix_state:
            cand, x3 = psi, x2
        else:
            cand = update_state(effects, est, cache)
            x3 = cost(cand, effects, est, cache)
        if x3 <= x2:
            psi = cand
        else:
            x3 = x2
        xi = x3
        if history is not None:
            history.append(xi)
        if abs(start - xi) < tol:
            converged = True
            break
    if not projective:
        meas = effects
    est = posterior_estimators(psi, effects, cache)
    xi = cost(psi, effects, est, cache)
    return psi, meas, est, xi, sweeps, converged


def _clip_effects(effects, tol=1e-8):
    w, v = np.linalg.eigh(effects)
    clip = float(np.max(np.clip(-w, 0, None)))
    if clip > tol:
        log.warning("PSD clipping magnitude %.3g exceeds %.1g", clip, tol)
    w = np.clip(w, 0, None)
    return normalize_effects(np.einsum("lab,lb,lcb->lac", v, w, v.conj())), clip


def optimize(N: int, d: int, phi0=None, kind: str = "povm", schedule: AnnealSchedule | None = None,
             n_effects: int | None = None, cov_shape=None, nodes_per_axis: int | None = None,
             init: SensorSolution | None = None, fixed_state=None):
    """Anneal the single-shot cost over decreasing prior widths with random restarts.

    Parameters
    ----------
    N : int
        Number of spin-1/2 particles (symmetric subspace of dimension N+1).
    d : int
        Number of phases.
    phi0 : array_like, optional
        Prior centre; zero by default.
    kind : {"povm", "projective"}
    schedule : AnnealSchedule
    n_effects : int, optional
        Initial POVM size; ``2 (N+1)`` for ``d <= 2`` and ``(N+1)**2`` for ``d = 3``.
    cov_shape : array_like, optional
        Prior covariance at width ``delta`` is ``delta**2 * cov_shape``.
    init : SensorSolution, optional
        Warm start used for restart 0.
    fixed_state : array_like, optional
        Hold the input state fixed and optimize measurement and estimators only.

    Returns
    -------
    (SensorSolution, AnnealTrace)
        Best restart by final effective variance, plus the per-width trace of all restarts.
    """
    if kind not in ("povm", "projective"):
        raise ValueError("kind must be 'povm' or 'projective'")
    if d not in (1, 2, 3) or N < 1:
        raise ValueError("need d in {1,2,3} and N >= 1")
    schedule = schedule or AnnealSchedule()
    phi0 = np.zeros(d) if phi0 is None else np.atleast_1d(np.asarray(phi0, dtype=float))
    sys = make_spin_system(N)
    dim = sys.dim
    projective = kind == "projective"
    if n_effects is None:
        n_effects = 2 * dim if d <= 2 else dim * dim
    if nodes_per_axis is None:
        nodes_per_axis = {1: 48, 2: 24, 3: 14}[d]
    caches = [QuadratureCache(sys, _prior(d, dl, phi0, cov_shape, nodes_per_axis)) for dl in schedule.deltas]
    trace = AnnealTrace()
    best = None
    for r in range(schedule.restarts):
        rng = np.random.default_rng([schedule.seed, r])
        psi, meas = _random_start(rng, dim, n_effects, projective)
        snaps = []
        if fixed_state is not None:
            psi = np.asarray(fixed_state, dtype=complex)
        if r == 0 and init is not None:
            psi = init.psi.copy()
            if projective:
                meas = _basis_from_effects(init.effects)
            else:
                meas = init.effects.copy()
        for dl, cache in zip(schedule.deltas, caches):
            psi, meas, est, xi, sweeps, conv = run_width(psi, meas, cache, projective, schedule.inner_tol, schedule.max_sweeps,
                                                               fix_state=fixed_state is not None)
            if not projective:
                meas, est = prune_effects(psi, meas, est, cache)
                xi = cost(psi, meas, est, cache)
            dm = effective_variance(xi, cache.prior)
            trace.add(restart=r, delta=dl, xi=xi, effective_variance=dm, sweeps=sweeps, converged=conv,
                      n_effects=int(dim if projective else len(meas)))
            log.info("restart %d delta %.4g: D=%.6g sweeps=%d", r, dl, dm, sweeps)
            snaps.append((psi.copy(), meas.copy()))
        if best is None or dm < best[0]:
            best = (dm, psi, meas, est, xi, sweeps, conv, r, snaps)
    dm, psi, meas, est, xi, sweeps, conv, r, snaps = best
    for dl, (p_s, m_s) in zip(schedule.deltas, snaps):
        eff = _effects_from_basis(m_s) if projective else _clip_effects(m_s)[0]
        trace.stages.append((dl, SensorSolution(p_s / np.linalg.norm(p_s), Povm(eff), d, kind=kind,
                                                provenance="optimized", name=f"compass-d{d}-n{N}-stage",
                                                phi0=phi0, metadata={"frozen_delta": dl})))
    cache = caches[-1]
    if projective:
        effects = _effects_from_basis(meas)
        clip = 0.0
    else:
        effects, clip = _clip_effects(meas)
    est = posterior_estimators(psi, effects, cache)
    xi = cost(psi, effects, est, cache)
    report = CostReport(schedule.deltas[-1], xi, cache.prior.var, effective_variance(xi, cache.prior), sweeps, conv)
    sol = SensorSolution(psi / np.linalg.norm(psi), Povm(effects), d, estimators=est, kind=kind,
                         provenance="optimized", name=f"compass-d{d}-n{N}", phi0=phi0, prior=cache.prior,
                         cost_report=report,
                         metadata={"seed": schedule.seed, "restart": r, "psd_clip": clip,
                                   "deltas": list(schedule.deltas)})
    return sol, trace


def _basis_from_effects(effects):
    """Unitary whose columns are the leading eigenvectors of rank-1 projective effects."""
    cols = []
    for e in effects:
        w, v = np.linalg.eigh(e)
        cols.append(v[:, -1])
    u, _, vh = np.linalg.svd(np.array(cols).T)
    return u @ vh


def evaluate(solution: SensorSolution, delta: float, nodes_per_axis: int = 24, cov_shape=None) -> CostReport:
    """Cost of a sensor with its posterior-mean estimators under an isotropic (or shaped) prior."""
    cache = QuadratureCache(solution.system, _prior(solution.d, delta, solution.phi0, cov_shape, nodes_per_axis))
    est = posterior_estimators(solution.psi, solution.effects, cache)
    xi = cost(solution.psi, solution.effects, est, cache)
    return CostReport(delta, xi, cache.prior.var, effective_variance(xi, cache.prior))


class CompassOptimizer(BaseEstimator):
    """Scikit-learn style wrapper around :func:`optimize`.

    ``fit`` takes no data (the problem is fully specified by the parameters);
    ``predict`` maps outcome indices to estimators and ``transform`` maps phase
    points to outcome probabilities of the fitted sensor.
    """

    def __init__(self, N=4, d=2, kind="povm", deltas=(0.25, 0.125, 0.0625, 0.03125), restarts=4,
                 seed=0, inner_tol=1e-15, max_sweeps=2000, phi0=None, nodes_per_axis=None):
        self.N = N
        self.d = d
        self.kind = kind
        self.deltas = deltas
        self.restarts = restarts
        self.seed = seed
        self.inner_tol = inner_tol
        self.max_sweeps = max_sweeps
        self.phi0 = phi0
        self.nodes_per_axis = nodes_per_axis

    def fit(self, X=None, y=None):
        sched = AnnealSchedule(self.deltas, self.restarts, self.seed, self.inner_tol, self.max_sweeps)
        self.solution_, self.trace_ = optimize(self.N, self.d, self.phi0, self.kind, sched,
                                               nodes_per_axis=self.nodes_per_axis)
        self.fisher_ = fim(self.solution_.psi, self.solution_.povm, self.solution_.phi0)
        return self

    def _check(self):
        check_is_fitted(self, "solution_")

    def transform(self, X):
        """Outcome probabilities ``(n_points, L)`` at phase points ``X``."""
        from .info import cond_probs

        self._check()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([cond_probs(self.solution_.psi, self.solution_.povm, x) for x in X])

    def predict(self, outcomes):
        """Single-shot estimate for each outcome index."""
        self._check()
        return self.solution_.estimators[np.asarray(outcomes, dtype=int)]

    def score(self, X=None, y=None):
        """Negative effective variance at the final width (higher is better)."""
        self._check()
        return -self.solution_.cost_report.effective_variance

    def cost_coefficients(self):
        self._check()
        s = self.solution_
        return cost_coefficients(s.psi, s.povm, s.phi0)
