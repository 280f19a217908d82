"""Asymptotic Bayesian cost, optimal single-shot estimators and its small-width expansion.

Quadrature route: tensor Gauss-Hermite nodes in the prior's principal axes.
Series route: exact Taylor coefficients of the outcome probabilities combined
with Gaussian moments. The two are independent and cross-check each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .info import P_FLOOR, Povm
from .spin import make_spin_system
from .taylor import ProbabilityTaylor, gaussian_moment, monomials


class GaussianPrior:
    """Normal prior centred at ``center`` with covariance ``cov``.

    Parameters
    ----------
    center : array_like, shape (d,)
    cov : array_like, shape (d, d)
        Symmetric positive definite.
    nodes_per_axis : int
        Gauss-Hermite order along each principal axis (>= 8).
    """

    def __init__(self, center, cov, nodes_per_axis: int = 24):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.cov = np.atleast_2d(np.asarray(cov, dtype=float))
        d = self.center.size
        if self.cov.shape != (d, d):
            raise ValueError(f"covariance shape {self.cov.shape} does not match d={d}")
        if not np.allclose(self.cov, self.cov.T, atol=1e-14 * max(1.0, np.abs(self.cov).max())):
            raise ValueError("covariance is not symmetric")
        try:
            np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance is not positive definite") from None
        if int(nodes_per_axis) < 8:
            raise ValueError("nodes_per_axis must be at least 8")
        self.nodes_per_axis = int(nodes_per_axis)
        self._nodes = None

    @classmethod
    def isotropic(cls, d: int, delta: float, center=None, nodes_per_axis: int = 24) -> "GaussianPrior":
        """Prior with covariance ``delta**2 * I``."""
        center = np.zeros(d) if center is None else center
        return cls(center, delta ** 2 * np.eye(d), nodes_per_axis)

    @property
    def d(self) -> int:
        return self.center.size

    @property
    def var(self) -> float:
        """Total prior variance, ``Tr cov``."""
        return float(np.trace(self.cov))

    def with_nodes(self, nodes_per_axis: int) -> "GaussianPrior":
        return GaussianPrior(self.center, self.cov, nodes_per_axis)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature points ``(n, d)`` and weights ``(n,)`` summing to one."""
        if self._nodes is None:
            self._nodes = _gh_nodes(self.center, self.cov, self.nodes_per_axis)
        return self._nodes

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "cov": self.cov.tolist(), "nodes_per_axis": self.nodes_per_axis}

    def __repr__(self):
        return f"GaussianPrior(center={self.center.tolist()}, cov={self.cov.tolist()})"


def _gh_nodes(center, cov, n):
    x, w = np.polynomial.hermite.hermgauss(n)
    z1, w1 = np.sqrt(2.0) * x, w / np.sqrt(np.pi)
    d = center.size
    grids = np.meshgrid(*([z1] * d), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=1)
    wg = np.meshgrid(*([w1] * d), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wg], axis=1), axis=1)
    lam, vec = np.linalg.eigh(cov)
    phis = center + (z * np.sqrt(lam)) @ vec.T
    keep = weights > 1e-300
    return phis[keep], weights[keep] / weights[keep].sum()


def node_unitaries(sys, phis: np.ndarray) -> np.ndarray:
    """Encoding unitaries at every quadrature node, shape ``(n, dim, dim)``."""
    gens = sys.generators(phis.shape[1])
    h = np.tensordot(phis, gens, axes=1)
    w, v = np.linalg.eigh(h)
    return np.einsum("nab,nb,ncb->nac", v, np.exp(-1j * w), v.conj())


class QuadratureCache:
    """Quadrature nodes of a prior together with the encoding unitaries at each node."""

    def __init__(self, sys, prior: GaussianPrior):
        self.sys = sys
        self.prior = prior
        self.phis, self.weights = prior.nodes()
        self.unitaries = node_unitaries(sys, self.phis)

    def states(self, psi) -> np.ndarray:
        """Encoded states at the nodes, ``(n, dim)``."""
        return self.unitaries @ np.asarray(psi, dtype=complex)

    def probs(self, psi, effects) -> np.ndarray:
        """``p(mu|phi_n)`` as an ``(L, n)`` array."""
        st = self.states(psi)
        p = np.einsum("na,lab,nb->ln", st.conj(), effects, st).real
        return np.clip(p, 0.0, None)


def _cache(psi, prior, cache):
    if cache is not None:
        return cache
    return QuadratureCache(make_spin_system(len(psi) - 1), prior)


def _effects(povm):
    return povm.effects if isinstance(povm, Povm) else np.asarray(povm, dtype=complex)


def rho_terms(psi, povm, prior: GaussianPrior, cache: QuadratureCache | None = None):
    """Marginals ``rho_mu`` and first moments ``vec rho_mu`` about the prior centre."""
    c = _cache(psi, prior, cache)
    p = c.probs(psi, _effects(povm))
    rho = p @ c.weights
    rvec = (p * c.weights) @ (c.phis - prior.center)
    return rho, rvec


def optimal_estimators(psi, povm, prior: GaussianPrior, cache: QuadratureCache | None = None) -> np.ndarray:
    """Posterior-mean estimator for each outcome, shape ``(L, d)``.

    Outcomes whose marginal probability is below ``1e-14`` map to the prior centre.
    """
    rho, rvec = rho_terms(psi, povm, prior, cache)
    est = np.tile(prior.center, (len(rho), 1))
    ok = rho >= P_FLOOR
    est[ok] += rvec[ok] / rho[ok, None]
    return est


def xi_cost(psi, povm, estimators, prior: GaussianPrior, cache: QuadratureCache | None = None) -> float:
    """Average single-shot posterior squared error for the given estimators."""
    c = _cache(psi, prior, cache)
    p = c.probs(psi, _effects(povm))
    est = np.asarray(estimators, dtype=float).reshape(p.shape[0], -1)
    sq = ((c.phis[None, :, :] - est[:, None, :]) ** 2).sum(axis=2)
    return float(np.sum(p * sq * c.weights))


def information_gain(psi, povm, prior: GaussianPrior, cache: QuadratureCache | None = None) -> float:
    """``sum_mu |vec rho_mu|^2 / rho_mu``: prior variance minus the optimal cost."""
    rho, rvec = rho_terms(psi, povm, prior, cache)
    ok = rho >= P_FLOOR
    return float(np.sum((rvec[ok] ** 2).sum(axis=1) / rho[ok]))


def xi_optimal(psi, povm, prior: GaussianPrior, cache: QuadratureCache | None = None) -> float:
    """Cost with the optimal estimators, ``var - sum |vec rho|^2 / rho``."""
    return prior.var - information_gain(psi, povm, prior, cache)


def effective_variance(xi: float, prior, gain: float | None = None) -> float:
    """Effective measurement variance ``D`` from ``1/xi = 1/D + 1/var``.

    Passing ``gain = var - xi`` directly avoids cancellation for narrow priors.
    Returns ``inf`` when the measurement carries no information.
    """
    var = prior.var if isinstance(prior, GaussianPrior) else float(prior)
    if gain is None:
        gain = var - xi
    if gain <= 0:
        return float("inf")
    return var * var / gain - var


# --- series route -----------------------------------------------------------


@lru_cache(maxsize=256)
def _moments(d: int, k: int, cov_key: tuple) -> tuple[np.ndarray, np.ndarray]:
    cov = np.array(cov_key).reshape(d, d)
    mon = monomials(d, k)
    scalar = np.array([gaussian_moment(a, cov) for a in mon])
    vector = np.zeros((len(mon), d))
    for r, a in enumerate(mon):
        for j in range(d):
            e = a.copy()
            e[j] += 1
            vector[r, j] = gaussian_moment(e, cov)
    return scalar, vector


def _series_divide(num, den, n_out, tol):
    """First ``n_out`` coefficients of ``num/den`` when ``den`` may start at a higher power."""
    lead = next((i for i, x in enumerate(den) if abs(x) > tol), None)
    if lead is None:
        return np.zeros(n_out), True
    q = np.zeros(n_out)
    ok = True
    for j in range(n_out):
        idx = j + lead
        acc = num[idx] if idx < len(num) else 0.0
        if idx >= len(num):
            ok = False
        for i in range(j):
            if lead + j - i < len(den):
                acc -= q[i] * den[lead + j - i]
        q[j] = acc / den[lead]
    return q, ok


@dataclass
class CostCoefficients:
    """Expansion ``xi = var - sum_l eps^(l+1) C_l`` for a prior covariance ``eps * shape``."""

    C1: float
    C2: float
    C3: float
    p2_max: float
    zero_outcomes: list = field(default_factory=list)
    exact: bool = True

    def as_tuple(self):
        return (self.C1, self.C2, self.C3)


def cost_coefficients(psi, povm, phi0, order: int = 3, cov_shape=None, weight=None) -> CostCoefficients:
    """Exact coefficients of the small-width expansion of the optimal cost.

    The prior covariance is ``eps * cov_shape`` (identity by default) and the
    squared error is measured with ``weight`` (identity by default); with the
    defaults ``eps = delta**2`` for an isotropic prior of width ``delta``.

    Parameters
    ----------
    psi : array_like
        Input state.
    povm : Povm or array_like
        Measurement.
    phi0 : array_like
        Expansion point.
    order : int
        Highest coefficient wanted (1, 2 or 3).

    Returns
    -------
    CostCoefficients
        ``C1``, ``C2``, ``C3`` plus the largest second-derivative probability
        term and the outcomes with vanishing probability at ``phi0``.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    psi = np.asarray(psi, dtype=complex)
    phi0 = np.atleast_1d(np.asarray(phi0, dtype=float))
    d = phi0.size
    cov = np.eye(d) if cov_shape is None else np.asarray(cov_shape, dtype=float)
    w = np.eye(d) if weight is None else np.asarray(weight, dtype=float)
    effects = _effects(povm)
    sys = make_spin_system(len(psi) - 1)
    tay = ProbabilityTaylor(sys, psi, effects, phi0, order=7)
    key = tuple(cov.ravel().tolist())
    L = effects.shape[0]
    # rho_mu = sum_j r[j] eps^j ; vec rho_mu = sum_j s[j] eps^j
    r = np.zeros((L, 4))
    s = np.zeros((L, 5, d))
    for k in range(8):
        scalar, vector = _moments(d, k, key)
        if k % 2 == 0:
            r[:, k // 2] = tay.coeffs[k] @ scalar
        else:
            s[:, (k + 1) // 2] = tay.coeffs[k] @ vector
    p2_max = float(np.max(np.abs(r[:, 1]))) if L else 0.0
    total = np.zeros(5)
    zeros = []
    exact = True
    for mu in range(L):
        num = np.array([sum(s[mu, i] @ w @ s[mu, j - i] for i in range(j + 1) if j - i < 5 and i < 5) for j in range(6)])
        den = r[mu]
        if den[0] < P_FLOOR:
            zeros.append(mu)
            den = den.copy()
            den[0] = 0.0
        q, ok = _series_divide(num, den, 5, tol=P_FLOOR)
        exact &= ok
        total += q
    return CostCoefficients(total[2], total[3], total[4], p2_max, zeros, exact)


def anisotropic_coefficients(psi, povm, fisher, phi0=None) -> CostCoefficients:
    """Expansion coefficients for a prior shaped by the Fisher matrix.

    The prior covariance is ``eps * (Tr F / d) F^-1`` (inverse Fisher matrix
    normalised to unit mean eigenvalue) and the coefficients are rescaled so
    that ``C1 = Tr F``, which makes them comparable with the isotropic case.
    """
    fisher = np.atleast_2d(np.asarray(fisher, dtype=float))
    d = fisher.shape[0]
    phi0 = np.zeros(d) if phi0 is None else phi0
    shape = np.trace(fisher) / d * np.linalg.inv(fisher)
    raw = cost_coefficients(psi, povm, phi0, cov_shape=shape)
    f = np.trace(fisher) / raw.C1
    return CostCoefficients(raw.C1 * f, raw.C2 * f, raw.C3 * f, raw.p2_max, raw.zero_outcomes, raw.exact)
