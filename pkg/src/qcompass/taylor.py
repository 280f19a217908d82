"""Exact multivariate Taylor expansion of outcome probabilities.

Directional Taylor coefficients of ``exp(X + tE)`` are read off the first
block row of the exponential of a block-bidiagonal matrix with ``X`` on the
diagonal and ``E`` on the superdiagonal. Evaluating along enough directions
and solving for the coefficients of each homogeneous degree recovers every
mixed partial derivative without finite differences.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement
from math import factorial

import numpy as np
from scipy.linalg import expm

from .spin import SpinSystem


def unitary_series(sys: SpinSystem, phi0, direction, order: int) -> np.ndarray:
    """Coefficients ``C_k`` with ``exp(-i (phi0 + t v).J) = sum_k t^k C_k``.

    Returns an array of shape ``(order + 1, dim, dim)``.
    """
    phi0 = np.atleast_1d(np.asarray(phi0, dtype=float))
    v = np.atleast_1d(np.asarray(direction, dtype=float))
    gens = sys.generators(phi0.size)
    x = -1j * np.tensordot(phi0, gens, axes=1)
    e = -1j * np.tensordot(v, gens, axes=1)
    n, dim = order + 1, sys.dim
    big = np.zeros((n * dim, n * dim), dtype=complex)
    for k in range(n):
        big[k * dim:(k + 1) * dim, k * dim:(k + 1) * dim] = x
        if k + 1 < n:
            big[k * dim:(k + 1) * dim, (k + 1) * dim:(k + 2) * dim] = e
    top = expm(big)[:dim]
    return top.reshape(dim, n, dim).transpose(1, 0, 2)


def probability_series(sys, psi, effects, phi0, direction, order: int) -> np.ndarray:
    """Directional Taylor coefficients of ``p(mu | phi0 + t v)``; shape ``(order+1, L)``."""
    c = unitary_series(sys, phi0, direction, order)
    amps = c @ np.asarray(psi, dtype=complex)  # (order+1, dim)
    # p_k = sum_{i+j=k} <psi_i| M |psi_j>
    mv = np.einsum("lab,kb->lka", effects, amps)  # (L, order+1, dim)
    out = np.zeros((order + 1, effects.shape[0]))
    for k in range(order + 1):
        acc = 0.0
        for i in range(k + 1):
            acc = acc + np.einsum("a,la->l", amps[i].conj(), mv[:, k - i])
        out[k] = acc.real
    return out


@lru_cache(maxsize=None)
def monomials(d: int, degree: int) -> np.ndarray:
    """Exponent vectors of all degree-``degree`` monomials in ``d`` variables."""
    rows = []
    for combo in combinations_with_replacement(range(d), degree):
        e = np.zeros(d, dtype=int)
        for c in combo:
            e[c] += 1
        rows.append(e)
    return np.array(rows, dtype=int).reshape(-1, d)


@lru_cache(maxsize=None)
def _fit_directions(d: int, count: int) -> np.ndarray:
    rng = np.random.default_rng(12345 + d)
    v = rng.normal(size=(count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class ProbabilityTaylor:
    """Taylor coefficients ``a[mu, alpha] = d^alpha p(mu|phi0) / alpha!`` up to ``order``.

    ``coeffs[k]`` has shape ``(L, n_monomials(k))`` and matches
    ``monomials(d, k)`` row by row.
    """

    def __init__(self, sys, psi, effects, phi0, order: int = 5):
        phi0 = np.atleast_1d(np.asarray(phi0, dtype=float))
        self.d = d = phi0.size
        self.order = order
        effects = np.asarray(effects, dtype=complex)
        if d == 1:
            ser = probability_series(sys, psi, effects, phi0, [1.0], order)
            self.coeffs = [ser[k][:, None] for k in range(order + 1)]
            return
        n_dirs = 2 * monomials(d, order).shape[0] + 4
        dirs = _fit_directions(d, n_dirs)
        series = np.stack([probability_series(sys, psi, effects, phi0, v, order) for v in dirs])
        self.coeffs = []
        for k in range(order + 1):
            mon = monomials(d, k)
            design = np.prod(dirs[:, None, :] ** mon[None, :, :], axis=2)
            sol, *_ = np.linalg.lstsq(design, series[:, k, :], rcond=None)
            self.coeffs.append(sol.T)

    @property
    def p0(self) -> np.ndarray:
        return self.coeffs[0][:, 0]

    def gradient(self) -> np.ndarray:
        """``(L, d)`` gradient of each outcome probability."""
        mon = monomials(self.d, 1)
        idx = np.argmax(mon, axis=1)
        g = np.zeros((self.coeffs[1].shape[0], self.d))
        g[:, idx] = self.coeffs[1]
        return g

    def derivative(self, alpha) -> np.ndarray:
        """Mixed partial ``d^alpha p`` for every outcome."""
        alpha = np.asarray(alpha, dtype=int)
        k = int(alpha.sum())
        mon = monomials(self.d, k)
        row = np.nonzero(np.all(mon == alpha, axis=1))[0][0]
        fact = float(np.prod([factorial(int(a)) for a in alpha]))
        return self.coeffs[k][:, row] * fact


def gaussian_moment(exponents, cov: np.ndarray) -> float:
    """``E[x^alpha]`` for a centred Gaussian with covariance ``cov`` (Isserlis)."""
    idx = [i for i, e in enumerate(exponents) for _ in range(int(e))]
    if len(idx) % 2:
        return 0.0
    return _pairings(tuple(idx), cov)


def _pairings(idx: tuple, cov: np.ndarray) -> float:
    if not idx:
        return 1.0
    first, rest = idx[0], idx[1:]
    total = 0.0
    for j in range(len(rest)):
        c = cov[first, rest[j]]
        if c != 0.0:
            total += c * _pairings(rest[:j] + rest[j + 1:], cov)
    return total
