"""Bhattacharyya bounds of order kappa for one-phase sensors.

The single-shot generating function ``chi_1(h, k) = sum_mu p(mu|phi+h) p(mu|phi+k) / p(mu|phi)``
is expanded in a truncated bivariate series; for K independent shots
``chi_K = chi_1^K``. Mixed derivatives of ``chi_K`` at the origin form the
Bhattacharyya matrix ``I``, and the bound is ``(I^-1)_11``.
"""
from __future__ import annotations

from math import factorial

import numpy as np

from .info import P_FLOOR
from .taylor import ProbabilityTaylor


def _taylor_1d(psi, povm, phi0, order):
    effects = povm.effects if hasattr(povm, "effects") else np.asarray(povm, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    from .spin import make_spin_system

    tay = ProbabilityTaylor(make_spin_system(len(psi) - 1), psi, effects, np.atleast_1d(phi0), order=order)
    return np.stack([c[:, 0] for c in tay.coeffs], axis=1)  # (L, order+1): p^(k)/k!


def chi_series(psi, povm, phi0, kappa: int) -> np.ndarray:
    """``c[i, j] = d^i_h d^j_k chi_1`` at the origin, ``0 <= i, j <= kappa``.

    Outcomes whose probability vanishes identically near ``phi0`` are dropped.
    A zero-probability outcome with nonvanishing derivatives contributes only
    through the Fisher-information limit ``2 p''`` to ``c[1, 1]``.
    """
    if np.atleast_1d(phi0).size != 1:
        raise ValueError("Bhattacharyya bounds are implemented for one phase")
    a = _taylor_1d(psi, povm, phi0, 2 * kappa)
    fact = np.array([factorial(k) for k in range(kappa + 1)], dtype=float)
    c = np.zeros((kappa + 1, kappa + 1))
    for row in a:
        p0 = row[0]
        if p0 >= P_FLOOR:
            der = row[: kappa + 1] * fact
            c += np.outer(der, der) / p0
        elif np.abs(row).max() > 1e-12 and kappa >= 1:
            c[1, 1] += 2 * (2 * row[2])
    return c


def _mul(a, b):
    n = a.shape[0]
    out = np.zeros_like(a)
    for i in range(n):
        for j in range(n):
            out[i:, j:] += a[i, j] * b[: n - i, : n - j]
    return out


def chi_power(c, K: int) -> np.ndarray:
    """Derivative array of ``chi_1^K`` truncated at degree ``kappa`` in each variable."""
    n = c.shape[0]
    fact = np.array([factorial(k) for k in range(n)], dtype=float)
    t = c / np.outer(fact, fact)
    out = np.zeros_like(t)
    out[0, 0] = 1.0
    base = t
    k = int(K)
    while k:
        if k & 1:
            out = _mul(out, base)
        base = _mul(base, base)
        k >>= 1
    return out * np.outer(fact, fact)


def bhattacharyya_matrix(c, K: int) -> np.ndarray:
    return chi_power(c, K)[1:, 1:]


def bhb(psi, povm, phi0, K: int, kappa: int) -> float:
    """Order-``kappa`` Bhattacharyya bound on the variance after ``K`` shots.

    ``kappa = 1`` gives ``1/(K F)``. A singular Bhattacharyya matrix returns ``inf``.
    """
    if kappa not in (1, 2, 3):
        raise ValueError("kappa must be 1, 2 or 3")
    if K < 1:
        raise ValueError("K must be >= 1")
    return bhb_from_chi(chi_series(psi, povm, phi0, kappa), K)


def bhb_from_chi(c, K: int) -> float:
    m = bhattacharyya_matrix(c, K)
    ev = np.linalg.eigvalsh((m + m.T) / 2)
    if ev.min() <= 1e-12 * max(abs(ev).max(), 1e-300):
        return float("inf")
    return float(np.linalg.inv(m)[0, 0])


def bhb_sweep(psi, povm, phi0, kappa: int, k_max: int) -> np.ndarray:
    """``K * bound`` for ``K = 1..k_max``."""
    c = chi_series(psi, povm, phi0, kappa)
    return np.array([K * bhb_from_chi(c, K) for K in range(1, k_max + 1)])
