"""Majorana constellations and Husimi Q maps of symmetric spin states.

A spin-J state maps to the polynomial ``G(z) = sum_m sqrt(C(2J, J+m)) psi_m z^(J+m)``;
its 2J roots, sent to the sphere by ``z = -tan(theta/2) exp(i phi)``, are the
constellation. A coherent state along ``n`` has all 2J points at ``n`` and the
Husimi function vanishes at the antipode of every point. Missing top powers
count as roots at infinity (south pole).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np


def _binom_sqrt(two_j: int) -> np.ndarray:
    # descending-m order: index 0 is m = J, i.e. power 2J
    return np.sqrt([comb(two_j, k) for k in range(two_j, -1, -1)])


@dataclass
class Constellation:
    points: np.ndarray  # (2J, 3) unit vectors
    roots: np.ndarray  # finite polynomial roots
    infinity_count: int

    @property
    def angles(self) -> np.ndarray:
        """``(theta, phi)`` for every point."""
        p = self.points
        return np.stack([np.arccos(np.clip(p[:, 2], -1, 1)), np.arctan2(p[:, 1], p[:, 0])], axis=1)


def _to_sphere(z: np.ndarray) -> np.ndarray:
    theta = 2 * np.arctan(np.abs(z))
    ph = np.angle(-z)
    return np.stack([np.sin(theta) * np.cos(ph), np.sin(theta) * np.sin(ph), np.cos(theta)], axis=1)


def constellation(psi, zero_tol: float = 1e-12) -> Constellation:
    """Majorana points of a symmetric state (descending-m amplitudes).

    Roots come from the companion-matrix eigenvalues of ``G``; leading
    coefficients below ``zero_tol`` (relative) reduce the degree and each
    missing degree places one point at the south pole.
    """
    psi = np.asarray(psi, dtype=complex)
    scale = np.abs(psi).max()
    if psi.size < 2 or scale == 0:
        raise ValueError("constellation needs a nonzero state of spin J >= 1/2")
    two_j = psi.size - 1
    coef = _binom_sqrt(two_j) * psi
    lead = 0
    while abs(coef[lead]) <= zero_tol * scale:
        lead += 1
    roots = np.roots(coef[lead:]) if lead < two_j else np.zeros(0, dtype=complex)
    pts = _to_sphere(roots) if roots.size else np.zeros((0, 3))
    south = np.tile([0.0, 0.0, -1.0], (lead, 1))
    return Constellation(np.vstack([pts, south]), roots, lead)


def state_from_constellation(c: Constellation) -> np.ndarray:
    """Normalized state whose polynomial has the given roots (inverse of :func:`constellation`)."""
    poly = np.poly(c.roots) if c.roots.size else np.array([1.0 + 0j])
    two_j = c.roots.size + c.infinity_count
    coef = np.concatenate([np.zeros(c.infinity_count, dtype=complex), poly])
    psi = coef / _binom_sqrt(two_j)
    return psi / np.linalg.norm(psi)


def point_match_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance after optimally pairing two equal-size point sets."""
    from scipy.optimize import linear_sum_assignment

    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


def coherent_state(two_j: int, theta: float, phi: float) -> np.ndarray:
    """Spin coherent state pointing along ``(theta, phi)``; ``theta = 0`` is ``|J, J>``."""
    k = np.arange(two_j, -1, -1)  # J + m
    return _binom_sqrt(two_j) * np.cos(theta / 2) ** k * np.sin(theta / 2) ** (two_j - k) * np.exp(-1j * (k - two_j / 2) * phi)


def husimi_grid(psi, n_theta: int = 64, n_phi: int = 128):
    """Husimi ``Q(theta, phi) = |<theta, phi|psi>|^2`` on a regular grid.

    Returns ``(theta, phi, Q)`` with ``Q`` of shape ``(n_theta, n_phi)``; the
    theta grid includes both poles.
    """
    if n_theta < 8 or n_phi < 8:
        raise ValueError("resolution must be at least 8 x 8")
    psi = np.asarray(psi, dtype=complex)
    two_j = psi.size - 1
    th = np.linspace(0, np.pi, n_theta)
    ph = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    return th, ph, husimi(psi, th[:, None], ph[None, :])


def husimi(psi, theta, phi) -> np.ndarray:
    """Husimi function at arbitrary (broadcastable) angles."""
    psi = np.asarray(psi, dtype=complex)
    two_j = psi.size - 1
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    k = np.arange(two_j, -1, -1).reshape((-1,) + (1,) * theta.ndim)
    amp = (_binom_sqrt(two_j).reshape(k.shape) * np.cos(theta / 2) ** k * np.sin(theta / 2) ** (two_j - k)
           * np.exp(1j * (k - two_j / 2) * phi) * psi.reshape(k.shape)).sum(axis=0)
    return np.abs(amp) ** 2
