"""Collective spin-J operators, SU(2) phase encoding and exact derivative states.

All vectors and matrices use the ``|J, m>`` basis ordered by *descending* m,
i.e. index 0 is ``|J, J>`` and index ``2J`` is ``|J, -J>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_AXES = {"x": 0, "y": 1, "z": 2}


def sinc(x):
    """Unnormalized sinc, ``sin(x)/x`` with ``sinc(0) = 1``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """Operator triple of a spin-J representation.

    Attributes
    ----------
    J : float
        Total spin, ``N/2``.
    dim : int
        Hilbert-space dimension ``2J + 1``.
    jx, jy, jz : ndarray
        Hermitian ``dim x dim`` collective spin operators.
    """

    J: float
    dim: int
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @property
    def N(self) -> int:
        return int(round(2 * self.J))

    @property
    def m(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order (descending)."""
        return self.J - np.arange(self.dim)

    @property
    def operators(self) -> np.ndarray:
        """All three generators stacked as ``(3, dim, dim)``."""
        return np.stack([self.jx, self.jy, self.jz])

    def generators(self, d: int) -> np.ndarray:
        """Generators encoding a ``d``-component phase vector.

        ``d=1`` uses ``Jz``; ``d=2`` uses ``(Jx, Jy)``; ``d=3`` all three.
        """
        return self.operators[list(generator_axes(d))]

    def basis(self, m: float) -> np.ndarray:
        """Unit vector ``|J, m>``."""
        idx = int(round(self.J - m))
        if not 0 <= idx < self.dim or abs(self.J - m - idx) > 1e-9:
            raise ValueError(f"m={m} is not a valid projection for J={self.J}")
        v = np.zeros(self.dim, dtype=complex)
        v[idx] = 1.0
        return v


def generator_axes(d: int) -> tuple[int, ...]:
    """Indices into ``(x, y, z)`` of the generators used for ``d`` phases."""
    if d == 1:
        return (2,)
    if d == 2:
        return (0, 1)
    if d == 3:
        return (0, 1, 2)
    raise ValueError(f"phase dimension must be 1, 2 or 3, got {d}")


@lru_cache(maxsize=64)
def make_spin_system(N: int) -> SpinSystem:
    """Build the spin ``J = N/2`` representation for ``N`` spin-1/2 particles."""
    if int(N) != N or N < 1:
        raise ValueError(f"atom count must be a positive integer, got {N}")
    N = int(N)
    J = N / 2
    dim = N + 1
    m = J - np.arange(dim)
    # <m+1|J+|m> sits on the superdiagonal for descending ordering
    jp = np.diag(np.sqrt(J * (J + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    jz = np.diag(m).astype(complex)
    for a in (jx, jy, jz):
        a.flags.writeable = False
    return SpinSystem(J=J, dim=dim, jx=jx, jy=jy, jz=jz)


def _check_phase(sys: SpinSystem, phi) -> np.ndarray:
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if phi.ndim != 1 or phi.size not in (1, 2, 3):
        raise ValueError(f"phase vector must have 1, 2 or 3 components, got shape {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("phase vector has non-finite entries")
    return phi


def hermitian_expm(h: np.ndarray, scale: complex = -1j) -> np.ndarray:
    """``exp(scale * h)`` for Hermitian ``h`` via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(scale * w)) @ v.conj().T


def unitary(sys: SpinSystem, phi) -> np.ndarray:
    """Encoding unitary ``exp(-i phi . J)``."""
    phi = _check_phase(sys, phi)
    h = np.tensordot(phi, sys.generators(phi.size), axes=1)
    return hermitian_expm(h)


def encode(sys: SpinSystem, psi: np.ndarray, phi) -> np.ndarray:
    """Apply the phase-encoding unitary to ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (sys.dim,):
        raise ValueError(f"state has shape {psi.shape}, expected ({sys.dim},)")
    return unitary(sys, phi) @ psi


def a_operators(sys: SpinSystem, phi) -> np.ndarray:
    """Operators ``A_i = int_0^1 e^{i a phi.J} J_i e^{-i a phi.J} da``.

    Returns an array ``(d, dim, dim)`` holding ``A_i`` for the encoded axes.
    """
    phi = _check_phase(sys, phi)
    d = phi.size
    axes = generator_axes(d)
    if d == 1:
        return sys.jz[None].copy()
    vec = np.zeros(3)
    vec[list(axes)] = phi
    norm = np.linalg.norm(vec)
    n = vec / norm if norm > 0 else np.zeros(3)
    s = float(sinc(norm))
    # (|phi|/2) sinc^2(|phi|/2) = (1 - cos|phi|)/|phi|
    t = 0.5 * norm * float(sinc(norm / 2)) ** 2
    ops = sys.operators
    out = []
    for i in axes:
        j, k = (i + 1) % 3, (i + 2) % 3
        ci = n[i] ** 2 + s * (1 - n[i] ** 2)
        cj = n[i] * n[j] * (1 - s) - n[k] * t
        ck = n[k] * n[i] * (1 - s) + n[j] * t
        out.append(ci * ops[i] + cj * ops[j] + ck * ops[k])
    return np.stack(out)


def derivative_states(sys: SpinSystem, psi: np.ndarray, phi) -> np.ndarray:
    """Exact parametric derivatives ``|d_i psi_phi>``, shape ``(d, dim)``."""
    psi = np.asarray(psi, dtype=complex)
    u = unitary(sys, phi)
    a = a_operators(sys, phi)
    return -1j * (u @ (a @ psi).T).T


def rotation(sys: SpinSystem, axis, angle: float) -> np.ndarray:
    """Global rotation ``exp(-i angle n.J)`` about a named axis or a 3-vector."""
    if isinstance(axis, str):
        if axis not in _AXES:
            raise ValueError(f"unknown axis {axis!r}")
        n = np.zeros(3)
        n[_AXES[axis]] = 1.0
    else:
        n = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(n)
        if n.shape != (3,) or norm == 0:
            raise ValueError("rotation axis must be a nonzero 3-vector")
        n = n / norm
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    return hermitian_expm(angle * np.tensordot(n, sys.operators, axes=1))


def oat(sys: SpinSystem, angle: float) -> np.ndarray:
    """One-axis twisting ``exp(-i angle Jz^2)``."""
    if not np.isfinite(angle):
        raise ValueError("twisting angle must be finite")
    return np.diag(np.exp(-1j * angle * sys.m ** 2))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2`` for normalized vectors."""
    return float(abs(np.vdot(a, b)) ** 2)
