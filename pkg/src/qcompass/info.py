"""Outcome probabilities, classical and quantum Fisher information, SLD measurements
and closed-form Heisenberg-limit curves."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import DegenerateInputError, InvalidPovmError
from .spin import SpinSystem, a_operators, derivative_states, encode, make_spin_system, sinc

P_FLOOR = 1e-14
GRAD_FLOOR = 1e-10
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-9


@dataclass(eq=False)
class Povm:
    """Ordered set of positive effects summing to the identity.

    Parameters
    ----------
    effects : array_like, shape (L, dim, dim)
        Hermitian positive semidefinite matrices.
    labels : list, optional
        Outcome identifiers; defaults to ``0..L-1``.
    validate : bool
        Check positivity, completeness and size on construction.
    """

    effects: np.ndarray
    labels: list = field(default=None)
    validate: bool = True

    def __post_init__(self):
        self.effects = np.asarray(self.effects, dtype=complex)
        if self.labels is None:
            self.labels = list(range(len(self.effects)))
        if self.validate:
            check_povm(self.effects)

    def __len__(self):
        return self.effects.shape[0]

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @classmethod
    def from_vectors(cls, vectors, **kw) -> "Povm":
        """Rank-1 effects ``|v><v|`` from (unnormalized) vectors."""
        v = np.asarray(vectors, dtype=complex)
        return cls(np.einsum("la,lb->lab", v, v.conj()), **kw)

    def is_projective(self, tol: float = 1e-8) -> bool:
        """True when every effect is a rank-1 orthogonal projector."""
        if len(self) != self.dim:
            return False
        for e in self.effects:
            if np.max(np.abs(e @ e - e)) > tol or abs(np.trace(e).real - 1) > tol:
                return False
        return True


def check_povm(effects, psd_tol: float = PSD_TOL, tol: float = COMPLETENESS_TOL) -> None:
    """Raise :class:`InvalidPovmError` naming the first violated invariant."""
    effects = np.asarray(effects)
    if effects.ndim != 3 or effects.shape[1] != effects.shape[2]:
        raise InvalidPovmError(f"effects must have shape (L, dim, dim), got {effects.shape}")
    if effects.shape[0] < 2:
        raise InvalidPovmError("a POVM needs at least 2 effects")
    if not np.all(np.isfinite(effects)):
        raise InvalidPovmError("effects contain non-finite entries")
    herm = np.max(np.abs(effects - effects.conj().transpose(0, 2, 1)))
    if herm > tol:
        raise InvalidPovmError(f"effects are not Hermitian (residual {herm:.3g})")
    lo = np.linalg.eigvalsh(effects).min()
    if lo < -psd_tol:
        raise InvalidPovmError(f"effect not positive semidefinite (min eigenvalue {lo:.3g})")
    resid = np.max(np.abs(effects.sum(axis=0) - np.eye(effects.shape[1])))
    if resid > tol:
        raise InvalidPovmError(f"effects do not sum to identity (residual {resid:.3g})")


def _effects(povm) -> np.ndarray:
    return povm.effects if isinstance(povm, Povm) else np.asarray(povm, dtype=complex)


def _system(psi) -> SpinSystem:
    return make_spin_system(len(psi) - 1)


def cond_probs(psi, povm, phi) -> np.ndarray:
    """Outcome probabilities ``p(mu|phi) = <psi_phi|M_mu|psi_phi>``."""
    psi = np.asarray(psi, dtype=complex)
    out = encode(_system(psi), psi, phi)
    p = np.einsum("a,lab,b->l", out.conj(), _effects(povm), out).real
    return np.clip(p, 0.0, None)


def _prob_and_grad(psi, effects, phi):
    sys = _system(psi)
    out = encode(sys, psi, phi)
    dpsi = derivative_states(sys, psi, phi)
    mv = np.einsum("lab,b->la", effects, out)
    p = np.einsum("a,la->l", out.conj(), mv).real
    grad = 2 * np.einsum("ia,la->li", dpsi.conj(), mv).real
    return p, grad, dpsi


@dataclass
class FimResult:
    """Fisher matrix plus the zero-probability outcomes that needed special handling."""

    matrix: np.ndarray
    singular: bool
    zero_outcomes: list


def fim(psi, povm, phi, return_info: bool = False):
    """Classical Fisher information matrix of a pure-state sensor.

    Outcomes with ``p < 1e-14`` and vanishing gradient enter through the limit
    ``4 Re <d_i psi|M|d_j psi>`` of ``grad p grad p^T / p`` approached along the
    zero set. That limit is exact when the quadratic form is rank one; a
    higher-rank form or a nonvanishing gradient sets the ``singular`` flag.

    Parameters
    ----------
    psi : array_like
        Input state, descending-m ordering.
    povm : Povm or array_like
        Measurement effects.
    phi : array_like
        Phase point, length 1, 2 or 3.
    return_info : bool
        Return a :class:`FimResult` instead of the bare matrix.
    """
    psi = np.asarray(psi, dtype=complex)
    effects = _effects(povm)
    p, grad, dpsi = _prob_and_grad(psi, effects, phi)
    d = grad.shape[1]
    f = np.zeros((d, d))
    singular = False
    zeros = []
    for mu in range(len(p)):
        if p[mu] >= P_FLOOR:
            f += np.outer(grad[mu], grad[mu]) / p[mu]
            continue
        zeros.append(mu)
        if np.linalg.norm(grad[mu]) >= GRAD_FLOOR:
            singular = True
            continue
        h = 4 * np.einsum("ia,ab,jb->ij", dpsi.conj(), effects[mu], dpsi).real
        ev = np.linalg.eigvalsh(h)
        if np.sum(ev > 1e-8 * max(ev.max(), 1.0)) > 1:
            singular = True
        f += h
    f = (f + f.T) / 2
    if return_info:
        return FimResult(f, singular, zeros)
    return f


def qfim(psi, phi) -> np.ndarray:
    """Quantum Fisher information matrix of the unitarily encoded pure state."""
    psi = np.asarray(psi, dtype=complex)
    sys = _system(psi)
    out = encode(sys, psi, phi)
    dpsi = derivative_states(sys, psi, phi)
    ov = dpsi.conj() @ out
    g = dpsi.conj() @ dpsi.T - np.outer(ov, ov.conj())
    f = 4 * g.real
    return (f + f.T) / 2


def sld(psi, phi) -> np.ndarray:
    """Symmetric logarithmic derivatives ``L_i = 2(|d_i psi><psi| + h.c.)``."""
    psi = np.asarray(psi, dtype=complex)
    sys = _system(psi)
    out = encode(sys, psi, phi)
    dpsi = derivative_states(sys, psi, phi)
    ops = np.einsum("ia,b->iab", dpsi, out.conj())
    return 2 * (ops + ops.conj().transpose(0, 2, 1))


def quasiclassical_check(psi, phi) -> float:
    """Largest ``|<psi|[A_i, A_j]|psi>|`` over generator pairs; zero means the QCRB is attainable."""
    psi = np.asarray(psi, dtype=complex)
    a = a_operators(_system(psi), phi)
    worst = 0.0
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            c = a[i] @ a[j] - a[j] @ a[i]
            worst = max(worst, abs(np.vdot(psi, c @ psi)))
    return float(worst)


def sld_povm(psi, phi, cond_tol: float = 1e-10) -> Povm:
    """Measurement built from the span of the encoded state and its derivatives.

    Gram-Schmidt on ``{psi_phi, d_1 psi, ..., d_d psi}`` gives ``d + 1`` rank-1
    projectors; the orthogonal complement forms the last effect.
    """
    psi = np.asarray(psi, dtype=complex)
    sys = _system(psi)
    out = encode(sys, psi, phi)
    dpsi = derivative_states(sys, psi, phi)
    vecs = np.vstack([out[None], dpsi])
    gram = vecs.conj() @ vecs.T
    ev = np.linalg.eigvalsh(gram)
    if ev.min() < cond_tol * max(ev.max(), 1.0):
        raise DegenerateInputError(
            f"encoded state and its derivatives are linearly dependent (Gram eigenvalue {ev.min():.3g})"
        )
    basis = []
    for v in vecs:
        w = v.copy()
        for b in basis:
            w = w - np.vdot(b, w) * b
        basis.append(w / np.linalg.norm(w))
    basis = np.array(basis)
    proj = np.einsum("la,lb->lab", basis, basis.conj())
    rest = np.eye(sys.dim) - proj.sum(axis=0)
    effects = np.concatenate([proj, rest[None]])
    if np.linalg.norm(rest) < 1e-12:
        effects = proj
    return Povm(effects)


def qcrb_hl_2d_formula(lam: float, phi0: float) -> float:
    """Trace of the inverse QFIM for the N=4 biased ansatz with parameter ``lam``."""
    s = float(sinc(phi0 / 2))
    r3 = np.sqrt(3.0)
    return 0.25 * ((1 + lam ** 2) / ((r3 + lam) * s) ** 2 + (1 + lam ** 2) / (r3 - lam) ** 2)


def hl_2d(J: float, phi0: float) -> tuple[float, float]:
    """Phase-dependent Heisenberg limit for two phases, ``N = 4`` only.

    Returns
    -------
    (delta_hl, lam_star)
        Minimum of the biased-ansatz QCRB and the minimizing ``lam``.
    """
    if J != 2:
        raise ValueError("the two-phase HL ansatz is defined for J = 2 only")
    phi0 = abs(float(phi0))
    hi = np.sqrt(3.0) - 1e-6
    res = minimize_scalar(
        lambda lam: qcrb_hl_2d_formula(lam, phi0),
        bounds=(0.0, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    lam, val = float(res.x), float(res.fun)
    if qcrb_hl_2d_formula(0.0, phi0) <= val:
        lam, val = 0.0, qcrb_hl_2d_formula(0.0, phi0)
    return val, lam


def hl_3d(J: float, phi0: float) -> float:
    """Phase-dependent Heisenberg limit for three phases, ``[1 + 2/|sinc(|phi0|/2)|]^2 / (4J(J+1))``."""
    if J != int(J) or J <= 1:
        raise ValueError("the three-phase HL formula needs integer J > 1")
    s = abs(float(sinc(abs(phi0) / 2)))
    return (1 + 2 / s) ** 2 / (4 * J * (J + 1))


def trace_inverse(f) -> float:
    """``Tr F^-1``; ``inf`` for a singular matrix."""
    f = np.atleast_2d(f)
    try:
        ev = np.linalg.eigvalsh(f)
    except np.linalg.LinAlgError:
        return float("inf")
    if ev.min() <= 1e-12 * max(ev.max(), 1e-300):
        return float("inf")
    return float(np.sum(1 / ev))
