"""Radius and shape of the region around the expansion point where the likelihood has a unique maximum.

Along a ray ``phi0 + t n`` every outcome amplitude ``<v_mu|exp(-i(phi0 + t n).J)|psi>``
is a trigonometric polynomial in ``t``. The first positive zero over all outcomes
bounds the domain in that direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .info import _prob_and_grad, fim
from .spin import unitary

TWO_PI = 2 * np.pi


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors."""
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    r = np.sqrt(1 - z * z)
    ang = np.pi * (1 + np.sqrt(5)) * k
    return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)


def circle_directions(n: int) -> np.ndarray:
    a = TWO_PI * np.arange(n) / n
    return np.stack([np.cos(a), np.sin(a)], axis=1)


def default_directions(d: int, n: int | None = None) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        return circle_directions(n or 360)
    return fibonacci_sphere(n or 2000)


def _rank1_vectors(effects, tol=1e-10):
    """Split effects into rank-1 vectors (``M = |v><v|``) and the indices of higher-rank ones."""
    vecs, idx, other = [], [], []
    for mu, e in enumerate(effects):
        w, v = np.linalg.eigh(e)
        if w[-2] < tol * max(w[-1], 1.0):
            vecs.append(v[:, -1] * np.sqrt(max(w[-1], 0.0)))
            idx.append(mu)
        else:
            other.append(mu)
    return np.array(vecs), idx, other


@dataclass
class RayRoot:
    radius: float
    outcome: int | None
    method: str
    found: bool


class _Ray:
    """Amplitudes and probabilities of every outcome along one ray, from a single eigendecomposition."""

    def __init__(self, solution, direction):
        sys = solution.system
        d = solution.d
        n = np.asarray(direction, dtype=float).reshape(d)
        n = n / np.linalg.norm(n)
        gens = sys.generators(d)
        self.lam, self.vec = np.linalg.eigh(np.tensordot(n, gens, axes=1))
        base = unitary(sys, solution.phi0) @ solution.psi
        self.c = self.vec.conj().T @ base  # coordinates in the eigenbasis of n.J
        vecs, self.rank1, self.other = _rank1_vectors(solution.effects)
        self.vproj = vecs.conj() @ self.vec if len(vecs) else np.zeros((0, sys.dim))
        self.effects_eig = self.vec.conj().T @ solution.effects[self.other] @ self.vec if self.other else None

    def amplitudes(self, t):
        t = np.atleast_1d(t)
        ph = np.exp(-1j * np.outer(self.lam, t)) * self.c[:, None]
        return self.vproj @ ph  # (n_rank1, T)

    def probs_other(self, t):
        t = np.atleast_1d(t)
        st = np.exp(-1j * np.outer(self.lam, t)) * self.c[:, None]
        return np.einsum("at,lab,bt->lt", st.conj(), self.effects_eig, st).real


def ray_root(solution, direction, step: float = 1e-3, t_max: float = TWO_PI, chunk: float = 0.25,
             real_tol: float = 1e-10, prob_tol: float = 1e-12) -> RayRoot:
    """Smallest positive zero of any outcome probability along ``phi0 + t n``.

    Amplitudes that are real up to a constant phase are bracketed by sign changes
    on a grid of spacing ``step`` and refined with Brent's method to 1e-12. Complex
    amplitudes (and effects of rank above one) have touching zeros; those are
    located as grid minima of the probability and refined by bounded minimization,
    which marks the result ``method="probability-roots"``.

    Returns ``RayRoot(2*pi, None, method, False)`` if no zero lies in ``(0, t_max]``.
    """
    ray = _Ray(solution, direction)
    # fix each amplitude's constant phase from a probe grid
    probe = np.linspace(0.0, min(t_max, 3.0), 301)
    a = ray.amplitudes(probe)
    phase = np.ones(len(ray.rank1), dtype=complex)
    real = np.ones(len(ray.rank1), dtype=bool)
    alive = np.ones(len(ray.rank1), dtype=bool)
    for k in range(len(ray.rank1)):
        j = int(np.argmax(np.abs(a[k])))
        amax = abs(a[k, j])
        if amax < 1e-9:
            alive[k] = False
            continue
        phase[k] = np.conj(a[k, j]) / amax
        real[k] = np.max(np.abs((a[k] * phase[k]).imag)) < real_tol * max(1.0, amax)
    other_alive = np.ones(len(ray.other), dtype=bool)
    if ray.other:
        po = ray.probs_other(probe)
        other_alive = po.max(axis=1) > 1e-12
    method = "amplitude-roots" if real.all() and not ray.other else "probability-roots"

    best = (np.inf, None)
    lo = 0.0
    while lo < t_max and not np.isfinite(best[0]):
        hi = min(lo + chunk, t_max)
        t = np.arange(lo, hi + step / 2, step)
        amps = ray.amplitudes(t) * phase[:, None]
        for k in np.nonzero(alive)[0]:
            if real[k]:
                r = _first_sign_change(lambda x, k=k: (ray.amplitudes(x)[k, 0] * phase[k]).real, t, amps[k].real)
            else:
                r = _first_touch(lambda x, k=k: abs(ray.amplitudes(x)[k, 0]) ** 2, t, np.abs(amps[k]) ** 2, prob_tol)
            if r < best[0]:
                best = (r, ray.rank1[k])
        if ray.other:
            po = ray.probs_other(t)
            for k in np.nonzero(other_alive)[0]:
                r = _first_touch(lambda x, k=k: ray.probs_other(x)[k, 0], t, po[k], prob_tol)
                if r < best[0]:
                    best = (r, ray.other[k])
        lo = hi
    if not np.isfinite(best[0]):
        return RayRoot(TWO_PI, None, method, False)
    return RayRoot(float(best[0]), best[1], method, True)


def _first_sign_change(f, t, vals, t_min=1e-8):
    scale = np.abs(vals).max() + 1e-300
    nz = np.abs(vals) > 1e-13 * scale
    for i in range(len(t) - 1):
        if t[i + 1] <= t_min:
            continue
        if not nz[i + 1] and t[i + 1] > t_min and i + 2 < len(t) and vals[i] * vals[i + 2] < 0:
            return float(t[i + 1])
        if nz[i] and nz[i + 1] and vals[i] * vals[i + 1] < 0:
            return float(brentq(f, t[i], t[i + 1], xtol=1e-12, rtol=1e-14))
    return np.inf


def _first_touch(f, t, vals, tol, t_min=1e-8):
    for i in range(1, len(t) - 1):
        if t[i] <= t_min:
            continue
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1] and vals[i] < 1e-4:
            res = minimize_scalar(f, bounds=(t[i - 1], t[i + 1]), method="bounded", options={"xatol": 1e-11})
            if res.fun < tol and res.x > t_min:
                return float(res.x)
    return np.inf


@dataclass
class DomainReport:
    phi_max: float
    directions: np.ndarray
    radii: np.ndarray
    r_coefficient: float
    method: str
    fisher_max: float
    flags: list = field(default_factory=list)

    @property
    def min_direction(self):
        return self.directions[int(np.argmin(self.radii))]

    def to_dict(self):
        return {"phi_max": self.phi_max, "r_coefficient": self.r_coefficient, "method": self.method,
                "fisher_max": self.fisher_max, "flags": self.flags,
                "shape_samples": [[*map(float, n), float(r)] for n, r in zip(self.directions, self.radii)]}


def domain_report(solution, directions=None, step: float = 1e-3) -> DomainReport:
    """Aggregate :func:`ray_root` over a direction grid; ``r = phi_max sqrt(max eig F)``."""
    d = solution.d
    directions = default_directions(d) if directions is None else np.atleast_2d(directions)
    roots = [ray_root(solution, n, step=step) for n in directions]
    radii = np.array([r.radius for r in roots])
    methods = {r.method for r in roots}
    method = "amplitude-roots" if methods == {"amplitude-roots"} else "probability-roots"
    flags = []
    if not all(r.found for r in roots):
        flags.append("no-root-on-some-rays")
    if method == "probability-roots":
        flags.append("isolated-roots-possible")
    fmax = float(np.linalg.eigvalsh(np.atleast_2d(fim(solution.psi, solution.povm, solution.phi0))).max())
    phi_max = float(radii.min())
    return DomainReport(phi_max, directions, radii, phi_max * math.sqrt(fmax), method, fmax, flags)


def refine_minimum(solution, report: DomainReport, iters: int = 3, step: float = 1e-4) -> float:
    """Polish ``phi_max`` by local direction search around the best grid direction."""
    n = report.min_direction.copy()
    best = ray_root(solution, n, step=step).radius
    d = len(n)
    if d == 1:
        return best
    width = 2 * np.pi / len(report.radii) if d == 2 else 2.5 / np.sqrt(len(report.radii))
    for _ in range(iters):
        cands = _neighbours(n, width)
        for c in cands:
            r = ray_root(solution, c, step=step).radius
            if r < best:
                best, n = r, c
        width /= 3
    return best


def _neighbours(n, width):
    if len(n) == 2:
        a = np.arctan2(n[1], n[0])
        return [np.array([np.cos(a + s), np.sin(a + s)]) for s in np.linspace(-width, width, 9)]
    u = np.cross(n, [1.0, 0, 0] if abs(n[0]) < 0.9 else [0, 1.0, 0])
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    out = []
    for a in np.linspace(-width, width, 5):
        for b in np.linspace(-width, width, 5):
            m = n + a * u + b * v
            out.append(m / np.linalg.norm(m))
    return out


def isolated_roots(solution, radii=(0.3, 0.5), n_dirs: int = 24, tol: float = 1e-12,
                   exclude: float = 1e-4):
    """Zeros of outcome probabilities found by multi-start local minimization of each ``p_mu``.

    Needed when zeros are isolated points rather than hypersurfaces, so that a
    ray grid would step past them. Starts lie on spheres of the given radii
    around ``phi0``. Returns an ``(n, d)`` array of distinct roots sorted by
    distance from ``phi0`` (zeros closer than ``exclude`` are dropped).
    """
    from scipy.optimize import minimize

    d = solution.d
    dirs = default_directions(d, n_dirs) if d > 1 else np.array([[1.0], [-1.0]])
    psi, effects = solution.psi, solution.effects
    found = []
    for mu in range(len(effects)):
        e = effects[mu:mu + 1]

        def f(x):
            p, g, _ = _prob_and_grad(psi, e, x)
            return p[0], g[0]

        for r in radii:
            for n in dirs:
                res = minimize(f, solution.phi0 + r * n, jac=True, method="BFGS", options={"gtol": 1e-14})
                if res.fun < tol and np.linalg.norm(res.x - solution.phi0) > exclude:
                    found.append(res.x)
    if not found:
        return np.zeros((0, d))
    found = np.array(found)
    dist = np.linalg.norm(found - solution.phi0, axis=1)
    order = np.argsort(dist)
    out = []
    for x in found[order]:
        if all(np.linalg.norm(x - y) > 1e-6 for y in out):
            out.append(x)
    return np.array(out)


def isolated_radius(solution, **kw) -> float:
    """Distance from ``phi0`` to the closest isolated probability zero (``inf`` if none)."""
    roots = isolated_roots(solution, **kw)
    if len(roots) == 0:
        return float("inf")
    return float(np.linalg.norm(roots[0] - solution.phi0))


# --- asymptotic radius for the two-phase ring sensors ----------------------


def bessel_j(n: int, x: float, terms: int = 40) -> float:
    """Bessel function of the first kind by its ascending series."""
    h = x / 2
    return sum((-1) ** k * h ** (2 * k + n) / (math.factorial(k) * math.factorial(k + n)) for k in range(terms))


def struve_h(n: int, x: float, terms: int = 40) -> float:
    """Struve function ``H_n`` (n = 0, 1) by its ascending series."""
    h = x / 2
    return sum((-1) ** k * h ** (2 * k + n + 1) / (math.gamma(k + 1.5) * math.gamma(k + n + 1.5)) for k in range(terms))


def gamma0_equation(g: float) -> float:
    j0, j1 = bessel_j(0, g), bessel_j(1, g)
    return 1 - g * (j0 + np.pi / 2 * (struve_h(0, g) * j1 - struve_h(1, g) * j0))


def gamma0(tol: float = 1e-13) -> float:
    """First positive root of the radius equation, bisected on ``[0.5, 2]``."""
    lo, hi = 0.5, 2.0
    flo = gamma0_equation(lo)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        fm = gamma0_equation(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def phi_max_asymptotic_2d(J: float) -> float:
    """Large-``J`` domain radius ``gamma0 / sqrt(J(J+1))`` of the two-phase ring sensors."""
    if J < 1:
        raise ValueError("J must be >= 1")
    return gamma0() / math.sqrt(J * (J + 1))
