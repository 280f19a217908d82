"""Simulated maximum-likelihood phase estimation and asymptotic likelihood maps."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .info import _prob_and_grad, cond_probs, fim, trace_inverse

LOG_FLOOR = 1e-300


def sample_frequencies(probs, K: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts drawn outcome by outcome as conditional binomials."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    p = p / p.sum()
    counts = np.zeros(p.size, dtype=np.int64)
    left, mass = int(K), 1.0
    for j in range(p.size - 1):
        if left == 0 or mass <= 0:
            break
        q = min(1.0, max(0.0, p[j] / mass))
        counts[j] = rng.binomial(left, q)
        left -= counts[j]
        mass -= p[j]
    counts[-1] += left
    return counts


@dataclass
class MleFit:
    phi: np.ndarray
    loglik: float
    converged: bool
    nit: int


def log_likelihood(phi, freqs, psi, effects):
    """``L(phi) = sum_j f_j log p(mu_j|phi)`` and its gradient."""
    p, grad, _ = _prob_and_grad(psi, effects, phi)
    pf = np.maximum(p, LOG_FLOOR)
    val = float(freqs @ np.log(pf))
    g = (freqs / pf) @ grad
    return val, g


def maximize_likelihood(counts, psi, povm, guess, gtol: float = 1e-10, maxiter: int = 500,
                        max_step: float = 0.05) -> MleFit:
    """Local maximum of the log-likelihood reached by monotone Fisher scoring from ``guess``.

    Each step solves ``J dx = grad`` with the observed-frequency scoring matrix
    ``J = sum_j f_j grad p_j grad p_j^T / p_j^2``, is capped at ``max_step`` in
    norm and halved until the likelihood increases. The cap keeps the iterate
    on the ascent path of the starting basin instead of jumping to a distant
    maximum, which an unscaled quasi-Newton first step can do. Frequencies are
    normalized by the shot number so that ``gtol`` does not depend on ``K``.
    """
    psi = np.asarray(psi, dtype=complex)
    effects = povm.effects if hasattr(povm, "effects") else np.asarray(povm, dtype=complex)
    counts = np.asarray(counts, dtype=float)
    freqs = counts / counts.sum()
    x = np.atleast_1d(np.asarray(guess, dtype=float)).copy()

    def evaluate(x):
        p, grad, _ = _prob_and_grad(psi, effects, x)
        pf = np.maximum(p, LOG_FLOOR)
        w = freqs / pf
        return float(freqs @ np.log(pf)), w @ grad, (grad * (w / pf)[:, None]).T @ grad

    val, g, jm = evaluate(x)
    ok, it = False, 0
    for it in range(1, maxiter + 1):
        if np.linalg.norm(g) < gtol:
            ok = True
            break
        ridge = 1e-12 * max(np.trace(jm), 1.0)
        try:
            dx = np.linalg.solve(jm + ridge * np.eye(x.size), g)
        except np.linalg.LinAlgError:
            dx = g
        if dx @ g <= 0:
            dx = g
        n = np.linalg.norm(dx)
        if n > max_step:
            dx *= max_step / n
        while True:
            cand = x + dx
            cval, cg, cj = evaluate(cand)
            if cval >= val or np.linalg.norm(dx) < 1e-15:
                break
            dx = dx / 2
        if cval < val:
            break
        step_small = np.linalg.norm(cand - x) < 1e-14
        x, val, g, jm = cand, cval, cg, cj
        if step_small:
            ok = np.linalg.norm(g) < 1e-7
            break
    ok = ok or np.linalg.norm(g) < 1e-7
    return MleFit(x, float(val * counts.sum()), bool(ok), it)


@dataclass
class MleConfig:
    """Parameters of a simulated estimation campaign.

    ``region`` is ``("cube", half_width)`` or ``("ball", radius)``.
    """

    M: int = 200
    K: int = 10_000
    R: int = 20
    region: tuple = ("cube", 0.75)
    guess: tuple | None = None
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if min(self.M, self.K, self.R) < 1:
            raise ValueError("M, K and R must be >= 1")
        kind, size = self.region
        if kind not in ("cube", "ball") or not size > 0:
            raise ValueError("region must be ('cube', w) or ('ball', r) with a positive size")

    @classmethod
    def from_dict(cls, cfg: dict) -> "MleConfig":
        cfg = dict(cfg)
        if "region" in cfg:
            cfg["region"] = tuple(cfg["region"])
        if cfg.get("guess") is not None:
            cfg["guess"] = tuple(cfg["guess"])
        return cls(**cfg)

    def to_dict(self):
        return {"M": self.M, "K": self.K, "R": self.R, "region": list(self.region),
                "guess": None if self.guess is None else list(self.guess), "seed": self.seed}


def sample_points(d: int, config: MleConfig) -> np.ndarray:
    """True phase vectors, Latin-hypercube stratified in the cube (ball: cube draws kept inside)."""
    kind, size = config.region
    sampler = qmc.LatinHypercube(d=d, seed=np.random.default_rng([config.seed, 2 ** 31]))
    if kind == "cube":
        return (2 * sampler.random(config.M) - 1) * size
    pts = np.empty((0, d))
    while len(pts) < config.M:
        draw = (2 * sampler.random(config.M) - 1) * size
        pts = np.vstack([pts, draw[np.linalg.norm(draw, axis=1) <= size]])
    return pts[: config.M]


def _run_point(args):
    idx, phi, psi, effects, cfg, guess = args
    rng = np.random.default_rng([cfg["seed"], idx])
    p = cond_probs(psi, effects, phi)
    se, conv = [], 0
    for _ in range(cfg["R"]):
        counts = sample_frequencies(p, cfg["K"], rng)
        fit = maximize_likelihood(counts, psi, effects, guess)
        se.append(float(np.sum((fit.phi - phi) ** 2)))
        conv += fit.converged
    return {"index": idx, "phi": phi.tolist(), "mse": float(np.mean(se)), "converged": conv / cfg["R"]}


@dataclass
class MleResult:
    """Per-point records of a campaign plus helpers for the ring/shell statistics."""

    K: int
    records: list = field(default_factory=list)

    @property
    def radii(self):
        return np.array([np.linalg.norm(r["phi"]) for r in self.records])

    @property
    def kmse(self):
        return self.K * np.array([r["mse"] for r in self.records])

    def shells(self, n_shells: int = 50, r_max: float | None = None) -> list:
        """Equal-thickness shells; rows ``(r_inner, r_outer, r_mid, mean K*MSE, count)``; empty shells omitted."""
        r = self.radii
        r_max = r.max() if r_max is None else r_max
        edges = np.linspace(0.0, r_max, n_shells + 1)
        rows = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            sel = (r >= lo) & (r < hi)
            if sel.any():
                rows.append((lo, hi, (lo + hi) / 2, float(self.kmse[sel].mean()), int(sel.sum())))
        return rows


def mse_scan(solution, config: MleConfig) -> MleResult:
    """Run the sample / simulate / maximize / average protocol at every sampled true vector.

    Each point uses its own random stream keyed by ``(seed, point index)``, so
    results do not depend on ``n_jobs``.
    """
    d = solution.d
    pts = sample_points(d, config) + solution.phi0
    guess = solution.phi0 if config.guess is None else np.asarray(config.guess, dtype=float)
    cfg = {"seed": config.seed, "R": config.R, "K": config.K}
    jobs = [(i, pts[i], solution.psi, solution.effects, cfg, guess) for i in range(len(pts))]
    if config.n_jobs > 1:
        with ProcessPoolExecutor(config.n_jobs) as ex:
            recs = list(ex.map(_run_point, jobs, chunksize=8))
    else:
        recs = [_run_point(j) for j in jobs]
    recs.sort(key=lambda r: r["index"])
    return MleResult(config.K, recs)


def crb_along(solution, phis) -> np.ndarray:
    """``Tr F^-1`` at each phase point."""
    return np.array([trace_inverse(fim(solution.psi, solution.povm, p)) for p in np.atleast_2d(phis)])


def blowup_onset(result: MleResult, crb, factor: float = 10.0, n_shells: int = 50, r_max=None) -> float:
    """Inner radius of the first shell whose mean ``K*MSE`` exceeds ``factor * crb(r_mid)``.

    ``crb`` is a callable of the shell mid radius. Returns ``inf`` if no shell does.
    """
    for lo, hi, mid, val, _ in result.shells(n_shells, r_max):
        if val > factor * crb(mid):
            return lo
    return float("inf")


def asymptotic_likelihood(solution, phi0, grid) -> np.ndarray:
    """``prod_mu p(mu|phi)^p(mu|phi0)`` at every grid point.

    Terms with ``p(mu|phi0) = 0`` contribute a factor of one (``0^0 = 1``).
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    p0 = cond_probs(solution.psi, solution.povm, phi0)
    use = p0 > 0
    out = np.empty(len(grid))
    for k, phi in enumerate(grid):
        p = cond_probs(solution.psi, solution.povm, phi)[use]
        if np.any(p <= 0):
            out[k] = 0.0
        else:
            out[k] = float(np.exp(p0[use] @ np.log(p)))
    return out
