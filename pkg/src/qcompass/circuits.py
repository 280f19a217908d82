"""Circuit-model sensors built from global rotations and one-axis twisting.

A circuit acts on ``|J, J>``: the entangler prepares the input state and the
decoder rotates the collective ``Jz`` eigenbasis into the measurement basis,
``Pi_mu = U_de^dag |mu><mu| U_de``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bayes import GaussianPrior, QuadratureCache, optimal_estimators, xi_optimal, effective_variance
from .info import Povm
from .sensor import SensorSolution
from .spin import make_spin_system, oat, rotation

KINDS = ("rot_x", "rot_y", "rot_z", "oat_z")


def gate(sys, kind: str, angle: float) -> np.ndarray:
    if kind == "oat_z":
        return oat(sys, angle)
    if kind in ("rot_x", "rot_y", "rot_z"):
        return rotation(sys, kind[-1], angle)
    raise ValueError(f"unknown gate kind {kind!r}; expected one of {KINDS}")


def sequence_unitary(sys, gates) -> np.ndarray:
    """Product of gates listed in time order (first gate acts first)."""
    u = np.eye(sys.dim, dtype=complex)
    for kind, angle in gates:
        if not np.isfinite(angle):
            raise ValueError("gate angles must be finite")
        u = gate(sys, kind, float(angle)) @ u
    return u


@dataclass
class CircuitSpec:
    """Entangler and decoder gate lists, each in time order."""

    N: int
    entangler: list = field(default_factory=list)
    decoder: list = field(default_factory=list)
    d: int = 3
    psi0: np.ndarray | None = None

    def __post_init__(self):
        for kind, angle in list(self.entangler) + list(self.decoder):
            if kind not in KINDS:
                raise ValueError(f"unknown gate kind {kind!r}")
            if not np.isfinite(angle):
                raise ValueError("gate angles must be finite")
        self.entangler = [(k, float(a)) for k, a in self.entangler]
        self.decoder = [(k, float(a)) for k, a in self.decoder]

    @property
    def angles(self) -> np.ndarray:
        return np.array([a for _, a in self.entangler + self.decoder])

    def with_angles(self, angles) -> "CircuitSpec":
        angles = list(map(float, angles))
        ne = len(self.entangler)
        en = [(k, a) for (k, _), a in zip(self.entangler, angles[:ne])]
        de = [(k, a) for (k, _), a in zip(self.decoder, angles[ne:])]
        return CircuitSpec(self.N, en, de, self.d, self.psi0)

    def wrapped(self) -> "CircuitSpec":
        """Angles reduced to ``[0, 2 pi)``."""
        return self.with_angles(np.mod(self.angles, 2 * np.pi))

    def to_dict(self, prior=None) -> dict:
        return {
            "N": self.N, "d": self.d,
            "entangler": [{"kind": k, "angle": a} for k, a in self.entangler],
            "decoder": [{"kind": k, "angle": a} for k, a in self.decoder],
            "prior": None if prior is None else prior.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc) -> "CircuitSpec":
        return cls(int(doc["N"]), [(g["kind"], g["angle"]) for g in doc["entangler"]],
                   [(g["kind"], g["angle"]) for g in doc["decoder"]], int(doc.get("d", 3)))

    def dumps(self, prior=None) -> str:
        return json.dumps(self.to_dict(prior), indent=1)


def circuit_parts(circuit: CircuitSpec):
    """``(input state, projective effects)`` of a circuit."""
    sys = make_spin_system(circuit.N)
    psi0 = sys.basis(sys.J) if circuit.psi0 is None else np.asarray(circuit.psi0, dtype=complex)
    psi = sequence_unitary(sys, circuit.entangler) @ psi0
    ude = sequence_unitary(sys, circuit.decoder)
    rows = ude.conj().T  # columns U_de^dag |mu>
    effects = np.einsum("am,bm->mab", rows, rows.conj())
    return psi, effects


def realize(circuit: CircuitSpec, prior: GaussianPrior | None = None) -> SensorSolution:
    """Sensor of a circuit; estimators are posterior means under ``prior`` (isotropic, width 2^-5, by default)."""
    psi, effects = circuit_parts(circuit)
    prior = prior or GaussianPrior.isotropic(circuit.d, 2.0 ** -5)
    povm = Povm(effects)
    est = optimal_estimators(psi, povm, prior)
    return SensorSolution(psi / np.linalg.norm(psi), povm, circuit.d, estimators=est, kind="projective",
                          provenance="circuit", name=f"circuit-n{circuit.N}", prior=prior,
                          metadata={"circuit": circuit.to_dict()})


def ghz_circuit(N: int) -> CircuitSpec:
    """Entangler ``Rl(pi/2) Tz(pi/2) Rx(pi/2)`` (l = x for even N, y for odd N) and decoder ``Ry(pi/2) Tz(pi/(2(N-1)))``."""
    if N < 2:
        raise ValueError("the GHZ circuit needs N >= 2")
    last = "rot_x" if N % 2 == 0 else "rot_y"
    en = [("rot_x", np.pi / 2), ("oat_z", np.pi / 2), (last, np.pi / 2)]
    de = [("oat_z", np.pi / (2 * (N - 1))), ("rot_y", np.pi / 2)]
    return CircuitSpec(N, en, de, 3)


def rotated_measurement_triplet(N: int) -> list:
    """Three GHZ circuits whose most sensitive axis is x, y and z respectively.

    The state is rotated after the entangler and the inverse rotation precedes
    the decoder, so the Fisher matrices are axis relabelings of one another.
    """
    base = ghz_circuit(N)
    out = []
    for rot in ([("rot_y", np.pi / 2)], [("rot_x", -np.pi / 2)], []):
        inv = [(k, -a) for k, a in reversed(rot)]
        out.append(CircuitSpec(N, base.entangler + rot, inv + base.decoder, 3))
    return out


@dataclass
class AngleFit:
    circuit: CircuitSpec
    xi: float
    effective_variance: float
    history: list


def circuit_cost(circuit: CircuitSpec, prior: GaussianPrior, cache: QuadratureCache | None = None) -> float:
    psi, effects = circuit_parts(circuit)
    return xi_optimal(psi, effects, prior, cache)


def optimize_angles(layout: CircuitSpec, prior: GaussianPrior, restarts: int = 4, seed: int = 0,
                    polish: bool = True, maxiter: int = 2000) -> AngleFit:
    """Multi-start Nelder-Mead on the gate angles minimizing the single-shot cost.

    Restart 0 starts from the layout's own angles, the others from uniform
    random angles. A finite-difference BFGS polish follows when ``polish``.
    """
    if len(layout.angles) < 1:
        raise ValueError("layout must contain at least one gate")
    sys = make_spin_system(layout.N)
    cache = QuadratureCache(sys, prior)
    rng = np.random.default_rng(seed)

    def f(x):
        return circuit_cost(layout.with_angles(x), prior, cache)

    best, hist = None, []
    for r in range(restarts):
        x0 = layout.angles if r == 0 else rng.uniform(0, 2 * np.pi, layout.angles.size)
        res = minimize(f, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": maxiter, "adaptive": True})
        x, fx = res.x, res.fun
        if polish:
            pol = minimize(f, x, method="BFGS", options={"gtol": 1e-14})
            if pol.fun < fx:
                x, fx = pol.x, pol.fun
        hist.append(float(fx))
        if best is None or fx < best[1]:
            best = (x, fx)
    circ = layout.with_angles(best[0]).wrapped()
    return AngleFit(circ, float(best[1]), effective_variance(best[1], prior), hist)
