"""Exact analytical sensors used as oracles and benchmarks.

All amplitude lists are in descending-m order and are built from closed-form
radicals at call time, so a transcription slip shows up as a completeness
residual rather than a silently wrong number.
"""
from __future__ import annotations

import re

import numpy as np

from .info import Povm
from .sensor import SensorSolution
from .spin import hermitian_expm, make_spin_system, sinc

sq = np.sqrt


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def _rz(sys, angle):
    return hermitian_expm(angle * sys.jz)


def _ry(sys, angle):
    return hermitian_expm(angle * sys.jy)


def _rx(sys, angle):
    return hermitian_expm(angle * sys.jx)


def _sensor(psi, vectors, d, name, kind="povm", **meta) -> SensorSolution:
    povm = Povm.from_vectors(vectors)
    if kind == "auto":
        kind = "projective" if povm.is_projective() else "povm"
    return SensorSolution(psi=_unit(psi), povm=povm, d=d, kind=kind, name=name, metadata=dict(meta))


# --- single parameter -------------------------------------------------------


def ghz_state(N: int) -> np.ndarray:
    """``(|J,J> + |J,-J>)/sqrt(2)``."""
    psi = np.zeros(N + 1, dtype=complex)
    psi[0] = psi[-1] = 1 / sq(2)
    return psi


def ghz_1d(N: int, theta: float = 0.0) -> SensorSolution:
    """GHZ interferometer with the two-outcome parity-type measurement at basis phase ``theta``.

    Outcome probabilities are ``[1 -/+ sin(N phi - theta)] / 2``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    up = np.zeros(N + 1, dtype=complex)
    down = np.zeros(N + 1, dtype=complex)
    up[0] = 1.0
    down[-1] = 1.0
    plus = (np.exp(1j * theta / 2) * down + 1j * np.exp(-1j * theta / 2) * up) / sq(2)
    minus = (np.exp(1j * theta / 2) * down - 1j * np.exp(-1j * theta / 2) * up) / sq(2)
    effects = np.einsum("la,lb->lab", [plus, minus], np.conj([plus, minus]))
    if N > 1:
        # the GHZ manifold is two-dimensional; the rest of the space is a never-firing outcome
        effects = np.concatenate([effects, (np.eye(N + 1) - effects.sum(axis=0))[None]])
    return SensorSolution(psi=ghz_state(N), povm=Povm(effects), d=1, kind="projective",
                          name=f"ghz1d-n{N}", metadata={"theta": theta})


# --- two parameters ---------------------------------------------------------


def _ring_sensor(J, psi, fid, name):
    sys = make_spin_system(int(round(2 * J)))
    mus = J - np.arange(sys.dim)[::-1]  # -J .. J
    vecs = [_rz(sys, 2 * np.pi * mu / (2 * J + 1) - np.pi) @ fid for mu in mus]
    return _sensor(psi, vecs, 2, name, kind="projective")


def qc_2d_even(J) -> SensorSolution:
    """Two-phase compass for integer ``J``: state ``|J,0>`` and a rotated fiducial basis."""
    if J != int(J) or J < 1:
        raise ValueError("qc_2d_even needs integer J >= 1")
    J = int(J)
    sys = make_spin_system(2 * J)
    fid = np.exp(1j * np.pi * np.abs(sys.m) / 2) / sq(2 * J + 1)
    return _ring_sensor(J, sys.basis(0), fid, f"qc2d-n{2 * J}")


def qc_2d_odd(J) -> SensorSolution:
    """Two-phase compass for half-integer ``J``: state ``|J,1/2>``."""
    if abs(2 * J - round(2 * J)) > 1e-12 or int(round(2 * J)) % 2 != 1:
        raise ValueError("qc_2d_odd needs half-integer J")
    sys = make_spin_system(int(round(2 * J)))
    fid = np.exp(1j * np.pi * np.abs(sys.m - 0.5) / 2) / sq(sys.dim)
    return _ring_sensor(sys.J, sys.basis(0.5), fid, f"qc2d-n{sys.N}")


def qc_2d(N: int) -> SensorSolution:
    return qc_2d_even(N // 2) if N % 2 == 0 else qc_2d_odd(N / 2)


def crb_2d_odd(J: float) -> float:
    """Closed-form ``Tr F^-1`` of the odd-N two-phase compass at the origin."""
    return 4 / (J + 0.5 + sq((J - 0.5) * (J + 1.5))) ** 2


def qcrb_2d_even(J: float, phi_abs) -> np.ndarray:
    """Closed-form ``Tr F^-1`` of the even-N two-phase compass versus ``|phi|``."""
    return (1 + sinc(np.asarray(phi_abs, dtype=float)) ** -2) / (2 * J * (J + 1))


def hl_state_2d(lam: float, phi0: float) -> np.ndarray:
    """Biased ``N = 4`` two-phase state ``exp(i phi0 Jx / 2) |lam>``."""
    sys = make_spin_system(4)
    ket = sys.basis(0) - lam / sq(2) * (sys.basis(-2) + sys.basis(2))
    return hermitian_expm(phi0 / 2 * sys.jx, scale=1j) @ (ket / sq(1 + lam ** 2))


# --- three parameters -------------------------------------------------------


def qc3d_n4_state() -> np.ndarray:
    sys = make_spin_system(4)
    return sq(2 / 3) * sys.basis(1) + sys.basis(-2) / sq(3)


def _n4_povm(eta):
    sys = make_spin_system(4)
    w = 2 * np.pi / 3
    tilt = hermitian_expm(np.pi / (2 * sq(3)) * (sq(2) * sys.jx - sys.jz))
    mu4 = _ry(sys, np.pi) @ tilt @ eta
    return [eta, _rz(sys, w) @ eta, _rz(sys, -w) @ eta, mu4, _rz(sys, w) @ mu4, _rz(sys, -w) @ mu4]


def qc_3d_n4(branch: str = "qc") -> SensorSolution:
    """Tetrahedral ``N = 4`` compass.

    ``branch="qc"`` returns the optimal fiducial; ``"nonqc"`` the opposite
    extremum of the one-parameter family that keeps ``F = 8 I``.
    """
    x7 = -1 / (3 * sq(2))
    if branch == "qc":
        x6 = -1 / 3
    elif branch == "nonqc":
        x6 = 1 / 3
    else:
        raise ValueError("branch must be 'qc' or 'nonqc'")
    eta = np.array([
        -x6 / sq(2) - 1j * (1 + sq(2) * x7) / 2,
        (sq(2) + 1j) / (3 * sq(2)),
        -1j / sq(6),
        x6 + 1j * x7,
        (1 - 1j * sq(2)) / (3 * sq(2)),
    ])
    name = "qc3d-n4" if branch == "qc" else "qc3d-n4-nonqc"
    return _sensor(qc3d_n4_state(), _n4_povm(eta), 3, name, x6=x6, x7=x7)


def qc3d_n4_eta() -> np.ndarray:
    """Fiducial of the optimal ``N = 4`` measurement with a real first entry."""
    return np.array([1, -1j, (sq(2) + 1j) / sq(3), 1j, 1]) / sq(6)


def _n3_pm():
    vecs = np.array([[1, 1, 1j, -1j], [1, -1, -1j, -1j], [1, -1, 1j, 1j], [1, 1, -1j, 1j]]) / 2
    return _sensor(ghz_state(3), vecs, 3, "qc3d-n3-pm", kind="projective")


def _n3_povm():
    sys = make_spin_system(3)
    x = -sq((6 - sq(3)) / 33)
    y = -0.5 * sq((2 * sq(3) - 1) / 11)
    mu1 = np.array([x, 1 / sq(3), -1 / sq(3), x])
    mu4 = np.array([y + 0.5j, 0, 0, y - 0.5j])
    w = 2 * np.pi / 3
    vecs = [mu1, _rz(sys, w) @ mu1, _rz(sys, -w) @ mu1, mu4, _rx(sys, np.pi) @ mu4]
    return _sensor(ghz_state(3), vecs, 3, "qc3d-n3-povm")


def qc3d_n6_state() -> np.ndarray:
    """Octahedron state ``(|3,2> + |3,-2>)/sqrt(2)``."""
    sys = make_spin_system(6)
    return (sys.basis(2) + sys.basis(-2)) / sq(2)


def _n6():
    sys = make_spin_system(6)
    a = (1j * sq(3) + sq(5)) / (2 * sq(2))
    b = (sq(3) + 1j * sq(5)) / (2 * sq(2))
    c = (-sq(3) + 1j * sq(5)) / (2 * sq(2))
    e = (1j * sq(3) - sq(5)) / (2 * sq(2))
    eta = np.array([a, np.exp(3j * np.pi / 4), b, 1, c, np.exp(-3j * np.pi / 4), e]) / sq(8)
    flip = _ry(sys, np.pi) @ eta
    vecs = [_rz(sys, np.pi / 2 * l) @ eta for l in range(4)]
    vecs += [_rz(sys, np.pi / 2 * l) @ flip for l in range(4)]
    return _sensor(qc3d_n6_state(), vecs, 3, "qc3d-n6")


def qc3d_n8_state() -> np.ndarray:
    """Cube state in the frame of the ``N = 8`` measurement.

    The ``m = +-4`` amplitudes carry a minus sign relative to ``m = 0``; the
    all-positive version is the same cube turned by ``pi/4`` about z.
    """
    sys = make_spin_system(8)
    return sq(7 / 12) * sys.basis(0) - sq(5 / 24) * (sys.basis(4) + sys.basis(-4))


def _n8(solution: int = 1):
    sys = make_spin_system(8)
    r = sq(77 / 5)
    mu1 = np.zeros(9, dtype=complex)
    mu1[0] = (r - 2) / 12 + 1j / sq(5)
    mu1[4] = sq(83 / 10 + 2 * r) / 6
    mu1[8] = (r - 2) / 12 - 1j / sq(5)
    x2 = 1 / (4 * sq(5))
    x5 = x6 = 0.25
    if solution == 1:
        x7 = -sq(4 + 2 * sq(7 / 5) + 3 / sq(5)) / 8
        x8 = -sq(4 - 2 * sq(7 / 5) - 3 / sq(5)) / 8
        x3, x4 = -x8, -x7
        x1 = -(sq(7 / 5) + sq(11) / 2) / 12
        x9 = sq(97 / 10 - 2 * r) / 12
    elif solution == 2:
        x7 = sq(4 + 2 * sq(7 / 5) - 3 / sq(5)) / 8
        x8 = -sq(4 - 2 * sq(7 / 5) + 3 / sq(5)) / 8
        x3, x4 = x8, x7
        x1 = (sq(7 / 5) + sq(11) / 2) / 12
        x9 = -sq(97 / 10 - 2 * r) / 12
    else:
        raise ValueError("solution must be 1 or 2")
    eta = np.array([
        x1 + 1j * x2, x3 + 1j * x4, x5 + 1j * x6, x7 + 1j * x8, x9,
        -x7 + 1j * x8, x5 - 1j * x6, -x3 + 1j * x4, x1 - 1j * x2,
    ])
    flip = _ry(sys, np.pi)
    vecs = [mu1, flip @ mu1]
    vecs += [_rz(sys, np.pi / 2 * l) @ eta for l in range(4)]
    vecs += [_rz(sys, np.pi / 2 * l) @ flip @ eta for l in range(4)]
    name = "qc3d-n8" if solution == 1 else "qc3d-n8-b"
    return _sensor(qc3d_n8_state(), vecs, 3, name, solution=solution)


def qc3d_n12_state(rotated: bool = True) -> np.ndarray:
    """Icosahedral ``N = 12`` state; ``rotated`` gives the face-up frame used by the measurement."""
    sys = make_spin_system(12)
    if rotated:
        v = np.zeros(13, dtype=complex)
        v[[0, 12]] = 2 * sq(7)
        v[[3]] = -sq(77)
        v[[9]] = sq(77)
        v[6] = -sq(33)
        return v / (9 * sq(3))
    return sq(11) / 5 * sys.basis(0) + sq(7) / 5 * (sys.basis(5) - sys.basis(-5))


def _n12():
    sys = make_spin_system(12)
    x1 = sq(195 - 10 * sq(770) / 3) / 45
    x2 = sq(93 / 10 + sq(770) / 3) / 18
    x3 = sq(81 / 20 + sq(77 / 10)) / 9
    y1 = (sq(33) - 6) / (9 * sq(10))
    y2 = (4 * sq(2 / 15) + sq(11 / 10)) / 6
    eta = np.zeros(13, dtype=complex)
    eta[0], eta[3], eta[6] = x1 + 1j * y1, x2 + 1j * y2, x3
    eta[9], eta[12] = -x2 + 1j * y2, x1 - 1j * y1
    # unit axis through a vertex of the top face
    h = sq(2 / 3 * (1 - 1 / sq(5))) * sys.jx + sq((1 + 2 / sq(5)) / 3) * sys.jz
    top = [eta]
    for k in range(3):
        for l in range(1, 4):
            top.append(_rz(sys, 2 * np.pi / 3 * k) @ hermitian_expm(2 * np.pi / 5 * l * h) @ eta)
    flip = _ry(sys, np.pi)
    vecs = top + [flip @ v for v in top]
    return _sensor(qc3d_n12_state(), vecs, 3, "qc3d-n12")


_VARIANTS = {3: ("", "pm", "povm"), 4: ("", "nonqc"), 6: ("", "pm"), 8: ("", "b"), 12: ("", "pm")}


def derived_pm(N: int) -> SensorSolution:
    """Projective-measurement compass for N = 6 or 12, derived numerically and shipped as data.

    The input state is the catalog state; the measurement was found by the
    projective-class optimizer (see ``scripts/derive_pm_sensors.py``).
    """
    from importlib.resources import files

    from .io import sensor_from_dict
    import json

    if N not in (6, 12):
        raise ValueError("derived projective compasses exist for N = 6 and 12")
    doc = json.loads(files("qcompass").joinpath("data", f"qc3d_n{N}_pm.json").read_text())
    return sensor_from_dict(doc)


def qc_3d(N: int, variant: str = "") -> SensorSolution:
    """Three-phase compass for ``N`` in ``{3, 4, 6, 8, 12}``.

    ``variant`` selects ``"pm"``/``"povm"`` for N=3, ``"nonqc"`` for N=4,
    ``"b"`` for the second N=8 solution and ``"pm"`` for the numerically
    derived projective measurements at N=6 and 12.
    """
    if N not in _VARIANTS:
        raise ValueError(f"no exact three-phase solution for N={N}")
    if variant not in _VARIANTS[N]:
        raise ValueError(f"variant {variant!r} not available for N={N}; choose from {_VARIANTS[N]}")
    if N in (6, 12) and variant == "pm":
        return derived_pm(N)
    if N == 3:
        return _n3_povm() if variant == "povm" else _n3_pm()
    if N == 4:
        return qc_3d_n4("nonqc" if variant == "nonqc" else "qc")
    if N == 6:
        return _n6()
    if N == 8:
        return _n8(2 if variant == "b" else 1)
    if N == 12:
        return _n12()
    raise ValueError(f"no exact three-phase solution for N={N}")


def state_3d_n32() -> np.ndarray:
    """Pentakis-dodecahedron ``N = 32`` input state (normalized)."""
    sys = make_spin_system(32)
    psi = np.zeros(33, dtype=complex)
    amp = {
        15: 1 / (4 * sq(2)), -15: -1 / (4 * sq(2)),
        10: -sq(217 / 29) / 12, -10: -sq(217 / 29) / 12,
        5: -sq(2015 / 4002) / 4, -5: sq(2015 / 4002) / 4,
        0: sq(5890 / 11339) / 3,
    }
    for m, a in amp.items():
        psi += a * sys.basis(m)
    return _unit(psi)


def hl_lambda_3d(J: float, phi0: float) -> float:
    s = abs(float(sinc(abs(phi0) / 2)))
    return float(sq(2 / (J + 1) * (2 * J / s - 1)))


def hl_state_3d(J: float, phi0: float) -> np.ndarray:
    """Optimal biased three-phase state for bias ``phi0`` along z (integer ``J``)."""
    if J != int(J) or J < 1:
        raise ValueError("hl_state_3d needs integer J >= 1")
    sys = make_spin_system(int(2 * J))
    lam = hl_lambda_3d(J, phi0)
    v = sys.basis(-J) + sys.basis(J) - lam * sys.basis(0)
    return v / sq(2 + lam ** 2)


def qcrb_3d_n4(phi_abs) -> np.ndarray:
    """Closed-form ``Tr F_Q^-1`` of the tetrahedral state versus ``|phi|`` (J=2)."""
    J = 2
    return 3 * (1 + 2 * sinc(np.asarray(phi_abs, dtype=float) / 2) ** -2) / (4 * J * (J + 1))


# --- registry ---------------------------------------------------------------

NAMES = (
    "ghz1d-n<N>", "qc2d-n<N>", "qc3d-n3-pm", "qc3d-n3-povm", "qc3d-n4", "qc3d-n4-nonqc",
    "qc3d-n6", "qc3d-n6-pm", "qc3d-n8", "qc3d-n8-b", "qc3d-n12", "qc3d-n12-pm",
)


def get(name: str) -> SensorSolution:
    """Look up a catalog sensor by name, e.g. ``"qc3d-n4"`` or ``"ghz1d-n4"``."""
    m = re.fullmatch(r"ghz1d-n(\d+)", name)
    if m:
        return ghz_1d(int(m.group(1)))
    m = re.fullmatch(r"qc2d-n(\d+)", name)
    if m:
        return qc_2d(int(m.group(1)))
    m = re.fullmatch(r"qc3d-n(\d+)(?:-(pm|povm|nonqc|b))?", name)
    if m:
        try:
            return qc_3d(int(m.group(1)), m.group(2) or "")
        except ValueError as exc:
            raise KeyError(str(exc)) from None
    raise KeyError(f"unknown catalog entry {name!r}; known patterns: {', '.join(NAMES)}")
