"""Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
A failing criterion stays failing; no tolerance is widened here.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from qcompass import catalog
from qcompass.bayes import GaussianPrior, anisotropic_coefficients, cost_coefficients, information_gain, \
    effective_variance
from qcompass.bhattacharyya import bhb_sweep
from qcompass.circuits import ghz_circuit, realize
from qcompass.domain import default_directions, domain_report, fibonacci_sphere, gamma0, isolated_radius, \
    ray_root, refine_minimum
from qcompass.info import fim, hl_2d, hl_3d, qfim, sld_povm, trace_inverse
from qcompass.mle import MleConfig, blowup_onset, crb_along, mse_scan
from qcompass.optimize import AnnealSchedule, optimize
from qcompass.sensor import SensorSolution
from qcompass.spin import make_spin_system

RESULTS = {}


def report(key, ok, detail):
    RESULTS[key] = (bool(ok), detail)
    print(f"\ncriterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def rel_err(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / np.max(np.abs(b)))


# 1 ---------------------------------------------------------------------------

def test_c01_bound_values():
    cases = [
        ("ghz1d-n4", lambda: catalog.get("ghz1d-n4"), [0.0], [[16.0]], True),
        ("qc2d-n4", lambda: catalog.get("qc2d-n4"), [0, 0], 12 * np.eye(2), True),
        ("qc3d-n4", lambda: catalog.get("qc3d-n4"), [0, 0, 0], 8 * np.eye(3), True),
        ("qc3d-n6", lambda: catalog.get("qc3d-n6"), [0, 0, 0], 16 * np.eye(3), True),
        ("qc3d-n8", lambda: catalog.get("qc3d-n8"), [0, 0, 0], 80 / 3 * np.eye(3), True),
        ("qc3d-n12", lambda: catalog.get("qc3d-n12"), [0, 0, 0], 56 * np.eye(3), True),
        ("circuit-n3", lambda: realize(ghz_circuit(3)), [0, 0, 0], np.diag([3.0, 3, 9]), False),
    ]
    worst, slow, bad = 0.0, 0.0, []
    for name, make, phi, target, quantum in cases:
        t = time.perf_counter()
        s = make()
        f = fim(s.psi, s.povm, phi)
        err = rel_err(f, target)
        if quantum:
            err = max(err, rel_err(qfim(s.psi, phi), target))
        dt = time.perf_counter() - t
        worst, slow = max(worst, err), max(slow, dt)
        if err > 1e-6 or dt > 1.0:
            bad.append(name)
    report(1, not bad, f"worst rel err {worst:.1e}, slowest {slow:.2f}s" + (f", failing {bad}" if bad else ""))


# 2 ---------------------------------------------------------------------------

def test_c02_phase_curves():
    s = catalog.get("qc2d-n4")
    grid = np.linspace(0.0, 3.0, 61, endpoint=False)[1:]
    e20 = max(abs(trace_inverse(fim(s.psi, s.povm, [r * math.cos(0.3), r * math.sin(0.3)]))
                  - catalog.qcrb_2d_even(2, r)) / catalog.qcrb_2d_even(2, r) for r in grid)
    t = catalog.get("qc3d-n4")
    n = np.array([0.3, -0.5, 0.8]) / np.linalg.norm([0.3, -0.5, 0.8])
    eq3 = max(abs(trace_inverse(qfim(t.psi, r * n)) - catalog.qcrb_3d_n4(r)) / catalog.qcrb_3d_n4(r)
              for r in grid)
    # HL curves: closed forms against the QFIM of the optimal biased states (the biased ansatz holds for J >= 3)
    eh3 = max(abs(trace_inverse(qfim(catalog.hl_state_3d(J, p), [0, 0, p])) - hl_3d(J, p)) / hl_3d(J, p)
              for J in (3, 4, 6) for p in grid[::6])
    eh2 = 0.0
    for p in grid[::6]:
        val, lam = hl_2d(2, p)
        eh2 = max(eh2, abs(trace_inverse(qfim(catalog.hl_state_2d(lam, p), [p, 0])) - val) / val)
    ok = e20 < 1e-8 and eq3 < 1e-6 and eh3 < 1e-6 and eh2 < 1e-6
    report(2, ok, f"ring curve {e20:.1e}, tetrahedral QCRB {eq3:.1e}, HL-3D {eh3:.1e}, HL-2D {eh2:.1e}")


# 3 ---------------------------------------------------------------------------

def test_c03_cost_coefficients():
    t0 = time.perf_counter()
    z3 = np.zeros(3)
    checks = []

    def add(label, value, target):
        checks.append((label, value, target, abs(value - target) / abs(target)))

    n4 = catalog.get("qc3d-n4")
    cc = cost_coefficients(n4.psi, n4.povm, z3)
    add("N4 C1", cc.C1, 24.0)
    add("N4 C2", cc.C2, -280.0)
    nq = catalog.get("qc3d-n4-nonqc")
    add("non-QC C2", cost_coefficients(nq.psi, nq.povm, z3).C2, -472.0)
    for th in (0.0, 0.3, 0.6, 1.0):
        g = catalog.ghz_1d(4, th)
        add(f"GHZ th={th}", cost_coefficients(g.psi, g.povm, [0.0]).C2, -4 ** 4 / math.cos(th) ** 2)
    circ = realize(ghz_circuit(3))
    add("circuit N3", cost_coefficients(circ.psi, circ.povm, z3).C2, -169.0)
    pm, pv = catalog.get("qc3d-n3-pm"), catalog.get("qc3d-n3-povm")
    add("PM N3", cost_coefficients(pm.psi, pm.povm, z3).C2, -157.0)
    add("POVM N3", cost_coefficients(pv.psi, pv.povm, z3).C2, -2 * (65 + 21 * math.sqrt(3)))
    F = np.diag([3.0, 3.0, 9.0])
    add("aniso PM", anisotropic_coefficients(pm.psi, pm.povm, F).C2, -475 / 3)
    add("aniso POVM", anisotropic_coefficients(pv.psi, pv.povm, F).C2, -25 / 21 * (115 + 9 * math.sqrt(3)))
    dt = time.perf_counter() - t0
    worst = max(checks, key=lambda c: c[3])
    bad = [c[0] for c in checks if c[3] > 5e-3]
    report(3, not bad and dt < 30, f"{len(checks)} values, worst {worst[0]} off {worst[3]:.1e}, {dt:.1f}s"
           + (f", failing {bad}" if bad else ""))


# 4 ---------------------------------------------------------------------------

def test_c04_optimizer_regression():
    t0 = time.perf_counter()
    sched = AnnealSchedule(deltas=(2.0 ** -2, 2.0 ** -3, 2.0 ** -4, 2.0 ** -5), restarts=8, seed=0)
    out = []
    # monotone descent is enforced inside every sweep: a violation raises DescentViolationError
    for d, N, f_target, c2_target in ((2, 4, 12 * np.eye(2), cost_coefficients(catalog.get("qc2d-n4").psi,
                                                                              catalog.get("qc2d-n4").povm,
                                                                              np.zeros(2)).C2),
                                      (3, 4, 8 * np.eye(3), -280.0)):
        sol, _ = optimize(N, d, kind="povm", schedule=sched)
        f = fim(sol.psi, sol.povm, sol.phi0)
        c2 = cost_coefficients(sol.psi, sol.povm, sol.phi0).C2
        out.append((d, float(np.abs(f - f_target).max() / f_target[0, 0]), abs(c2 - c2_target) / abs(c2_target)))
    dt = time.perf_counter() - t0
    ok = all(fe < 1e-4 and ce < 0.01 for _, fe, ce in out) and dt < 600
    report(4, ok, ", ".join(f"d={d}: F err {fe:.1e}, C2 err {ce:.1e}" for d, fe, ce in out) + f", {dt:.0f}s")


# 5 ---------------------------------------------------------------------------

def test_c05_annealing_trace():
    sched = AnnealSchedule(deltas=(2.0 ** -2, 2.0 ** -3, 2.0 ** -4, 2.0 ** -5), restarts=1, seed=0,
                           max_sweeps=1000)
    sol, trace = optimize(8, 3, kind="povm", schedule=sched)
    final = sol.cost_report.effective_variance
    prior = GaussianPrior.isotropic(3, 2.0 ** -5, nodes_per_axis=14)
    frozen = []
    for dl, st in trace.stages[:-1]:
        frozen.append(effective_variance(None, prior, gain=information_gain(st.psi, st.povm, prior)))
    qc = catalog.get("qc3d-n8")
    d_qc = effective_variance(None, prior, gain=information_gain(qc.psi, qc.povm, prior))
    ok = abs(d_qc - 0.1125) < 1e-4 and all(v > d_qc for v in frozen)
    report(5, ok, f"compass D at 2^-5 = {d_qc:.6f} (target 0.1125), annealed endpoint {final:.6f}, "
                  f"frozen stages {[round(v, 5) for v in frozen]}")


# 6 ---------------------------------------------------------------------------

def _shell_compare(res, sensor, curve, lo, hi, width):
    rows = []
    r = res.radii
    for a in np.arange(lo, hi - 1e-12, width):
        sel = (r >= a) & (r < a + width)
        if sel.any():
            rows.append((a, res.kmse[sel].mean(), curve(r[sel]).mean(), int(sel.sum())))
    return rows


def test_c06_mle_desk_scale():
    t0 = time.perf_counter()
    s = catalog.get("qc2d-n4")
    res = mse_scan(s, MleConfig(M=200, K=10_000, R=20, region=("ball", 0.75), seed=0))
    plateau = _shell_compare(res, s, lambda r: catalog.qcrb_2d_even(2, r), 0.0, 0.40, 0.1)
    worst = max(abs(m / c - 1) for _, m, c, _ in plateau)
    blow = _shell_compare(res, s, lambda r: catalog.qcrb_2d_even(2, r), 0.5, 0.6, 0.1)
    ratio = min(m / c for _, m, c, _ in blow)
    t = catalog.get("qc3d-n4")
    res3 = mse_scan(t, MleConfig(M=200, K=10_000, R=20, region=("ball", 0.75), seed=0))
    onset = blowup_onset(res3, lambda r: crb_along(t, [[0.0, 0.0, r]])[0], n_shells=38, r_max=0.75)
    dt = time.perf_counter() - t0
    ok = worst < 0.15 and ratio >= 10 and abs(onset - 0.4777) <= 0.03
    report(6, ok, f"2D plateau worst {worst:.1%}, blow-up ratio in [0.5,0.6] {ratio:.0f}x, "
                  f"3D onset {onset:.3f} (target 0.4777+-0.03), {dt:.0f}s")


# 7 ---------------------------------------------------------------------------

def test_c07_domain_radii():
    vals = {}
    rep2 = domain_report(catalog.get("qc2d-n4"))
    vals["2D N4"] = (rep2.phi_max, 0.443, 1e-3)
    for N, target in ((6, 0.384), (8, 0.295), (12, 0.203)):
        vals[f"3D N{N}"] = (domain_report(catalog.get(f"qc3d-n{N}")).phi_max, target, 2e-3)
    for N, target in ((6, 0.347), (12, 0.187)):
        vals[f"PM N{N}"] = (domain_report(catalog.get(f"qc3d-n{N}-pm")).phi_max, target, 2e-3)
    vals["gamma0"] = (gamma0(), 1.10836, 1e-5)
    g = catalog.ghz_1d(4)
    vals["r GHZ"] = (ray_root(g, [1.0]).radius * 4, math.pi / 2, 1e-4)
    vals["r 2D"] = (math.sqrt(2) * gamma0(), 1.5675, 1e-4)
    # 3D: fit phi_max = a / sqrt(J(J+1)) over the POVM compasses, r = a sqrt(4/3)
    Js = np.array([2, 3, 4, 6])
    radii = np.array([isolated_radius(catalog.get("qc3d-n4"))]
                     + [domain_report(catalog.get(f"qc3d-n{2 * J}")).phi_max for J in Js[1:]])
    x = 1 / np.sqrt(Js * (Js + 1))
    a = float(radii @ x / (x @ x))
    resid = float(np.max(np.abs(a * x - radii) / radii))
    vals["r 3D"] = (a * math.sqrt(4 / 3), 1.5, 0.1)
    bad = [k for k, (v, t, tol) in vals.items() if abs(v - t) > tol]
    ok = not bad and resid < 0.05
    detail = ", ".join(f"{k} {v:.5g}" for k, (v, _, _) in vals.items()) + f", 3D fit resid {resid:.1%}"
    report(7, ok, detail + (f"; failing {bad}" if bad else ""))


# 8 ---------------------------------------------------------------------------

def test_c08_bhattacharyya():
    thetas = np.arange(10) * 0.1 * math.pi / 2
    kmax = 12
    crb = 1 / 16
    b3 = np.array([bhb_sweep(catalog.ghz_1d(4, th).psi, catalog.ghz_1d(4, th).povm, [0.0], 3, kmax)
                   for th in thetas])
    b1 = np.array([bhb_sweep(catalog.ghz_1d(4, th).psi, catalog.ghz_1d(4, th).povm, [0.0], 1, kmax)
                   for th in thetas])
    at3 = b3[0, 2] / crb - 1
    ordering = bool(np.all(b3 >= b1 * (1 - 1e-12)))
    finite = np.isfinite(b3).all(axis=0)
    argmin_ok = all(np.argmin(b3[:, k]) == 0 for k in range(kmax) if finite[k])
    first2 = next((k + 1 for k in range(kmax) if b3[0, k] / crb - 1 <= 0.02), None)
    ok = at3 <= 0.02 and ordering and argmin_ok
    report(8, ok, f"theta=0 K=3 excess over CRB {at3:.1%} (target <=2%; first K within 2%: {first2}), "
                  f"kappa ordering {ordering}, theta=0 argmin {argmin_ok}")


# 9 ---------------------------------------------------------------------------

def test_c09_property_suite():
    target = Path(__file__).with_name("test_properties.py")
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(target)],
                          capture_output=True, text=True)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else "no output"
    report(9, proc.returncode == 0, f"standalone property suite: {summary}")


# 10 --------------------------------------------------------------------------

def test_c10_sld_quadrant():
    psi = make_spin_system(4).basis(0)
    s = SensorSolution(psi, sld_povm(psi, np.zeros(2)), 2, kind="projective", name="sld-n4")
    res = mse_scan(s, MleConfig(M=200, K=10_000, R=20, region=("cube", 0.75), guess=(0.01, 0.01), seed=0))
    pts = np.array([r["phi"] for r in res.records])
    low = res.kmse < 1.0  # low error: K*MSE below six times the QCRB at the origin (1/6)
    frac = float((pts[low] > 0).all(axis=1).mean()) if low.any() else 0.0
    report(10, frac >= 0.95 and low.sum() >= 10, f"{int(low.sum())} low-error points, {frac:.1%} in first quadrant")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
