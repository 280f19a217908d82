"""Derive the projective-measurement three-phase compasses for N=6 and N=12.

The input states are the symmetric catalog states; measurement and estimators
come from the projective-class optimizer. Results are written to
``src/qcompass/data`` and loaded by ``catalog.get("qc3d-n6-pm")``.
"""
import sys
import time
from pathlib import Path

import numpy as np

from qcompass import catalog
from qcompass.domain import domain_report
from qcompass.info import fim
from qcompass.io import save_sensor
from qcompass.optimize import AnnealSchedule, optimize

OUT = Path(__file__).resolve().parents[1] / "src" / "qcompass" / "data"
STATES = {6: catalog.qc3d_n6_state, 12: catalog.qc3d_n12_state}
# (restarts, sweeps per width); N=12 takes about 40 min on one core
BUDGET = {6: (2, 500), 12: (4, 2000)}

for N in map(int, sys.argv[1:] or ["6", "12"]):
    t = time.time()
    restarts, sweeps = BUDGET[N]
    sched = AnnealSchedule(restarts=restarts, seed=N, max_sweeps=sweeps)
    sol, trace = optimize(N, 3, kind="projective", schedule=sched, fixed_state=STATES[N]())
    sol.name = f"qc3d-n{N}-pm"
    rep = domain_report(sol)
    sol.metadata["phi_max"] = rep.phi_max
    save_sensor(sol, OUT / f"qc3d_n{N}_pm.json")
    print(N, f"{time.time() - t:.0f}s", "F diag", np.round(np.diag(fim(sol.psi, sol.povm, np.zeros(3))), 6),
          "phi_max", rep.phi_max)
