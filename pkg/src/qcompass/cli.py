"""Command-line entry point: ``qcompass <command> ...``.

Exit status is 0 on success and 2 when an input fails validation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .exceptions import InvalidPovmError
from .io import dumps, load_sensor, save_sensor, write_csv

log = logging.getLogger("qcompass")


class UsageError(Exception):
    pass


def _vec(text: str | None, d: int | None = None):
    if text is None:
        return None if d is None else np.zeros(d)
    vals = [float(x) for x in text.replace(" ", "").split(",") if x]
    return np.array(vals)


def _sensor(ref: str):
    """Catalog name or path to a sensor file."""
    path = Path(ref)
    if path.exists():
        return load_sensor(path)
    try:
        return catalog.get(ref)
    except KeyError as exc:
        raise UsageError(f"{ref!r} is neither a sensor file nor a catalog entry ({exc.args[0]})") from None


def _emit(obj, out: str | None):
    text = dumps(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------


def cmd_fim(a):
    from .info import fim, qfim, quasiclassical_check, trace_inverse

    s = _sensor(a.sensor)
    phi = _vec(a.phi, s.d)
    if phi.size != s.d:
        raise UsageError(f"--phi needs {s.d} components")
    f = fim(s.psi, s.povm, phi, return_info=True)
    fq = qfim(s.psi, phi)
    _emit({"phi": phi, "fim": f.matrix, "qfim": fq, "crb": trace_inverse(f.matrix), "qcrb": trace_inverse(fq),
           "quasiclassical_residual": quasiclassical_check(s.psi, phi), "singular": f.singular,
           "zero_outcomes": f.zero_outcomes}, a.out)


def cmd_compass(a):
    from .bayes import cost_coefficients
    from .info import fim
    from .optimize import AnnealSchedule, optimize

    deltas = tuple(float(x) for x in a.schedule.split(",")) if a.schedule else (0.25, 0.125, 0.0625, 0.03125)
    sched = AnnealSchedule(deltas, a.restarts, a.seed, a.inner_tol, a.max_sweeps)
    cov = None
    if a.anisotropic_cov:
        cov = np.array(json.loads(Path(a.anisotropic_cov).read_text()), dtype=float)
    phi0 = _vec(a.phi0, a.d)
    sol, trace = optimize(a.n, a.d, phi0, a.kind, sched, cov_shape=cov)
    out = Path(a.out)
    save_sensor(sol, out)
    rows = [(r["restart"], r["delta"], r["xi"], r["effective_variance"], r["sweeps"], int(r["converged"]))
            for r in trace.records]
    trace_path = Path(a.trace) if a.trace else out.with_suffix(".trace.csv")
    write_csv(trace_path, ["restart", "delta", "xi", "effective_variance", "sweeps", "converged"], rows,
              {"N": a.n, "d": a.d, "kind": a.kind, "seed": a.seed, "deltas": list(deltas)})
    cc = cost_coefficients(sol.psi, sol.povm, sol.phi0)
    _emit({"solution": str(out), "trace": str(trace_path), "fim": fim(sol.psi, sol.povm, sol.phi0),
           "C1": cc.C1, "C2": cc.C2, "C3": cc.C3,
           "effective_variance": sol.cost_report.effective_variance}, None)


def cmd_mle(a):
    from .mle import MleConfig, mse_scan

    s = _sensor(a.sensor)
    cfg = json.loads(Path(a.config).read_text()) if a.config else {}
    if a.seed is not None:
        cfg["seed"] = a.seed
    cfg["n_jobs"] = a.threads
    try:
        config = MleConfig.from_dict(cfg)
    except TypeError as exc:
        raise UsageError(f"bad MLE config: {exc}") from None
    res = mse_scan(s, config)
    stem = Path(a.out)
    write_csv(stem.with_suffix(".shells.csv"), ["r_inner", "r_outer", "r_mid", "k_mse", "count"],
              res.shells(a.shells), config.to_dict())
    Path(stem.with_suffix(".points.json")).write_text(dumps({"config": config.to_dict(), "K": res.K,
                                                            "records": res.records}))
    _emit({"points": len(res.records), "shells_csv": str(stem.with_suffix(".shells.csv"))}, None)


def cmd_domain(a):
    from .domain import default_directions, domain_report, isolated_radius

    s = _sensor(a.sensor)
    rep = domain_report(s, default_directions(s.d, a.grid))
    doc = rep.to_dict()
    if a.isolated:
        doc["isolated_radius"] = isolated_radius(s)
    if a.csv:
        write_csv(a.csv, [f"n{i}" for i in range(s.d)] + ["radius"],
                  [[*n, r] for n, r in zip(rep.directions, rep.radii)], {"sensor": a.sensor})
    if not a.full:
        doc.pop("shape_samples")
    _emit(doc, a.out)


def cmd_bhb(a):
    from .bhattacharyya import bhb_sweep
    from .info import fim

    s = _sensor(a.sensor)
    if s.d != 1:
        raise UsageError("bhb needs a one-phase sensor")
    phi0 = _vec(a.phi0, 1)
    ks = np.arange(1, a.kmax + 1)
    vals = bhb_sweep(s.psi, s.povm, phi0, a.kappa, a.kmax)
    crb = 1.0 / float(fim(s.psi, s.povm, phi0)[0, 0])
    rows = [(int(k), v, crb) for k, v in zip(ks, vals)]
    if a.out:
        write_csv(a.out, ["K", "K_times_bhb", "crb"], rows, {"sensor": a.sensor, "kappa": a.kappa})
    else:
        _emit({"K": ks, "K_times_bhb": vals, "crb": crb}, None)


def cmd_circuit(a):
    from .bayes import GaussianPrior, cost_coefficients
    from .circuits import ghz_circuit, optimize_angles, realize
    from .info import fim

    circ = ghz_circuit(a.n)
    prior = GaussianPrior.isotropic(3, a.delta)
    if a.action == "optimize":
        fit = optimize_angles(circ, prior, restarts=a.restarts, seed=a.seed)
        circ = fit.circuit
    sol = realize(circ, prior)
    doc = circ.to_dict(prior)
    cc = cost_coefficients(sol.psi, sol.povm, np.zeros(3))
    doc.update({"fim": fim(sol.psi, sol.povm, np.zeros(3)), "C1": cc.C1, "C2": cc.C2})
    if a.sensor_out:
        save_sensor(sol, a.sensor_out)
    _emit(doc, a.out)


def cmd_catalog(a):
    if a.action == "list":
        _emit(list(catalog.NAMES), None)
        return
    if not a.name:
        raise UsageError("catalog export needs a name")
    s = _sensor(a.name)
    if a.out:
        save_sensor(s, a.out)
    else:
        from .io import sensor_to_dict

        _emit(sensor_to_dict(s), None)


def cmd_majorana(a):
    from .majorana import constellation, husimi_grid

    path = Path(a.sensor)
    if path.exists() and path.suffix == ".json":
        doc = json.loads(path.read_text())
        if "povm" in doc:
            psi = load_sensor(path).psi
        else:
            arr = np.asarray(doc.get("state", doc), dtype=float)
            psi = arr[..., 0] + 1j * arr[..., 1]
    else:
        psi = _sensor(a.sensor).psi
    c = constellation(psi)
    _emit({"points": c.points, "angles": c.angles, "infinity_count": c.infinity_count}, a.out)
    if a.husimi:
        th, ph, q = husimi_grid(psi, a.resolution, 2 * a.resolution)
        rows = [(t, p, q[i, j]) for i, t in enumerate(th) for j, p in enumerate(ph)]
        write_csv(a.husimi, ["theta", "phi", "Q"], rows, {"state": a.sensor})


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcompass", description="Multiparameter SU(2) sensor toolkit")
    p.add_argument("--threads", type=int, default=1, help="cap on worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fim", help="Fisher matrices and bounds at a phase point")
    s.add_argument("sensor")
    s.add_argument("--phi")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fim)

    s = sub.add_parser("compass", help="anneal the single-shot cost")
    s.add_argument("--d", type=int, required=True, choices=(1, 2, 3))
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--class", dest="kind", default="povm", choices=("povm", "projective"))
    s.add_argument("--schedule", help="comma-separated decreasing prior widths")
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--inner-tol", type=float, default=1e-15)
    s.add_argument("--max-sweeps", type=int, default=2000)
    s.add_argument("--phi0")
    s.add_argument("--anisotropic-cov", help="JSON file with the prior covariance shape")
    s.add_argument("--out", default="compass.json")
    s.add_argument("--trace")
    s.set_defaults(func=cmd_compass)

    s = sub.add_parser("mle", help="simulated maximum-likelihood campaign")
    s.add_argument("sensor")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--shells", type=int, default=50)
    s.add_argument("--out", default="mle")
    s.set_defaults(func=cmd_mle)

    s = sub.add_parser("domain", help="domain radius and shape")
    s.add_argument("sensor")
    s.add_argument("--grid", type=int, help="number of directions")
    s.add_argument("--isolated", action="store_true", help="also search isolated probability zeros")
    s.add_argument("--full", action="store_true", help="include every direction in the JSON")
    s.add_argument("--csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_domain)

    s = sub.add_parser("bhb", help="Bhattacharyya bound sweep")
    s.add_argument("sensor")
    s.add_argument("--kappa", type=int, default=3, choices=(1, 2, 3))
    s.add_argument("--kmax", type=int, default=20)
    s.add_argument("--phi0")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bhb)

    s = sub.add_parser("circuit", help="circuit sensors")
    s.add_argument("action", choices=("ghz", "optimize"))
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--delta", type=float, default=2.0 ** -5)
    s.add_argument("--restarts", type=int, default=4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sensor-out")
    s.add_argument("--out")
    s.set_defaults(func=cmd_circuit)

    s = sub.add_parser("catalog", help="exact solutions")
    s.add_argument("action", choices=("list", "export"))
    s.add_argument("name", nargs="?")
    s.add_argument("--out")
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("majorana", help="constellation and Husimi grid")
    s.add_argument("sensor", help="catalog name, sensor file or JSON state")
    s.add_argument("--resolution", type=int, default=32)
    s.add_argument("--husimi", help="CSV path for the Husimi grid")
    s.add_argument("--out")
    s.set_defaults(func=cmd_majorana)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(message)s")
    try:
        a.func(a)
    except (InvalidPovmError, UsageError, ValueError, KeyError, json.JSONDecodeError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"qcompass: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
