"""Sensor-file (JSON) and result-table (CSV) formats.

Every float is written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .info import Povm
from .sensor import SensorSolution

VERSION = 1


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return json.dumps(str(x))
        return format(x, ".17g")
    if x is None:
        return "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, np.ndarray):
        return _fmt(x.tolist())
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj) -> str:
    """JSON text with 17-significant-digit floats."""
    return _fmt(obj) + "\n"


def _pairs(z) -> list:
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1).tolist()


def _unpairs(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def sensor_to_dict(sol: SensorSolution) -> dict:
    prior = sol.prior.to_dict() if hasattr(sol.prior, "to_dict") else sol.prior
    meta = {"provenance": sol.provenance, "kind": sol.kind, "name": sol.name, "prior": prior,
            "phi0": np.asarray(sol.phi0).tolist()}
    meta.update({k: v for k, v in sol.metadata.items() if k not in meta})
    if sol.cost_report is not None and hasattr(sol.cost_report, "to_dict"):
        meta["cost_report"] = sol.cost_report.to_dict()
    return {
        "version": VERSION,
        "N": sol.N,
        "d": sol.d,
        "state": _pairs(sol.psi),
        "povm": _pairs(sol.effects),
        "estimators": None if sol.estimators is None else np.asarray(sol.estimators).tolist(),
        "metadata": meta,
    }


def sensor_from_dict(doc: dict) -> SensorSolution:
    """Rebuild and validate a sensor; invalid POVMs raise :class:`InvalidPovmError`."""
    for key in ("N", "d", "state", "povm"):
        if key not in doc:
            raise ValueError(f"sensor file is missing the {key!r} field")
    psi = _unpairs(doc["state"])
    if psi.ndim != 1 or psi.size != int(doc["N"]) + 1:
        raise ValueError(f"state must have N+1 = {int(doc['N']) + 1} amplitudes")
    effects = _unpairs(doc["povm"])
    povm = Povm(effects)
    meta = dict(doc.get("metadata") or {})
    return SensorSolution(
        psi, povm, int(doc["d"]),
        estimators=doc.get("estimators"),
        kind=meta.pop("kind", "povm"),
        provenance=meta.pop("provenance", "catalog"),
        name=meta.pop("name", ""),
        phi0=meta.pop("phi0", None),
        prior=meta.pop("prior", None),
        metadata=meta,
    )


def save_sensor(sol: SensorSolution, path) -> None:
    Path(path).write_text(dumps(sensor_to_dict(sol)))


def load_sensor(path) -> SensorSolution:
    return sensor_from_dict(json.loads(Path(path).read_text()))


def write_csv(path, header, rows, config: dict | None = None) -> None:
    """CSV with ``#`` comment lines echoing ``config`` before the header row."""
    lines = []
    for k, v in (config or {}).items():
        lines.append(f"# {k}: {_fmt(v)}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (float, np.floating)) and not math.isfinite(v):
        return str(float(v))
    return _fmt(v)


def read_csv(path):
    """``(config_lines, header, rows)``; rows are lists of floats."""
    comments, header, rows = [], None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(x) for x in line.split(",")])
    return comments, header, rows
