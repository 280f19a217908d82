"""Sensor container shared by the catalog, the optimizer and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .info import Povm
from .spin import make_spin_system


@dataclass(eq=False)
class SensorSolution:
    """Input state, measurement and single-shot estimators of a sensor.

    Attributes
    ----------
    psi : ndarray
        Input state (descending-m ordering).
    povm : Povm
        Measurement.
    d : int
        Number of encoded phases.
    estimators : ndarray or None
        One phase vector per outcome, shape ``(L, d)``.
    kind : str
        ``"povm"`` or ``"projective"``.
    provenance : str
        ``"catalog"``, ``"optimized"`` or ``"circuit"``.
    """

    psi: np.ndarray
    povm: Povm
    d: int
    estimators: Optional[np.ndarray] = None
    kind: str = "povm"
    provenance: str = "catalog"
    name: str = ""
    phi0: Optional[np.ndarray] = None
    prior: Optional[Any] = None
    cost_report: Optional[Any] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        norm = np.linalg.norm(self.psi)
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"input state is not normalized (norm {norm:.15g})")
        if self.povm.dim != self.psi.size:
            raise ValueError("state and POVM dimensions differ")
        if self.d not in (1, 2, 3):
            raise ValueError("d must be 1, 2 or 3")
        if self.phi0 is None:
            self.phi0 = np.zeros(self.d)
        self.phi0 = np.asarray(self.phi0, dtype=float)
        if self.estimators is not None:
            self.estimators = np.asarray(self.estimators, dtype=float).reshape(len(self.povm), self.d)

    @property
    def system(self):
        return make_spin_system(self.psi.size - 1)

    @property
    def N(self) -> int:
        return self.psi.size - 1

    @property
    def effects(self) -> np.ndarray:
        return self.povm.effects
