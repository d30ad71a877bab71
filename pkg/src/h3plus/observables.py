"""Expectation values of geometric observables under Ψ².

Every observable is integrated together with Ψ² on one adaptive partition,
so ratios share their quadrature error and the identity
⟨r²⟩ = ⟨x²⟩ + ⟨y²⟩ + ⟨z²⟩ holds to rounding.  One-electron quantities
refer to electron 1 and proton A, with coordinates measured from the
centre of the triangle.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels as K
from .ansatz import ExpandedAnsatz, expand
from .hamiltonian import IntegrationSettings, breakdown_from, integrate_densities
from .geometry import TriangleGeometry, build_triangle

__all__ = ["ObservableSet", "SymmetryReport", "expectation_values", "symmetry_report", "OBSERVABLE_NAMES"]

OBSERVABLE_NAMES = ("r12_mean", "inv_r12", "inv_r1A", "x2", "y2", "z2", "r2")

_INDEX = {
    "r12_mean": K.R12, "inv_r12": K.INV_R12, "inv_r1A": K.INV_R1A, "x2": K.X2,
    "y2": K.Y2, "z2": K.Z2, "r2": K.RR2, "inv_r1B": K.INV_R1B, "inv_r2C": K.INV_R2C,
}


def _ratio(v, e, i):
    n = v[K.NORM]
    q = v[i] / n
    return float(q), float(e[i] / abs(n) + abs(q) * e[K.NORM] / abs(n))


@dataclass(frozen=True)
class SymmetryReport:
    """Quantities that D3h and electron exchange force to be equal, each
    computed without using that symmetry, with their spread."""
    inv_r1A: tuple
    inv_r1B: tuple
    inv_r2C: tuple
    x2: tuple
    y2: tuple
    evaluations: int

    def max_deviation_sigma(self) -> float:
        """Largest disagreement in units of the combined error estimate."""
        worst = 0.0
        pairs = [(self.inv_r1A, self.inv_r1B), (self.inv_r1A, self.inv_r2C),
                 (self.inv_r1B, self.inv_r2C), (self.x2, self.y2)]
        for (a, ea), (b, eb) in pairs:
            worst = max(worst, abs(a - b) / max(ea + eb, 1e-300))
        return worst

    def as_dict(self) -> dict:
        d = {k: {"value": getattr(self, k)[0], "error": getattr(self, k)[1]}
             for k in ("inv_r1A", "inv_r1B", "inv_r2C", "x2", "y2")}
        d["evaluations"] = self.evaluations
        d["max_deviation_sigma"] = self.max_deviation_sigma()
        return d


@dataclass(frozen=True)
class ObservableSet:
    """Expectation values (bohr / inverse bohr / bohr²) with
    quadrature error estimates in ``errors``."""
    r12_mean: float
    inv_r12: float
    inv_r1A: float
    x2: float
    y2: float
    z2: float
    r2: float
    errors: dict
    converged: bool
    evaluations: int
    energy_ry: float
    energy_error_ry: float
    symmetry: Optional[SymmetryReport] = None

    def additivity_residual(self) -> float:
        """Relative size of ⟨r²⟩ − (⟨x²⟩+⟨y²⟩+⟨z²⟩)."""
        return abs(self.r2 - (self.x2 + self.y2 + self.z2)) / abs(self.r2)

    def as_dict(self) -> dict:
        d = {k: {"value": getattr(self, k), "error": self.errors[k]} for k in OBSERVABLE_NAMES}
        d["energy_ry"] = {"value": self.energy_ry, "error": self.energy_error_ry}
        d["additivity_residual"] = self.additivity_residual()
        d["converged"] = self.converged
        d["evaluations"] = self.evaluations
        if self.symmetry is not None:
            d["symmetry"] = self.symmetry.as_dict()
        return d


def symmetry_report(ansatz: ExpandedAnsatz, tol: float, settings: IntegrationSettings) -> SymmetryReport:
    """Integrate over the full space, without the reduction to one
    symmetry-unique cell, so that symmetry-related observables come out of
    genuinely different parts of the partition."""
    s = replace(settings, reduced=False)
    res = integrate_densities(ansatz, tol, s, check=None)
    v, e = res.values, res.errors
    return SymmetryReport(
        inv_r1A=_ratio(v, e, K.INV_R1A), inv_r1B=_ratio(v, e, K.INV_R1B),
        inv_r2C=_ratio(v, e, K.INV_R2C), x2=_ratio(v, e, K.X2), y2=_ratio(v, e, K.Y2),
        evaluations=res.evaluations,
    )


def expectation_values(params, geom: Optional[TriangleGeometry] = None, tol: float = 1e-5,
                       settings: Optional[IntegrationSettings] = None, *,
                       symmetry_evals: Optional[int] = 0) -> ObservableSet:
    """⟨O⟩ = ∫OΨ²/∫Ψ² for the standard geometric observables.

    The tolerance applies to every component.  ``symmetry_evals`` > 0 also
    runs :func:`symmetry_report` with that evaluation budget.
    """
    geom = geom or build_triangle(1.65)
    ansatz = params if isinstance(params, ExpandedAnsatz) else expand(params, geom)
    s = settings or IntegrationSettings()
    res = integrate_densities(ansatz, tol, s, check=None)
    v, e = res.values, res.errors
    vals, errs = {}, {}
    for name in OBSERVABLE_NAMES:
        vals[name], errs[name] = _ratio(v, e, _INDEX[name])
    b = breakdown_from(res, ansatz.geometry)
    sym = None
    if symmetry_evals:
        sym = symmetry_report(ansatz, tol, replace(s, max_evals=int(symmetry_evals)))
    return ObservableSet(**vals, errors=errs, converged=bool(res.converged),
                         evaluations=res.evaluations, energy_ry=b.total_ry,
                         energy_error_ry=b.error_estimate, symmetry=sym)
