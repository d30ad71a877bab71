"""Coulomb Hamiltonian in Rydberg form, local energy and the energy functional.

    H = Σⱼ pⱼ² − Σⱼκ 2/r_jκ + 2/r₁₂ + 6/R      (energies in Ry)

The variational energy is assembled from integrals of Ψ², |∇₁Ψ|²+|∇₂Ψ|²
(kinetic energy after integration by parts), the nuclear-attraction and
electron-repulsion densities, all computed on one shared cubature partition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .ansatz import AnsatzParameters, ExpandedAnsatz, expand
from .cubature import CubatureResult, adaptive_integrate
from .errors import InvalidArgumentError, SingularConfigurationError
from .geometry import TriangleGeometry, as_points, build_triangle, distances
from .space import SpaceMap

__all__ = [
    "EnergyBreakdown",
    "IntegrationSettings",
    "DENSITY_NAMES",
    "potential",
    "local_energy",
    "energy_integrand",
    "integrate_densities",
    "variational_energy",
    "breakdown_from",
    "local_energy_report",
]

# exact Born-Oppenheimer ground state at R = 1.65 (ECSG, 1000 terms), hartree
EXACT_BO_HARTREE = -1.34383562502

# components entering the Rayleigh quotient
ENERGY_COMPONENTS = (K.NORM, K.KIN_GRAD, K.V_NE, K.V_EE)

DENSITY_NAMES = (
    "norm", "kinetic_grad", "nuclear_attraction", "ee_repulsion", "kinetic_lap",
    "r12", "inv_r12", "inv_r1A", "x2", "y2", "z2", "r2", "inv_r1B", "inv_r2C",
)


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    nuclear_attraction: float
    ee_repulsion: float
    nn_repulsion: float
    total_ry: float
    total_hartree: float
    norm: float
    error_estimate: float
    converged: bool = True
    evaluations: int = 0
    kinetic_laplacian: Optional[float] = None
    kinetic_laplacian_error: Optional[float] = None
    history_error: Optional[float] = None

    @property
    def error_hartree(self) -> float:
        return self.error_estimate / 2.0

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["error_hartree"] = self.error_hartree
        return d


@dataclass(frozen=True)
class IntegrationSettings:
    """Knobs for the six-dimensional cubature of the energy functional.

    The |I7-I5| error estimate is conservative by one to two orders of
    magnitude for these integrands, so in practice ``max_evals`` rather
    than ``tol`` decides when a run stops.
    """

    max_evals: int = 4_000_000
    threads: int = 1
    scale_nuclear: float = 1.0
    scale_ee: float = 1.5
    reduced: bool = True
    priority: str = "master"
    batch_fraction: float = 0.1
    initial_divisions: tuple = (1, 1, 1, 1, 1, 1)
    keep_regions: bool = False

    def space_map(self) -> SpaceMap:
        return SpaceMap(self.reduced, self.scale_nuclear, self.scale_ee)


def potential(geom: TriangleGeometry, config):
    """Coulomb potential in Ry; raises on an exact coalescence."""
    d = distances(geom, config)
    if np.any(d.r1 == 0) or np.any(d.r2 == 0) or np.any(d.r12 == 0):
        raise SingularConfigurationError("coalescence: potential is infinite")
    v = (-2.0 * (1.0 / d.r1).sum(axis=-1) - 2.0 * (1.0 / d.r2).sum(axis=-1)
         + 2.0 / d.r12 + 6.0 / geom.side_R)
    return float(v) if np.ndim(v) == 0 else v


def local_energy(ansatz: ExpandedAnsatz, geom: Optional[TriangleGeometry], config):
    """``HΨ/Ψ`` in Ry."""
    geom = geom or ansatz.geometry
    pts = as_points(config)
    flat = np.ascontiguousarray(pts.reshape(-1, 6))
    v = np.atleast_1d(potential(geom, flat))
    coef, beta, corr = ansatz.arrays()
    psi, _, _, lap = K.derivs_batch(coef, beta, corr, geom.proton_positions, flat, 0.0)
    if np.any(psi == 0):
        raise SingularConfigurationError("wavefunction node: local energy undefined")
    el = -(lap[:, 0] + lap[:, 1]) / psi + v
    return float(el[0]) if pts.ndim == 1 else el.reshape(pts.shape[:-1])


def energy_integrand(ansatz: ExpandedAnsatz, geom: Optional[TriangleGeometry], point6d) -> dict:
    """All density components at Cartesian configuration(s).

    Returns a dict keyed by :data:`DENSITY_NAMES`: ``norm`` is Ψ²,
    ``kinetic_grad`` is |∇₁Ψ|²+|∇₂Ψ|², ``nuclear_attraction`` and
    ``ee_repulsion`` are the potential pieces times Ψ² (Ry), ``kinetic_lap``
    is −Ψ(Δ₁+Δ₂)Ψ, the rest are observables times Ψ².
    """
    geom = geom or ansatz.geometry
    pts = as_points(point6d)
    flat = np.ascontiguousarray(pts.reshape(-1, 6))
    coef, beta, corr = ansatz.arrays()
    out = K.densities_batch(coef, beta, corr, geom.proton_positions, flat, K.CLAMP)
    shape = pts.shape[:-1]
    res = {}
    for i, name in enumerate(DENSITY_NAMES):
        col = out[:, i].reshape(shape)
        res[name] = float(col) if shape == () else col
    res["potential"] = res["nuclear_attraction"] + res["ee_repulsion"] + res["norm"] * 6.0 / geom.side_R
    return res


def integrate_densities(ansatz: ExpandedAnsatz, tol: float = 1e-5,
                        settings: Optional[IntegrationSettings] = None,
                        check=ENERGY_COMPONENTS) -> CubatureResult:
    """Integrate every density component over configuration space at once.

    ``tol`` is the relative tolerance required of the components listed in
    ``check`` (``None`` means all of them).
    """
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    s = settings or IntegrationSettings()
    sm = s.space_map()
    return adaptive_integrate(
        sm.integrand(ansatz), sm.lower, sm.upper, tol, s.max_evals,
        master=K.NORM, priority=s.priority, threads=s.threads,
        batch_fraction=s.batch_fraction, initial_divisions=s.initial_divisions,
        keep_regions=s.keep_regions, check=check,
    )


def _propagate(v, e):
    n = v[K.NORM]
    elec = (v[K.KIN_GRAD] + v[K.V_NE] + v[K.V_EE]) / n
    return (e[K.KIN_GRAD] + e[K.V_NE] + e[K.V_EE]) / abs(n) + abs(elec) * e[K.NORM] / abs(n)


def breakdown_from(result: CubatureResult, geom: TriangleGeometry) -> EnergyBreakdown:
    v, e = result.values, result.errors
    n = v[K.NORM]
    kin = v[K.KIN_GRAD] / n
    vne = v[K.V_NE] / n
    vee = v[K.V_EE] / n
    vnn = 6.0 / geom.side_R
    total = kin + vne + vee + vnn
    err = _propagate(v, e)
    hist = result.history_error()
    klap = v[K.KIN_LAP] / n
    klap_err = e[K.KIN_LAP] / abs(n) + abs(klap) * e[K.NORM] / abs(n)
    return EnergyBreakdown(
        kinetic=float(kin), nuclear_attraction=float(vne), ee_repulsion=float(vee),
        nn_repulsion=vnn, total_ry=float(total), total_hartree=float(total) / 2.0,
        norm=float(n), error_estimate=float(err), converged=bool(result.converged),
        evaluations=result.evaluations, kinetic_laplacian=float(klap),
        kinetic_laplacian_error=float(klap_err),
        history_error=None if hist is None else float(_propagate(v, hist)),
    )


def variational_energy(params, geom: Optional[TriangleGeometry] = None, tol: float = 1e-5,
                       settings: Optional[IntegrationSettings] = None,
                       return_result: bool = False):
    """Rayleigh quotient ⟨Ψ|H|Ψ⟩/⟨Ψ|Ψ⟩ in Ry with a first-order error estimate.

    ``params`` may be :class:`AnsatzParameters` or an already expanded
    ansatz.  An unmet tolerance is reported through ``converged=False``.
    """
    geom = geom or build_triangle(1.65)
    ansatz = params if isinstance(params, ExpandedAnsatz) else expand(params, geom)
    res = integrate_densities(ansatz, tol, settings)
    out = breakdown_from(res, ansatz.geometry)
    return (out, res) if return_result else out


def local_energy_report(ansatz: ExpandedAnsatz, samples, reference: Optional[float] = None) -> dict:
    """Spread of the local energy over configurations drawn from Ψ².

    A constant local energy would mean Ψ is exact; the variance measures
    how far the trial function is from that.  ``reference`` defaults to
    the sample mean.
    """
    el = np.asarray(local_energy(ansatz, None, samples))
    ref = float(np.mean(el)) if reference is None else float(reference)
    dev = np.abs(el - ref)
    return {
        "mean": float(np.mean(el)),
        "variance": float(np.var(el, ddof=1)),
        "max_abs_deviation": float(dev.max()),
        "mean_abs_deviation": float(dev.mean()),
        "samples": int(el.size),
    }
