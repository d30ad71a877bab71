"""Nelder-Mead minimisation of the variational energy over nonlinear parameters.

The objective is a cubature estimate, so it is noisy in the sense that the
adaptive partition jumps as the parameters move.  Each rung of the
tolerance ladder therefore adapts one partition at the current best point
and then holds it fixed: on a fixed partition the energy is a smooth
function of the parameters and the simplex can converge cleanly.  Between
rungs the simplex is rebuilt around the best point (an oriented restart).
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .ansatz import PSI0, PSI0_HL, AnsatzParameters, expand
from .cubature import integrate_on_partition
from .errors import InvalidArgumentError, InvalidParametersError, StalledAtBarrierError
from .geometry import TriangleGeometry, build_triangle
from .hamiltonian import (EXACT_BO_HARTREE, ENERGY_COMPONENTS, IntegrationSettings,
                          _propagate, breakdown_from, integrate_densities)

__all__ = [
    "SEVEN",
    "SEVEN_PLUS_THREE",
    "TEN",
    "OptimizationStage",
    "OptimizationResult",
    "EnergyObjective",
    "minimize",
    "nelder_mead",
    "write_trace_csv",
    "hl_start",
]

log = logging.getLogger(__name__)

SEVEN, SEVEN_PLUS_THREE, TEN = "Seven", "SevenPlusThree", "Ten"
MODE_ALIASES = {"7": SEVEN, "7+3": SEVEN_PLUS_THREE, "10": TEN,
                SEVEN: SEVEN, SEVEN_PLUS_THREE: SEVEN_PLUS_THREE, TEN: TEN}

# variational floor in Ry
EXACT_BO_RY = 2.0 * EXACT_BO_HARTREE

DEFAULT_TOL_LADDER = (1e-2, 3e-3, 1e-3)
DEFAULT_EVALS_LADDER = (300_000, 1_200_000, 4_000_000)


def _mask(mode: str) -> np.ndarray:
    free = np.zeros(10, dtype=bool)
    if mode == SEVEN:
        free[:7] = True
    elif mode == SEVEN_PLUS_THREE:
        free[7:] = True
    elif mode == TEN:
        free[:] = True
    else:
        raise InvalidArgumentError(f"unknown optimisation mode {mode!r}")
    return free


def hl_start(params: AnsatzParameters, amplitude: float = 0.0, alpha_tilde: float = 0.5,
             gamma_tilde: float = 0.5) -> AnsatzParameters:
    """Attach a Heitler-London term (zero amplitude by default) to ψ₀ parameters."""
    return params.with_hl(amplitude, alpha_tilde, gamma_tilde)


@dataclass(frozen=True)
class OptimizationStage:
    mode: str
    start: AnsatzParameters
    tol_ladder: tuple = DEFAULT_TOL_LADDER
    evals_ladder: tuple = DEFAULT_EVALS_LADDER
    max_iters: int = 400
    rung_max_iters: Optional[tuple] = None

    def __post_init__(self):
        mode = MODE_ALIASES.get(self.mode)
        if mode is None:
            raise InvalidArgumentError(f"unknown optimisation mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if mode == SEVEN and self.start.variant != PSI0:
            object.__setattr__(self, "start", replace(self.start, variant=PSI0, hl_amplitude=0.0,
                                                      hl_alpha=0.0, hl_gamma=0.0))
        if mode != SEVEN and self.start.variant != PSI0_HL:
            raise InvalidArgumentError(f"mode {mode} needs a start with the Heitler-London term")
        tl = list(self.tol_ladder)
        if not tl or any(b >= a for a, b in zip(tl, tl[1:])) or any(t <= 0 for t in tl):
            raise InvalidArgumentError("tol_ladder must be positive and strictly decreasing")
        if len(self.evals_ladder) != len(tl):
            raise InvalidArgumentError("evals_ladder needs one budget per rung")

    @property
    def frozen(self) -> np.ndarray:
        """True for parameters (α₁…α₆, γ, A, α̃, γ̃) held at their start values."""
        return ~_mask(self.mode)

    def params_from(self, free_values) -> AnsatzParameters:
        v = self.start.vector()
        v[~self.frozen] = free_values
        return AnsatzParameters.from_vector(v, self.start.variant)

    def free_start(self) -> np.ndarray:
        return self.start.vector()[~self.frozen]


@dataclass
class OptimizationResult:
    best_params: AnsatzParameters
    best_energy: float
    energy_error: float
    trace: list
    objective_calls: int = 0
    breakdown: object = None


class EnergyObjective:
    """Variational energy on a partition that is re-adapted once per rung."""

    def __init__(self, geom: Optional[TriangleGeometry] = None,
                 settings: Optional[IntegrationSettings] = None):
        self.geom = geom or build_triangle(1.65)
        self.settings = settings or IntegrationSettings()
        self.partition = None
        self.rung_error = 0.0
        self.calls = 0

    def set_rung(self, params: AnsatzParameters, tol: float, max_evals: int) -> float:
        """Adapt the partition at ``params``; returns the energy error used by
        the rung-tightening rule."""
        s = replace(self.settings, max_evals=int(max_evals))
        res = integrate_densities(expand(params, self.geom), tol, s)
        self.partition = res.partition
        b = breakdown_from(res, self.geom)
        self.rung_error = b.history_error if b.history_error is not None else b.error_estimate
        log.info("rung tol=%g: %d regions, E=%.6f Ry, err=%.2e", tol, res.regions, b.total_ry,
                 self.rung_error)
        return self.rung_error

    def __call__(self, params: AnsatzParameters) -> tuple:
        self.calls += 1
        sm = self.settings.space_map()
        res = integrate_on_partition(sm.integrand(expand(params, self.geom)), self.partition,
                                     master=K.NORM, threads=self.settings.threads)
        v = res.values
        e = (v[K.KIN_GRAD] + v[K.V_NE] + v[K.V_EE]) / v[K.NORM] + 6.0 / self.geom.side_R
        return float(e), float(_propagate(v, res.errors))

    def final(self, params: AnsatzParameters, tol: float, max_evals: int):
        s = replace(self.settings, max_evals=int(max_evals))
        return breakdown_from(integrate_densities(expand(params, self.geom), tol, s), self.geom)


def _sort_key(f, x):
    return (f, tuple(x))


def _diameter(xs: np.ndarray) -> float:
    d = 0.0
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            d = max(d, float(np.linalg.norm(xs[i] - xs[j])))
    return d


def _initial_steps(x0: np.ndarray) -> np.ndarray:
    return np.maximum(0.05 * np.abs(x0), 0.02)


def nelder_mead(fun: Callable, x0, steps, *, valid: Callable = lambda x: True,
                max_iters: int = 1000, xtol: float = 1e-10, ftol: float = 0.0,
                stop: Optional[Callable] = None, on_iter: Optional[Callable] = None,
                directions: Optional[np.ndarray] = None):
    """Plain Nelder-Mead (reflect 1, expand 2, contract ½, shrink ½).

    Points failing ``valid`` get +inf and are never accepted.  Equal values
    are ordered by the lexicographically smaller vector.  Stops when the
    simplex diameter drops below ``xtol``, the value spread below ``ftol``,
    ``stop(spread, diameter)`` returns true, or after ``max_iters``.
    Returns ``(best_x, best_f, iterations, simplex, values)``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)

    def F(x):
        return fun(x) if valid(x) else math.inf

    signs = np.ones(n) if directions is None else np.where(directions < 0, -1.0, 1.0)
    xs = [x0.copy()]
    for i in range(n):
        x = x0.copy()
        x[i] += signs[i] * steps[i]
        if not valid(x):
            x[i] = x0[i] - signs[i] * steps[i]
            if not valid(x):
                raise StalledAtBarrierError(f"no valid initial simplex vertex along axis {i}")
        xs.append(x)
    xs = np.array(xs)
    fs = np.array([F(x) for x in xs])
    if not math.isfinite(fs[0]):
        raise StalledAtBarrierError("start point is outside the valid region")

    it = 0
    while True:
        order = sorted(range(n + 1), key=lambda i: _sort_key(fs[i], xs[i]))
        xs, fs = xs[order], fs[order]
        spread = float(fs[-1] - fs[0])
        diam = _diameter(xs)
        if on_iter is not None:
            on_iter(it, xs, fs, diam)
        if it >= max_iters or diam <= xtol or (math.isfinite(spread) and spread <= ftol):
            break
        if stop is not None and math.isfinite(spread) and stop(spread, diam):
            break
        it += 1
        c = xs[:-1].mean(axis=0)
        xr = c + (c - xs[-1])
        fr = F(xr)
        if fs[0] <= fr < fs[-2]:
            xs[-1], fs[-1] = xr, fr
            continue
        if fr < fs[0]:
            xe = c + 2.0 * (c - xs[-1])
            fe = F(xe)
            if fe < fr:
                xs[-1], fs[-1] = xe, fe
            else:
                xs[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = c + 0.5 * (xr - c)
            fc = F(xc)
            if fc <= fr:
                xs[-1], fs[-1] = xc, fc
                continue
        else:
            xc = c + 0.5 * (xs[-1] - c)
            fc = F(xc)
            if fc < fs[-1]:
                xs[-1], fs[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            xs[i] = xs[0] + 0.5 * (xs[i] - xs[0])
            fs[i] = F(xs[i])
    return xs[0].copy(), float(fs[0]), it, xs, fs


def _simplex_gradient(xs: np.ndarray, fs: np.ndarray) -> np.ndarray:
    dx = xs[1:] - xs[0]
    df = fs[1:] - fs[0]
    ok = np.isfinite(df)
    if ok.sum() < len(xs[0]):
        return np.zeros(len(xs[0]))
    g, *_ = np.linalg.lstsq(dx[ok], df[ok], rcond=None)
    return g


def minimize(stage: OptimizationStage, geom: Optional[TriangleGeometry] = None, *,
             objective=None, settings: Optional[IntegrationSettings] = None,
             final_evals: Optional[int] = None, xtol: float = 1e-6,
             final_ftol: float = 2e-6) -> OptimizationResult:
    """Minimise the energy over the free parameters of ``stage``.

    ``objective`` replaces the cubature energy (test hook): either a callable
    ``params -> (energy, error)`` or an object that also has
    ``set_rung(params, tol, max_evals)``.  Normalizability inequalities act as
    a barrier.  The trace lists ``(iteration, best_energy_ry,
    simplex_diameter, cubature_tol)`` with best-so-far energies.
    """
    if not stage.start.is_valid():
        raise InvalidParametersError("; ".join(stage.start.violations()))
    geom = geom or build_triangle(1.65)
    obj = objective if objective is not None else EnergyObjective(geom, settings)
    has_rungs = hasattr(obj, "set_rung")
    free0 = stage.free_start()
    steps = _initial_steps(free0)
    trace = []
    best = {"f": math.inf, "x": free0.copy()}
    total_iters = [0]
    guard_hits = [0]

    def valid(x):
        return stage.params_from(x).is_valid()

    def fun(x):
        e, err = obj(stage.params_from(x))
        if e < EXACT_BO_RY - err:
            # below the exact energy: a quadrature artefact, refuse the point
            guard_hits[0] += 1
            log.warning("energy %.6f below variational floor at %s; rejected", e, x)
            return math.inf
        return e

    x = free0.copy()
    direction = None
    n_rungs = len(stage.tol_ladder)
    caps = stage.rung_max_iters or tuple([stage.max_iters] * n_rungs)
    for r, (tol, evals) in enumerate(zip(stage.tol_ladder, stage.evals_ladder)):
        last = r == n_rungs - 1
        rung_err = obj.set_rung(stage.params_from(x), tol, evals) if has_rungs else 0.0
        rung_best = [math.inf]

        def on_iter(it, xs, fs, diam, tol=tol):
            if fs[0] < rung_best[0]:
                rung_best[0] = float(fs[0])
            if fs[0] < best["f"]:
                best["f"], best["x"] = float(fs[0]), xs[0].copy()
            total_iters[0] += 0 if it == 0 else 1
            trace.append((total_iters[0], best["f"], diam, tol))

        stop = None
        if not last:
            def stop(spread, diam, e=rung_err):
                return spread < 10.0 * e
        budget = min(caps[r], stage.max_iters - total_iters[0])
        if budget <= 0:
            break
        x, fx, _, xs, fs = nelder_mead(
            fun, x, steps, valid=valid, max_iters=budget, xtol=xtol,
            ftol=final_ftol if last else 0.0, stop=stop, on_iter=on_iter, directions=direction,
        )
        # oriented restart: size from the final simplex, signs downhill
        g = _simplex_gradient(xs, fs)
        direction = -g
        span = xs.max(axis=0) - xs.min(axis=0)
        steps = np.maximum(span, 0.1 * _initial_steps(free0))
        # the next rung re-evaluates on a new partition, so best-so-far is reset
        # to the rung value only for choosing where to restart
        best["x"] = x.copy()

    best_params = stage.params_from(x)
    if has_rungs and hasattr(obj, "final"):
        b = obj.final(best_params, stage.tol_ladder[-1], final_evals or stage.evals_ladder[-1])
        energy, err = b.total_ry, b.error_estimate
    else:
        b = None
        energy, err = obj(best_params)
    calls = getattr(obj, "calls", 0)
    return OptimizationResult(best_params, float(energy), float(err), trace, calls, b)


def write_trace_csv(trace: Sequence, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_energy_ry", "simplex_diameter", "cubature_tol"])
        for row in trace:
            w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])), repr(float(row[3]))])
