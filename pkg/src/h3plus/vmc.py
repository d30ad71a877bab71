"""Metropolis sampling of Ψ² as an independent check on the cubature.

Each walker is its own chain, seeded from the master seed, and the walkers
are run and reduced in a fixed order so that a given seed always gives the
same numbers.  Standard errors come from a blocking (rebinning) analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from . import _kernels as K
from .ansatz import ExpandedAnsatz, expand
from .errors import InvalidArgumentError, TuningError
from .geometry import TriangleGeometry, build_triangle

__all__ = ["VmcSettings", "VmcEstimate", "OBSERVABLES", "vmc_run", "blocking_error", "sample_configurations"]

OBSERVABLES = ("energy", "r12", "inv_r12", "inv_r1A", "x2", "y2", "z2", "r2", "inv_r1B", "inv_r2C")

# step size giving roughly half acceptance for the equilibrium trial functions
DEFAULT_STEP = 0.45


@dataclass(frozen=True)
class VmcSettings:
    n_walkers: int = 100
    n_steps: int = 10_000
    burn_in: int = 1_000
    step_size: float = DEFAULT_STEP
    seed: int = 20110525
    blocking: int = 10

    def __post_init__(self):
        for name in ("n_walkers", "n_steps", "burn_in", "blocking"):
            if int(getattr(self, name)) <= 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if not self.step_size > 0:
            raise InvalidArgumentError("step_size must be positive")
        if self.n_steps < self.blocking:
            raise InvalidArgumentError("n_steps must be at least one block")


@dataclass(frozen=True)
class VmcEstimate:
    mean: dict
    stderr: dict
    acceptance_rate: float
    samples: int
    block_levels: dict = field(default_factory=dict, repr=False)

    def sigma_distance(self, name: str, value: float, error: float = 0.0) -> float:
        """|mean - value| in units of the combined standard error."""
        return abs(self.mean[name] - value) / math.hypot(self.stderr[name], error)


@njit(cache=True, nogil=True)
def _observe(coef, beta, corr, P, R, x, out):
    psi, g1, g2, lap1, lap2 = K.psi_derivs(coef, beta, corr, P, x, 0.0)
    v = K.potential_at(P, x, R, 0.0)
    out[0] = -(lap1 + lap2) / psi + v
    s = 0.0
    for c in range(3):
        d = x[c] - x[3 + c]
        s += d * d
    r12 = math.sqrt(s)
    out[1] = r12
    out[2] = 1.0 / r12
    ia = np.empty(3)
    ib = np.empty(3)
    for k in range(3):
        s1 = 0.0
        s2 = 0.0
        for c in range(3):
            a = x[c] - P[k, c]
            b = x[3 + c] - P[k, c]
            s1 += a * a
            s2 += b * b
        ia[k] = 1.0 / math.sqrt(s1)
        ib[k] = 1.0 / math.sqrt(s2)
    out[3] = ia[0]
    out[4] = x[0] * x[0]
    out[5] = x[1] * x[1]
    out[6] = x[2] * x[2]
    out[7] = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    out[8] = ia[1]
    out[9] = ib[2]


@njit(cache=True, nogil=True)
def _run_walker(coef, beta, corr, P, R, seed, n_steps, burn_in, step, block, blocks_out):
    np.random.seed(seed)
    x = np.empty(6)
    for c in range(6):
        x[c] = np.random.normal()
    y = np.empty(6)
    obs = np.empty(10)
    acc_sum = np.zeros(10)
    psi = K.psi_value(coef, beta, corr, P, x)
    accepted = 0
    for it in range(burn_in + n_steps):
        for c in range(6):
            y[c] = x[c] + step * np.random.normal()
        psi_new = K.psi_value(coef, beta, corr, P, y)
        ratio = (psi_new * psi_new) / (psi * psi)
        if ratio >= 1.0 or np.random.random() < ratio:
            for c in range(6):
                x[c] = y[c]
            psi = psi_new
            if it >= burn_in:
                accepted += 1
        if it >= burn_in:
            k = it - burn_in
            _observe(coef, beta, corr, P, R, x, obs)
            for j in range(10):
                acc_sum[j] += obs[j]
            if (k + 1) % block == 0:
                b = (k + 1) // block - 1
                for j in range(10):
                    blocks_out[b, j] = acc_sum[j] / block
                    acc_sum[j] = 0.0
    return accepted


def blocking_error(series: np.ndarray, min_blocks: int = 32):
    """Standard error of the mean of correlated block means.

    ``series`` has shape ``(n_walkers, n_blocks)``.  Blocks are merged
    pairwise until the error estimate stops growing within its own
    statistical uncertainty over two further levels; the largest estimate
    in that window is returned with the list of per-level estimates.  With
    no plateau the largest estimate overall is used.
    """
    data = np.asarray(series, dtype=float)
    levels = []
    while data.shape[1] * data.shape[0] >= min_blocks and data.shape[1] >= 2:
        n = data.size
        levels.append((float(np.std(data, ddof=1) / math.sqrt(n)), n))
        m = data.shape[1] // 2
        data = 0.5 * (data[:, 0:2 * m:2] + data[:, 1:2 * m:2])
    if not levels:
        n = data.size
        return float(np.std(data, ddof=1) / math.sqrt(max(n, 1))) if n > 1 else 0.0, []
    errs = [e for e, _ in levels]
    for i in range(len(levels) - 1):
        e, n = levels[i]
        tol = 2.0 * e / math.sqrt(2.0 * (n - 1))
        nxt = errs[i + 1:i + 3]
        if len(nxt) == 2 and all(x - e <= tol for x in nxt):
            return max(errs[i:i + 3]), errs
    return max(errs), errs


def _walker_seeds(seed: int, n: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed))
    return np.array([s.generate_state(1, dtype=np.uint32)[0] for s in ss.spawn(n)], dtype=np.int64)


def vmc_run(params, geom: Optional[TriangleGeometry] = None, settings: VmcSettings = VmcSettings(),
            observables: Sequence[str] = OBSERVABLES) -> VmcEstimate:
    """Estimate ⟨E_L⟩ (Ry) and the requested observables under Ψ²."""
    geom = geom or build_triangle(1.65)
    ansatz = params if isinstance(params, ExpandedAnsatz) else expand(params, geom)
    unknown = [o for o in observables if o not in OBSERVABLES]
    if unknown:
        raise InvalidArgumentError(f"unknown observables {unknown}")
    coef, beta, corr = ansatz.arrays()
    P = np.ascontiguousarray(ansatz.geometry.proton_positions)
    R = float(ansatz.geometry.side_R)
    s = settings
    n_blocks = s.n_steps // s.blocking
    steps = n_blocks * s.blocking
    blocks = np.zeros((s.n_walkers, n_blocks, 10))
    accepted = 0
    for w, seed in enumerate(_walker_seeds(s.seed, s.n_walkers)):
        accepted += _run_walker(coef, beta, corr, P, R, int(seed), steps, s.burn_in,
                                float(s.step_size), s.blocking, blocks[w])
    rate = accepted / (s.n_walkers * steps)
    if rate < 0.01 or rate > 0.99:
        raise TuningError(f"acceptance rate {rate:.4f} outside [0.01, 0.99]; adjust step_size", rate)
    mean, err, lv = {}, {}, {}
    for j, name in enumerate(OBSERVABLES):
        if name not in observables:
            continue
        mean[name] = float(blocks[:, :, j].mean())
        err[name], lv[name] = blocking_error(blocks[:, :, j])
    return VmcEstimate(mean, err, float(rate), s.n_walkers * steps, lv)


@njit(cache=True, nogil=True)
def _draw(coef, beta, corr, P, seed, n, thin, burn_in, step, out):
    np.random.seed(seed)
    x = np.empty(6)
    for c in range(6):
        x[c] = np.random.normal()
    y = np.empty(6)
    psi = K.psi_value(coef, beta, corr, P, x)
    for it in range(burn_in + n * thin):
        for c in range(6):
            y[c] = x[c] + step * np.random.normal()
        pn = K.psi_value(coef, beta, corr, P, y)
        r = (pn * pn) / (psi * psi)
        if r >= 1.0 or np.random.random() < r:
            for c in range(6):
                x[c] = y[c]
            psi = pn
        if it >= burn_in and (it - burn_in + 1) % thin == 0:
            k = (it - burn_in + 1) // thin - 1
            for c in range(6):
                out[k, c] = x[c]


def sample_configurations(ansatz: ExpandedAnsatz, n: int, seed: int = 0, thin: int = 10,
                          burn_in: int = 1000, step_size: float = DEFAULT_STEP) -> np.ndarray:
    """``(n, 6)`` configurations distributed as Ψ² (single thinned chain)."""
    coef, beta, corr = ansatz.arrays()
    out = np.empty((n, 6))
    _draw(coef, beta, corr, np.ascontiguousarray(ansatz.geometry.proton_positions),
          int(seed), int(n), int(thin), int(burn_in), float(step_size), out)
    return out
