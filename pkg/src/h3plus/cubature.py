"""Adaptive cubature over hyperrectangles with the Genz-Malik degree-7/5 pair.

The integrand is vector valued: ``f(points)`` receives an ``(n, ndim)`` array
and returns ``(n,)`` or ``(n, ncomp)``.  All components are integrated on one
shared partition so that ratios of components have correlated errors.

Region bookkeeping is index based.  Children are appended in creation order,
the refinement queue breaks error ties by lower index, and totals are summed
over active regions in index order, so the result does not depend on how the
work was spread over threads.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidArgumentError, PoisonedRegionError

__all__ = [
    "GenzMalikRule",
    "Region",
    "CubatureResult",
    "transform",
    "genz_malik_apply",
    "adaptive_integrate",
    "integrate_all_space",
    "integrate_on_partition",
    "write_regions_csv",
]

DEFAULT_SCALE = 1.5

_LAM2 = math.sqrt(9.0 / 70.0)
_LAM3 = math.sqrt(9.0 / 10.0)
_LAM4 = math.sqrt(9.0 / 10.0)
_LAM5 = math.sqrt(9.0 / 19.0)


class GenzMalikRule:
    """Nodes and weights of the embedded Genz-Malik rule on ``[-1, 1]^ndim``.

    Node layout: centre, ``±lam2·e_i``, ``±lam3·e_i``, ``(±lam4, ±lam4)`` pairs,
    then the ``2^ndim`` corners ``(±lam5, ..., ±lam5)``.  Weights are
    normalised to the reference cube volume ``2^ndim``.
    """

    def __init__(self, ndim: int):
        if ndim < 2:
            raise InvalidArgumentError("Genz-Malik rule needs ndim >= 2")
        d = ndim
        self.ndim = d
        nodes = [np.zeros(d)]
        ax2, ax3 = [], []
        for i in range(d):
            for s in (1.0, -1.0):
                p = np.zeros(d)
                p[i] = s * _LAM2
                ax2.append(p)
        for i in range(d):
            for s in (1.0, -1.0):
                p = np.zeros(d)
                p[i] = s * _LAM3
                ax3.append(p)
        pairs = []
        for i, j in itertools.combinations(range(d), 2):
            for si, sj in itertools.product((1.0, -1.0), repeat=2):
                p = np.zeros(d)
                p[i] = si * _LAM4
                p[j] = sj * _LAM4
                pairs.append(p)
        corners = [np.array(s) * _LAM5 for s in itertools.product((1.0, -1.0), repeat=d)]
        nodes = np.array(nodes + ax2 + ax3 + pairs + corners)
        self.nodes = nodes
        self.npoints = len(nodes)

        n2, n4, n5 = 2 * d, 2 * d * (d - 1), 2**d
        w7 = np.concatenate([
            [(12824 - 9120 * d + 400 * d * d) / 19683],
            np.full(n2, 980 / 6561),
            np.full(n2, (1820 - 400 * d) / 19683),
            np.full(n4, 200 / 19683),
            np.full(n5, 6859 / 19683 / 2**d),
        ])
        w5 = np.concatenate([
            [(729 - 950 * d + 50 * d * d) / 729],
            np.full(n2, 245 / 486),
            np.full(n2, (265 - 100 * d) / 1458),
            np.full(n4, 25 / 729),
            np.zeros(n5),
        ])
        self.w7 = w7 * 2.0**d
        self.w5 = w5 * 2.0**d
        # rows (+lam2, -lam2, +lam3, -lam3) per axis for the fourth difference
        self._diff_idx = np.array(
            [[1 + 2 * i, 2 + 2 * i, 1 + n2 + 2 * i, 2 + n2 + 2 * i] for i in range(d)]
        )

    def points(self, center: np.ndarray, halfwidth: np.ndarray) -> np.ndarray:
        """Nodes mapped into regions; shape ``(nreg, npoints, ndim)``."""
        center = np.atleast_2d(center)
        halfwidth = np.atleast_2d(halfwidth)
        return center[:, None, :] + halfwidth[:, None, :] * self.nodes[None, :, :]

    def combine(self, fvals: np.ndarray, halfwidth: np.ndarray, master: int = 0):
        """Reduce node values ``(nreg, npoints, ncomp)`` to estimates.

        Returns ``(values, errors, split_axis)`` with shapes ``(nreg, ncomp)``,
        ``(nreg, ncomp)``, ``(nreg,)``.
        """
        vol = np.prod(np.atleast_2d(halfwidth), axis=1)
        hi = (fvals * self.w7[None, :, None]).sum(axis=1) * vol[:, None]
        lo = (fvals * self.w5[None, :, None]).sum(axis=1) * vol[:, None]
        err = np.abs(hi - lo)

        fm = fvals[:, :, master]
        f0 = fm[:, 0]
        idx = self._diff_idx
        d2 = fm[:, idx[:, 0]] + fm[:, idx[:, 1]] - 2.0 * f0[:, None]
        d3 = fm[:, idx[:, 2]] + fm[:, idx[:, 3]] - 2.0 * f0[:, None]
        diff = np.abs(d2 - (_LAM2**2 / _LAM3**2) * d3)
        axis = np.argmax(diff, axis=1)
        flat = diff.max(axis=1) <= 1e-14 * np.abs(f0)
        if np.any(flat):
            axis[flat] = np.argmax(np.atleast_2d(halfwidth)[flat], axis=1)
        return hi, err, axis


@lru_cache(maxsize=None)
def _rule(ndim: int) -> GenzMalikRule:
    return GenzMalikRule(ndim)


@dataclass
class Region:
    center: np.ndarray
    halfwidth: np.ndarray
    value_estimate: np.ndarray
    error_estimate: np.ndarray
    split_axis: int
    index: int = 0


@dataclass
class CubatureResult:
    values: np.ndarray
    errors: np.ndarray
    evaluations: int
    regions: int
    converged: bool
    final_regions: Optional[list] = field(default=None, repr=False)
    partition: Optional[tuple] = field(default=None, repr=False)
    history: list = field(default_factory=list, repr=False)

    def history_error(self) -> Optional[np.ndarray]:
        """Change of each component since the run had half its evaluations.

        A convergence-history estimate, much less pessimistic than the
        summed |I7-I5| for smooth integrands; ``None`` when the run was
        too short to have such a checkpoint.
        """
        past = [v for n, v in self.history if n <= self.evaluations // 2]
        if not past:
            return None
        return np.abs(self.values - past[-1])

    def ratio(self, num: int, den: int = 0) -> tuple[float, float]:
        """Quotient of two components with first-order error propagation."""
        q = self.values[num] / self.values[den]
        e = (self.errors[num] + abs(q) * self.errors[den]) / abs(self.values[den])
        return float(q), float(e)


def transform(u, scale: float = DEFAULT_SCALE):
    """Map the open cube ``(-1, 1)^d`` onto ``R^d`` coordinate-wise.

    ``x = s·u/(1-u²)`` with Jacobian ``s·(1+u²)/(1-u²)²`` per coordinate.
    Works on a single point or on an ``(n, d)`` batch.
    """
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) >= 1.0) or not np.all(np.isfinite(u)):
        raise DomainError("transform needs every |u_k| < 1")
    den = 1.0 - u * u
    x = scale * u / den
    jac = np.prod(scale * (1.0 + u * u) / (den * den), axis=-1)
    return x, jac


def _as_2d_values(fv, npts: int) -> np.ndarray:
    fv = np.asarray(fv, dtype=float)
    if fv.ndim == 1:
        fv = fv[:, None]
    if fv.shape[0] != npts:
        raise InvalidArgumentError(
            f"integrand returned {fv.shape[0]} rows for {npts} points"
        )
    return fv


def _evaluate(f, rule, centers, halfwidths, master, threads, chunk):
    """Apply the rule to many regions; chunks are fixed size so results do
    not depend on ``threads``."""
    nreg, d = centers.shape
    starts = list(range(0, nreg, chunk))

    def work(s):
        c, h = centers[s:s + chunk], halfwidths[s:s + chunk]
        pts = rule.points(c, h).reshape(-1, d)
        fv = _as_2d_values(f(pts), len(pts))
        bad = ~np.all(np.isfinite(fv), axis=1)
        if np.any(bad):
            k = int(np.argmax(bad))
            r = k // rule.npoints
            raise PoisonedRegionError(
                f"non-finite integrand at {pts[k].tolist()}",
                point=pts[k].copy(),
                region=(c[r].copy(), h[r].copy()),
            )
        fv = fv.reshape(len(c), rule.npoints, -1)
        return rule.combine(fv, h, master)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    vals = np.concatenate([p[0] for p in parts])
    errs = np.concatenate([p[1] for p in parts])
    axes = np.concatenate([p[2] for p in parts])
    return vals, errs, axes


def genz_malik_apply(f: Callable, region, master: int = 0):
    """Apply the rule once on a region given as ``(center, halfwidth)`` or
    a :class:`Region`.

    Returns ``(values, errors, split_axis)``.
    """
    if isinstance(region, Region):
        c, h = region.center, region.halfwidth
    else:
        c, h = region
    c = np.asarray(c, dtype=float)
    h = np.asarray(h, dtype=float)
    if c.shape != h.shape or c.ndim != 1 or np.any(h <= 0):
        raise InvalidArgumentError("region needs matching 1-D center/halfwidth, halfwidth > 0")
    rule = _rule(len(c))
    v, e, a = _evaluate(f, rule, c[None], h[None], master, 1, 1)
    return v[0], e[0], int(a[0])


def _initial_grid(lower, upper, divisions):
    d = len(lower)
    divisions = np.broadcast_to(np.asarray(divisions, dtype=int), (d,))
    edges = [np.linspace(lower[k], upper[k], divisions[k] + 1) for k in range(d)]
    mids = [0.5 * (e[1:] + e[:-1]) for e in edges]
    halves = [0.5 * (e[1:] - e[:-1]) for e in edges]
    c = np.array(list(itertools.product(*mids)), dtype=float).reshape(-1, d)
    h = np.array(list(itertools.product(*halves)), dtype=float).reshape(-1, d)
    return c, h


def adaptive_integrate(
    f: Callable,
    lower: Sequence[float],
    upper: Sequence[float],
    tol_rel: float = 1e-5,
    max_evals: int = 10_000_000,
    *,
    tol_abs: float = 0.0,
    master: int = 0,
    priority: str = "master",
    threads: int = 1,
    batch_fraction: float = 0.1,
    max_batch: int = 4096,
    chunk: int = 512,
    initial_divisions=1,
    keep_regions: bool = False,
    check: Optional[Sequence[int]] = None,
) -> CubatureResult:
    """Integrate a vector integrand over the box ``[lower, upper]``.

    Regions are refined worst-first, where "worst" is the error of component
    ``master`` (``priority="master"``) or the error summed over components
    relative to each component's magnitude (``priority="relative"``).  Each
    round bisects up to ``batch_fraction`` of the active regions, at most
    ``max_batch``; ``batch_fraction=0`` refines one region per round.

    Stops once every component satisfies ``err <= max(tol_abs, tol_rel·|value|)``
    or the evaluation budget is exhausted (``converged=False``).  ``check``
    restricts the stopping test (and the ``"relative"`` priority) to a subset
    of components.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not tol_rel > 0 and not tol_abs > 0:
        raise InvalidArgumentError("need tol_rel > 0 or tol_abs > 0")
    if lower.shape != upper.shape or lower.ndim != 1 or np.any(upper <= lower):
        raise InvalidArgumentError("need lower < upper componentwise")
    d = len(lower)
    rule = _rule(d)
    npts = rule.npoints
    if max_evals < npts:
        raise InvalidArgumentError(f"max_evals must be >= {npts}")
    if priority not in ("master", "relative"):
        raise InvalidArgumentError(f"unknown priority {priority!r}")

    c0, h0 = _initial_grid(lower, upper, initial_divisions)
    if len(c0) * npts > max_evals:
        raise InvalidArgumentError("initial grid already exceeds max_evals")
    v0, e0, a0 = _evaluate(f, rule, c0, h0, master, threads, chunk)
    sel = np.arange(v0.shape[1]) if check is None else np.asarray(check, dtype=int)

    cap = max(1024, 4 * len(c0))
    centers = np.empty((cap, d))
    halves = np.empty((cap, d))
    vals = np.empty((cap, v0.shape[1]))
    errs = np.empty((cap, v0.shape[1]))
    axes = np.empty(cap, dtype=np.int64)
    active = np.zeros(cap, dtype=bool)
    n = len(c0)
    centers[:n], halves[:n], vals[:n], errs[:n], axes[:n] = c0, h0, v0, e0, a0
    active[:n] = True
    evaluations = n * npts

    def totals():
        m = active[:n]
        return vals[:n][m].sum(axis=0), errs[:n][m].sum(axis=0)

    total, total_err = totals()
    history = [(evaluations, total.copy())]
    converged = False
    while True:
        bound = np.maximum(tol_abs, tol_rel * np.abs(total))
        if np.all((total_err <= bound)[sel]):
            converged = True
            break
        remaining = (max_evals - evaluations) // (2 * npts)
        if remaining < 1:
            break
        idx = np.flatnonzero(active[:n])
        if priority == "master":
            key = errs[idx, master]
        else:
            key = (errs[idx][:, sel] / np.maximum(np.abs(total[sel]), 1e-300)).sum(axis=1)
        k = max(1, int(batch_fraction * len(idx)))
        k = min(k, max_batch, remaining, len(idx))
        # descending error, ties broken by lower region index
        order = np.lexsort((idx, -key))[:k]
        pick = idx[order]

        ax = axes[pick]
        hc = halves[pick].copy()
        hc[np.arange(k), ax] *= 0.5
        shift = np.zeros_like(hc)
        shift[np.arange(k), ax] = hc[np.arange(k), ax]
        cl = centers[pick] - shift
        cr = centers[pick] + shift
        # children of one parent sit next to each other
        cc = np.empty((2 * k, d))
        cc[0::2], cc[1::2] = cl, cr
        hh = np.repeat(hc, 2, axis=0)
        nv, ne, na = _evaluate(f, rule, cc, hh, master, threads, chunk)
        evaluations += 2 * k * npts

        if n + 2 * k > cap:
            cap = max(2 * cap, n + 2 * k)
            centers = _grow(centers, cap)
            halves = _grow(halves, cap)
            vals = _grow(vals, cap)
            errs = _grow(errs, cap)
            axes = _grow(axes, cap)
            active = _grow(active, cap)
        sl = slice(n, n + 2 * k)
        centers[sl], halves[sl], vals[sl], errs[sl], axes[sl] = cc, hh, nv, ne, na
        active[sl] = True
        active[pick] = False
        n += 2 * k
        total, total_err = totals()
        history.append((evaluations, total.copy()))

    final = None
    if keep_regions:
        idx = np.flatnonzero(active[:n])
        final = [
            Region(centers[i].copy(), halves[i].copy(), vals[i].copy(),
                   errs[i].copy(), int(axes[i]), int(i))
            for i in idx
        ]
    m = active[:n]
    return CubatureResult(
        values=total,
        errors=total_err,
        evaluations=int(evaluations),
        regions=int(m.sum()),
        converged=converged,
        final_regions=final,
        partition=(centers[:n][m].copy(), halves[:n][m].copy()),
        history=history,
    )


def integrate_on_partition(f: Callable, partition, *, master: int = 0, threads: int = 1,
                           chunk: int = 512) -> CubatureResult:
    """Apply the rule on a fixed set of regions, e.g. ``result.partition``
    from an earlier adaptive run.

    With the partition held fixed the estimate is a smooth function of any
    parameters of ``f``, which is what a simplex search over noisy
    objectives needs.
    """
    centers, halves = (np.asarray(a, dtype=float) for a in partition)
    rule = _rule(centers.shape[1])
    v, e, _ = _evaluate(f, rule, centers, halves, master, threads, chunk)
    return CubatureResult(
        values=v.sum(axis=0),
        errors=e.sum(axis=0),
        evaluations=int(len(centers) * rule.npoints),
        regions=int(len(centers)),
        converged=True,
        partition=(centers, halves),
    )


def _grow(a: np.ndarray, cap: int) -> np.ndarray:
    out = np.zeros((cap,) + a.shape[1:], dtype=a.dtype)
    out[: len(a)] = a
    return out


def integrate_all_space(f: Callable, ndim: int, tol_rel: float = 1e-6,
                        max_evals: int = 10_000_000, scale: float = DEFAULT_SCALE,
                        **kw) -> CubatureResult:
    """Integrate ``f(x)`` over ``R^ndim`` through :func:`transform`."""

    def g(u):
        x, jac = transform(u, scale)
        fv = np.asarray(f(x), dtype=float)
        return fv * (jac if fv.ndim == 1 else jac[:, None])

    return adaptive_integrate(g, -np.ones(ndim), np.ones(ndim), tol_rel, max_evals, **kw)


def write_regions_csv(result: CubatureResult, path) -> None:
    """Dump the final partition (needs ``keep_regions=True``)."""
    if result.final_regions is None:
        raise InvalidArgumentError("result has no regions; integrate with keep_regions=True")
    regions = result.final_regions
    d = len(regions[0].center) if regions else 0
    ncomp = len(regions[0].error_estimate) if regions else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index"] + [f"center_{k}" for k in range(d)]
                   + [f"halfwidth_{k}" for k in range(d)]
                   + [f"error_{k}" for k in range(ncomp)])
        for r in regions:
            w.writerow([r.index, *r.center.tolist(), *r.halfwidth.tolist(),
                        *r.error_estimate.tolist()])
