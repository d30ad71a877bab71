"""Map from a 6-D integration box onto two-electron configuration space.

Each electron is written in spherical coordinates ``(t, θ, φ)`` about a
centre, with ``r = s·t/(1-t)``.  A Becke fuzzy-cell partition of unity
decides how much of each configuration belongs to which centre: electron 1
is partitioned over the three protons, electron 2 over the three protons
and electron 1.  In these coordinates every Coulomb cusp and 1/r
singularity sits at ``r = 0`` of some cell, where the volume element ``r²``
smooths it out; the partition weights vanish to high order at the other
centres.

With ``reduced=True`` only the electron-1 cell of proton A is integrated,
restricted to ``y ≥ 0, z ≥ 0``; the other eleven D3h images are accounted
for by a factor 12 and by orbit-averaging the one-electron observables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as K

__all__ = ["SpaceMap", "becke_weights", "cell_weight"]

BECKE_ITER = 3


@njit(cache=True, nogil=True)
def _cell_step(mu):
    for _ in range(BECKE_ITER):
        mu = 1.5 * mu - 0.5 * mu * mu * mu
    return 0.5 * (1.0 - mu)


@njit(cache=True, nogil=True)
def cell_weight(x, centers, m, which):
    """Becke weight of cell ``which`` among the first ``m`` rows of ``centers``."""
    dist = np.empty(m)
    for a in range(m):
        s = 0.0
        for c in range(3):
            d = x[c] - centers[a, c]
            s += d * d
        dist[a] = math.sqrt(s)
    total = 0.0
    mine = 0.0
    for a in range(m):
        p = 1.0
        for b in range(m):
            if a == b:
                continue
            s = 0.0
            for c in range(3):
                d = centers[a, c] - centers[b, c]
                s += d * d
            sep = math.sqrt(s)
            if sep <= 0.0:
                mu = 0.0
            else:
                mu = (dist[a] - dist[b]) / sep
                mu = min(1.0, max(-1.0, mu))
            p *= _cell_step(mu)
            if p == 0.0:
                break
        total += p
        if a == which:
            mine = p
    return mine / total


@njit(cache=True, nogil=True)
def _mapped_batch(coef, beta, corr, P, U, s_nuc, s_ee, reduced, clamp):
    n = U.shape[0]
    out = np.zeros((n, K.NCOMP))
    centers = np.empty((4, 3))
    for k in range(3):
        for c in range(3):
            centers[k, c] = P[k, c]
    x = np.empty(6)
    x1 = np.empty(3)
    x2 = np.empty(3)
    n1 = np.empty(3)
    n2 = np.empty(3)
    first = 1 if reduced else 3
    sym = 12.0 if reduced else 1.0
    for i in range(n):
        t1, th1, ph1, t2, th2, ph2 = U[i, 0], U[i, 1], U[i, 2], U[i, 3], U[i, 4], U[i, 5]
        st1 = math.sin(th1)
        n1[0] = st1 * math.cos(ph1)
        n1[1] = st1 * math.sin(ph1)
        n1[2] = math.cos(th1)
        st2 = math.sin(th2)
        n2[0] = st2 * math.cos(ph2)
        n2[1] = st2 * math.sin(ph2)
        n2[2] = math.cos(th2)
        q1 = 1.0 - t1
        r1 = s_nuc * t1 / q1
        jac1 = r1 * r1 * st1 * s_nuc / (q1 * q1)
        q2 = 1.0 - t2
        for k1 in range(first):
            for c in range(3):
                x1[c] = P[k1, c] + r1 * n1[c]
            w1 = cell_weight(x1, P, 3, k1)
            if w1 == 0.0:
                continue
            for c in range(3):
                centers[3, c] = x1[c]
                x[c] = x1[c]
            for k2 in range(4):
                s2 = s_ee if k2 == 3 else s_nuc
                r2 = s2 * t2 / q2
                jac2 = r2 * r2 * st2 * s2 / (q2 * q2)
                for c in range(3):
                    x2[c] = centers[k2, c] + r2 * n2[c]
                w2 = cell_weight(x2, centers, 4, k2)
                if w2 == 0.0:
                    continue
                for c in range(3):
                    x[3 + c] = x2[c]
                K.densities_at(coef, beta, corr, P, x, clamp, out[i],
                               sym * jac1 * jac2 * w1 * w2, reduced)
    return out


@dataclass(frozen=True)
class SpaceMap:
    """Integration box and vector integrand for one expanded trial function."""

    reduced: bool = True
    scale_nuclear: float = 1.0
    scale_ee: float = 1.5

    @property
    def lower(self) -> np.ndarray:
        return np.zeros(6)

    @property
    def upper(self) -> np.ndarray:
        if self.reduced:
            return np.array([1.0, math.pi / 2, math.pi, 1.0, math.pi, 2 * math.pi])
        return np.array([1.0, math.pi, 2 * math.pi, 1.0, math.pi, 2 * math.pi])

    def integrand(self, ansatz, clamp: float = K.CLAMP):
        coef, beta, corr = ansatz.arrays()
        P = np.ascontiguousarray(ansatz.geometry.proton_positions, dtype=float)
        s_n, s_e, red = float(self.scale_nuclear), float(self.scale_ee), bool(self.reduced)

        def f(U):
            return _mapped_batch(coef, beta, corr, P, np.ascontiguousarray(U), s_n, s_e, red, clamp)

        return f


def becke_weights(x, centers) -> np.ndarray:
    """All cell weights of point ``x`` for the given centres (sums to one)."""
    x = np.asarray(x, dtype=float)
    c = np.ascontiguousarray(centers, dtype=float)
    return np.array([cell_weight(x, c, len(c), k) for k in range(len(c))])
