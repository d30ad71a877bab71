"""Compiled per-configuration kernels shared by the ansatz, the energy
integrands, the cubature map and the Metropolis sampler."""
import math

import numpy as np
from numba import njit

# distances below this are clamped inside integrand evaluators
CLAMP = 1e-12


@njit(cache=True, nogil=True)
def psi_derivs(coef, beta, corr, P, x, clamp):
    """Ψ, ∇₁Ψ, ∇₂Ψ, Δ₁Ψ, Δ₂Ψ at one configuration ``x`` (length 6).

    ``clamp`` > 0 floors every distance at that value; with ``clamp`` = 0
    coincident particles give non-finite derivatives.
    """
    r1 = np.empty(3)
    r2 = np.empty(3)
    u1 = np.empty((3, 3))
    u2 = np.empty((3, 3))
    for k in range(3):
        s1 = 0.0
        s2 = 0.0
        for c in range(3):
            a = x[c] - P[k, c]
            b = x[3 + c] - P[k, c]
            u1[k, c] = a
            u2[k, c] = b
            s1 += a * a
            s2 += b * b
        r1[k] = max(math.sqrt(s1), clamp)
        r2[k] = max(math.sqrt(s2), clamp)
        for c in range(3):
            u1[k, c] /= r1[k]
            u2[k, c] /= r2[k]
    u12 = np.empty(3)
    s = 0.0
    for c in range(3):
        u12[c] = x[c] - x[3 + c]
        s += u12[c] * u12[c]
    r12 = max(math.sqrt(s), clamp)
    for c in range(3):
        u12[c] /= r12

    psi = 0.0
    g1 = np.zeros(3)
    g2 = np.zeros(3)
    lap1 = 0.0
    lap2 = 0.0
    a1 = np.empty(3)
    a2 = np.empty(3)
    for t in range(coef.shape[0]):
        g = corr[t]
        e = g * r12
        l1 = 2.0 * g / r12
        l2 = l1
        for c in range(3):
            a1[c] = g * u12[c]
            a2[c] = -g * u12[c]
        for k in range(3):
            b1 = beta[t, 0, k]
            b2 = beta[t, 1, k]
            e -= b1 * r1[k] + b2 * r2[k]
            l1 -= 2.0 * b1 / r1[k]
            l2 -= 2.0 * b2 / r2[k]
            for c in range(3):
                a1[c] -= b1 * u1[k, c]
                a2[c] -= b2 * u2[k, c]
        f = coef[t] * math.exp(e)
        psi += f
        n1 = 0.0
        n2 = 0.0
        for c in range(3):
            g1[c] += f * a1[c]
            g2[c] += f * a2[c]
            n1 += a1[c] * a1[c]
            n2 += a2[c] * a2[c]
        lap1 += f * (n1 + l1)
        lap2 += f * (n2 + l2)
    return psi, g1, g2, lap1, lap2


@njit(cache=True, nogil=True)
def psi_value(coef, beta, corr, P, x):
    r1 = np.empty(3)
    r2 = np.empty(3)
    for k in range(3):
        s1 = 0.0
        s2 = 0.0
        for c in range(3):
            a = x[c] - P[k, c]
            b = x[3 + c] - P[k, c]
            s1 += a * a
            s2 += b * b
        r1[k] = math.sqrt(s1)
        r2[k] = math.sqrt(s2)
    s = 0.0
    for c in range(3):
        d = x[c] - x[3 + c]
        s += d * d
    r12 = math.sqrt(s)
    psi = 0.0
    for t in range(coef.shape[0]):
        e = corr[t] * r12
        for k in range(3):
            e -= beta[t, 0, k] * r1[k] + beta[t, 1, k] * r2[k]
        psi += coef[t] * math.exp(e)
    return psi


@njit(cache=True, nogil=True)
def psi_batch(coef, beta, corr, P, pts):
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        out[i] = psi_value(coef, beta, corr, P, pts[i])
    return out


@njit(cache=True, nogil=True)
def derivs_batch(coef, beta, corr, P, pts, clamp):
    n = pts.shape[0]
    psi = np.empty(n)
    g1 = np.empty((n, 3))
    g2 = np.empty((n, 3))
    lap = np.empty((n, 2))
    for i in range(n):
        p, a, b, l1, l2 = psi_derivs(coef, beta, corr, P, pts[i], clamp)
        psi[i] = p
        g1[i] = a
        g2[i] = b
        lap[i, 0] = l1
        lap[i, 1] = l2
    return psi, g1, g2, lap


@njit(cache=True, nogil=True)
def potential_at(P, x, R, clamp):
    """Coulomb potential in Rydberg at one configuration."""
    v = 6.0 / R
    for k in range(3):
        s1 = 0.0
        s2 = 0.0
        for c in range(3):
            a = x[c] - P[k, c]
            b = x[3 + c] - P[k, c]
            s1 += a * a
            s2 += b * b
        v -= 2.0 / max(math.sqrt(s1), clamp) + 2.0 / max(math.sqrt(s2), clamp)
    s = 0.0
    for c in range(3):
        d = x[c] - x[3 + c]
        s += d * d
    return v + 2.0 / max(math.sqrt(s), clamp)


# Density components, in this order.
NORM, KIN_GRAD, V_NE, V_EE, KIN_LAP = 0, 1, 2, 3, 4
R12, INV_R12, INV_R1A, X2, Y2, Z2, RR2, INV_R1B, INV_R2C = 5, 6, 7, 8, 9, 10, 11, 12, 13
NCOMP = 14


@njit(cache=True, nogil=True)
def densities_at(coef, beta, corr, P, x, clamp, out, scale, sym):
    """Accumulate ``scale`` × every density component at ``x`` into ``out``.

    With ``sym`` the one-electron observables are replaced by their
    averages over the D3h orbit of the configuration, which integrate to the
    same expectation values over all space.
    """
    psi, g1, g2, lap1, lap2 = psi_derivs(coef, beta, corr, P, x, clamp)
    rho = psi * psi
    ir1 = np.empty(3)
    ir2 = np.empty(3)
    for k in range(3):
        s1 = 0.0
        s2 = 0.0
        for c in range(3):
            a = x[c] - P[k, c]
            b = x[3 + c] - P[k, c]
            s1 += a * a
            s2 += b * b
        ir1[k] = 1.0 / max(math.sqrt(s1), clamp)
        ir2[k] = 1.0 / max(math.sqrt(s2), clamp)
    s = 0.0
    for c in range(3):
        d = x[c] - x[3 + c]
        s += d * d
    r12 = max(math.sqrt(s), clamp)
    kin = 0.0
    for c in range(3):
        kin += g1[c] * g1[c] + g2[c] * g2[c]
    out[NORM] += scale * rho
    out[KIN_GRAD] += scale * kin
    out[V_NE] += scale * (-2.0) * rho * (ir1[0] + ir1[1] + ir1[2] + ir2[0] + ir2[1] + ir2[2])
    out[V_EE] += scale * 2.0 * rho / r12
    out[KIN_LAP] += scale * (-psi * (lap1 + lap2))
    out[R12] += scale * rho * r12
    out[INV_R12] += scale * rho / r12
    xx = x[0] * x[0]
    yy = x[1] * x[1]
    zz = x[2] * x[2]
    if sym:
        ia = (ir1[0] + ir1[1] + ir1[2]) / 3.0
        out[INV_R1A] += scale * rho * ia
        out[INV_R1B] += scale * rho * ia
        out[INV_R2C] += scale * rho * ia
        h = 0.5 * (xx + yy)
        out[X2] += scale * rho * h
        out[Y2] += scale * rho * h
    else:
        out[INV_R1A] += scale * rho * ir1[0]
        out[INV_R1B] += scale * rho * ir1[1]
        out[INV_R2C] += scale * rho * ir2[2]
        out[X2] += scale * rho * xx
        out[Y2] += scale * rho * yy
    out[Z2] += scale * rho * zz
    out[RR2] += scale * rho * (xx + yy + zz)


@njit(cache=True, nogil=True)
def densities_batch(coef, beta, corr, P, pts, clamp):
    n = pts.shape[0]
    out = np.zeros((n, NCOMP))
    for i in range(n):
        densities_at(coef, beta, corr, P, pts[i], clamp, out[i], 1.0, False)
    return out
