"""Quick correctness checks with analytic answers.

Used by ``h3plus selftest``; each check returns ``(name, passed, detail)``.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .ansatz import AnsatzParameters, evaluate, expand, gradients, laplacians
from .cubature import genz_malik_apply, integrate_all_space
from .geometry import rotation_z

__all__ = ["CHECKS", "run_all", "finite_difference_gradients", "finite_difference_laplacians"]

ROW1 = AnsatzParameters((-0.00353, 0.18548, 1.4245, 1.0471, 0.15082, 0.58912), 0.21632)


def finite_difference_gradients(ansatz, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty(6)
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        g[k] = (evaluate(ansatz, x + e) - evaluate(ansatz, x - e)) / (2 * h)
    return g[:3], g[3:]


def finite_difference_laplacians(ansatz, x, h=1e-4, parts=False):
    """Second central differences summed per electron; with ``parts`` also
    the six individual second derivatives."""
    x = np.asarray(x, dtype=float)
    f0 = evaluate(ansatz, x)
    d2 = np.empty(6)
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        d2[k] = (evaluate(ansatz, x + e) - 2 * f0 + evaluate(ansatz, x - e)) / (h * h)
    if parts:
        return d2[:3].sum(), d2[3:].sum(), d2
    return d2[:3].sum(), d2[3:].sum()


def _monomials():
    rng = np.random.default_rng(1)
    lo, hi = -rng.uniform(0.2, 1.5, 6), rng.uniform(0.2, 1.5, 6)
    worst = 0.0
    for powers in [(0,) * 6, (2, 0, 0, 0, 0, 0), (4, 2, 0, 0, 0, 0), (1, 1, 1, 1, 1, 1),
                   (7, 0, 0, 0, 0, 0), (3, 0, 2, 0, 0, 2), (0, 0, 0, 0, 5, 2)]:
        p = np.array(powers)
        exact = np.prod((hi ** (p + 1) - lo ** (p + 1)) / (p + 1))
        v, _, _ = genz_malik_apply(lambda x: np.prod(x ** p, axis=-1), ((lo + hi) / 2, (hi - lo) / 2))
        worst = max(worst, abs(v[0] - exact) / max(abs(exact), 1e-300))
    return "polynomial exactness (degree <= 7)", worst < 1e-12, f"max rel err {worst:.2e}"


def _gaussian():
    r = integrate_all_space(lambda x: np.exp(-(x * x).sum(axis=-1)), 6, 1e-7, 16_000_000, scale=3.0)
    err = abs(r.values[0] / math.pi ** 3 - 1)
    return "6-D Gaussian = pi^3", err < 1e-6, f"rel err {err:.2e} ({r.evaluations} evals)"


def _slater():
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        r = integrate_all_space(
            lambda x: np.exp(-2 * a * np.sqrt((x * x).sum(axis=-1))), 3, 1e-6, 2_000_000,
            scale=1.0 / a)
        worst = max(worst, abs(r.values[0] / (math.pi / a ** 3) - 1))
    return "3-D Slater norm = pi/alpha^3", worst < 1e-4, f"max rel err {worst:.2e}"


def _random_configs(n=100, seed=3):
    return np.random.default_rng(seed).uniform(-3, 3, (n, 6))


def _symmetry():
    ans = expand(ROW1)
    X = _random_configs()
    psi = evaluate(ans, X)
    worst = float(np.max(np.abs(evaluate(ans, X[:, [3, 4, 5, 0, 1, 2]]) - psi) / np.abs(psi)))
    ops = [rotation_z(2 * math.pi / 3), rotation_z(4 * math.pi / 3)]
    refl = np.diag([1.0, -1.0, 1.0])
    ops += [refl, ops[0] @ refl, ops[1] @ refl, np.diag([1.0, 1.0, -1.0])]
    for M in ops:
        Y = np.concatenate([X[:, :3] @ M.T, X[:, 3:] @ M.T], axis=1)
        worst = max(worst, float(np.max(np.abs(evaluate(ans, Y) - psi) / np.abs(psi))))
    return "P12 and D3h symmetry", worst < 1e-12, f"max rel dev {worst:.2e}"


def _derivatives():
    ans = expand(ROW1)
    X = _random_configs(seed=4)
    g1, g2 = gradients(ans, X)
    l1, l2 = laplacians(ans, X)
    wg = wl = 0.0
    for i, x in enumerate(X):
        f1, f2 = finite_difference_gradients(ans, x)
        scale = max(np.abs(np.concatenate([g1[i], g2[i]])).max(), 1e-300)
        wg = max(wg, np.abs(np.concatenate([g1[i] - f1, g2[i] - f2])).max() / scale)
        m1, m2, d2 = finite_difference_laplacians(ans, x, parts=True)
        # double-precision differences lose digits where the three second
        # derivatives cancel, so measure against their magnitudes
        s1 = max(abs(l1[i]), np.abs(d2[:3]).sum())
        s2 = max(abs(l2[i]), np.abs(d2[3:]).sum())
        wl = max(wl, abs(l1[i] - m1) / s1, abs(l2[i] - m2) / s2)
    ok = wg < 1e-6 and wl < 1e-5
    return "gradients/Laplacians vs finite differences", ok, f"grad {wg:.2e}, lap {wl:.2e}"


CHECKS: tuple[Callable, ...] = (_monomials, _gaussian, _slater, _symmetry, _derivatives)


def run_all(report: Callable[[str], None] = print) -> bool:
    ok = True
    for check in CHECKS:
        name, passed, detail = check()
        report(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return ok
