"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers
before asserting.  Reference values are literature numbers for the bundled wavefunctions; gates
and tolerances are fixed here.
"""
import json
import math

import numpy as np
import pytest

from h3plus.ansatz import AnsatzParameters, evaluate, expand, gradients, laplacians
from h3plus.cli import main
from h3plus.geometry import rotation_z
from h3plus.hamiltonian import EXACT_BO_HARTREE, IntegrationSettings
from h3plus.observables import expectation_values
from h3plus.optimize import EXACT_BO_RY, OptimizationStage, minimize
from h3plus.selftest import _gaussian, _monomials, _slater, finite_difference_gradients
from h3plus.vmc import VmcSettings, vmc_run

from test_ansatz import fd_laplacians_mp

REF_HARTREE = {"row1": -1.34034, "row2": -1.34073, "row3": -1.34159}
REF_OBSERVABLES_ROW1 = {"inv_r1A": 0.8548, "x2": 0.7711, "y2": 0.7711, "z2": 0.5399, "r2": 2.0822,
               "r12_mean": 2.0032, "inv_r12": 0.6315}


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return report


@pytest.fixture(scope="module")
def observables_row1(row1, geom):
    return expectation_values(row1, geom, 1e-6, IntegrationSettings(max_evals=4_000_000))


def test_criterion_1_seven_parameter_energy(reference_energy, verdict):
    b = reference_energy("row1")
    dev = b.total_hartree - REF_HARTREE["row1"]
    verdict(1, abs(dev) <= 2e-4,
            f"E = {b.total_hartree:.6f} hartree ({b.total_ry:.6f} Ry), reference -1.34034, "
            f"deviation {dev:+.2e} (gate 2e-4), {b.evaluations} evaluations")


def test_criterion_2_hl_energies(reference_energy, verdict):
    parts, ok = [], True
    for name in ("row2", "row3"):
        b = reference_energy(name)
        dev = b.total_hartree - REF_HARTREE[name]
        ok &= abs(dev) <= 5e-4
        parts.append(f"{name} E = {b.total_hartree:.6f} (reference {REF_HARTREE[name]}, dev {dev:+.2e})")
    verdict(2, ok, "; ".join(parts) + "; all-plus HL convention, gate 5e-4 hartree")


@pytest.mark.slow
def test_criterion_3_optimization_recovery(row1, verdict):
    rng = np.random.default_rng(7)
    start = AnsatzParameters.from_vector(row1.vector()[:7] * (1 + rng.uniform(-0.2, 0.2, 7)))
    stage = OptimizationStage("7", start, tol_ladder=(1e-2, 1e-3), evals_ladder=(200_000, 800_000),
                              max_iters=400)
    r = minimize(stage, final_evals=4_000_000)
    e_h = r.best_energy / 2
    floor = EXACT_BO_HARTREE - r.energy_error / 2
    safe = all(t[1] >= EXACT_BO_RY - r.energy_error for t in r.trace) and e_h >= floor
    verdict(3, e_h <= -1.3400 and safe,
            f"start E = {r.trace[0][1] / 2:.5f}, final E = {e_h:.6f} hartree (gate <= -1.3400), "
            f"variational floor respected: {safe}, {r.objective_calls} objective calls")


def test_criterion_4_expectation_values(observables_row1, verdict):
    o = observables_row1
    worst = max(abs(getattr(o, k) / v - 1) for k, v in REF_OBSERVABLES_ROW1.items())
    resid = o.additivity_residual()
    detail = ", ".join(f"{k} {getattr(o, k):.4f}" for k in REF_OBSERVABLES_ROW1)
    verdict(4, worst <= 0.01 and resid <= 1e-10,
            f"{detail}; worst relative deviation {worst:.2e} (gate 1e-2), additivity residual {resid:.1e}")


def test_criterion_5_integrator(verdict):
    results = [check() for check in (_monomials, _gaussian, _slater)]
    verdict(5, all(ok for _, ok, _ in results), "; ".join(f"{n}: {d}" for n, _, d in results))


def test_criterion_6_wavefunction(row1, row3, verdict):
    X = np.random.default_rng(2024).uniform(-3, 3, (100, 6))
    sym = grad = lap = 0.0
    ops = [rotation_z(2 * math.pi / 3), rotation_z(4 * math.pi / 3), np.diag([1.0, -1.0, 1.0]),
           rotation_z(2 * math.pi / 3) @ np.diag([1.0, -1.0, 1.0]),
           rotation_z(4 * math.pi / 3) @ np.diag([1.0, -1.0, 1.0])]
    for params in (row1, row3):
        ans = expand(params)
        psi = evaluate(ans, X)
        sym = max(sym, np.max(np.abs(evaluate(ans, X[:, [3, 4, 5, 0, 1, 2]]) - psi) / np.abs(psi)))
        for M in ops:
            Y = np.concatenate([X[:, :3] @ M.T, X[:, 3:] @ M.T], axis=1)
            sym = max(sym, np.max(np.abs(evaluate(ans, Y) - psi) / np.abs(psi)))
        g1, g2 = gradients(ans, X)
        l1, l2 = laplacians(ans, X)
        for i, x in enumerate(X):
            f1, f2 = finite_difference_gradients(ans, x, 1e-5)
            g = np.r_[g1[i], g2[i]]
            grad = max(grad, np.abs(g - np.r_[f1, f2]).max() / np.abs(g).max())
            m1, m2 = fd_laplacians_mp(params, x, 1e-4)
            lap = max(lap, abs(l1[i] / m1 - 1), abs(l2[i] / m2 - 1))
    verdict(6, sym <= 1e-12 and grad <= 1e-6 and lap <= 1e-5,
            f"symmetry {sym:.1e} (1e-12), gradients {grad:.1e} (1e-6), Laplacians {lap:.1e} (1e-5) "
            f"over 100 configurations x 2 parameter sets")


def test_criterion_7_vmc_agreement(row1, reference_energy, observables_row1, verdict):
    s = VmcSettings(n_walkers=100, n_steps=10_000, burn_in=1_000, seed=20110525)
    est = vmc_run(row1, settings=s)
    again = vmc_run(row1, settings=s)
    identical = est.mean == again.mean and est.stderr == again.stderr
    b = reference_energy("row1")
    cub_err = b.history_error or 0.0
    sig = {"energy": est.sigma_distance("energy", b.total_ry, cub_err)}
    for k in REF_OBSERVABLES_ROW1:
        name = {"r12_mean": "r12", "inv_r12": "inv_r12", "r2": "r2"}.get(k, k)
        sig[k] = est.sigma_distance(name, getattr(observables_row1, k))
    worst = max(sig, key=sig.get)
    verdict(7, est.samples >= 1_000_000 and identical and sig[worst] <= 3.0,
            f"{est.samples} samples, E_vmc = {est.mean['energy']:.5f} +- {est.stderr['energy']:.5f} Ry "
            f"vs cubature {b.total_ry:.5f}; largest deviation {sig[worst]:.2f} sigma ({worst}); "
            f"repeat with same seed identical: {identical}")


def test_criterion_8_thread_determinism(capsys, verdict):
    vals = []
    for threads in ("1", "8"):
        main(["energy", "--params", "table2_row1.json", "--threads", threads, "--max-evals", "1000000"])
        vals.append(json.loads(capsys.readouterr().out)["results"]["energy"]["ry"])
    rel = abs(vals[0] - vals[1]) / abs(vals[0])
    verdict(8, rel <= 1e-12, f"threads 1: {vals[0]!r}, threads 8: {vals[1]!r}, relative difference {rel:.1e}")
