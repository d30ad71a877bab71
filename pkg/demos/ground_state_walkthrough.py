"""Walk through the H3+ ground state at the equilateral equilibrium geometry.

Loads the bundled seven-parameter wavefunction, integrates its energy at a
few budgets to show how the adaptive cubature converges, then prints the
geometric expectation values.  Runs in about a minute on one core.

    python demos/ground_state_walkthrough.py
"""
import numpy as np

from h3plus import IntegrationSettings, build_triangle, expectation_values, load_parameters, variational_energy
from h3plus.cli import bundled

geom = build_triangle(1.65)
params = load_parameters(bundled("table2_row1.json"))
print("protons (bohr):")
print(np.array2string(geom.proton_positions, precision=5))

# energy against budget; the reported error is the embedded-rule estimate,
# deliberately conservative, and the history estimate is a rougher guess
print("\n evals     E (Ry)      E (hartree)   embedded err   history err")
for evals in (250_000, 1_000_000, 4_000_000):
    b = variational_energy(params, geom, 1e-7, IntegrationSettings(max_evals=evals))
    print(f"{b.evaluations:>8d}  {b.total_ry:.6f}  {b.total_hartree:.6f}    {b.error_estimate:.1e}"
          f"        {b.history_error:.1e}")

print("\ncomponents at the last budget (Ry):")
for k in ("kinetic", "nuclear_attraction", "ee_repulsion", "nn_repulsion"):
    print(f"  {k:<20s}{getattr(b, k): .6f}")
print(f"  virial ratio -V/T = {-(b.total_ry - b.kinetic) / b.kinetic:.5f}")

obs = expectation_values(params, geom, 1e-7, IntegrationSettings(max_evals=1_000_000))
print("\nexpectation values:")
for k in ("r12_mean", "inv_r12", "inv_r1A", "x2", "y2", "z2", "r2"):
    print(f"  <{k}> = {getattr(obs, k):.5f} +- {obs.errors[k]:.1e}")
print(f"  additivity residual of r2 = x2 + y2 + z2: {obs.additivity_residual():.1e}")
