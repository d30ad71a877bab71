"""Check the cubature energy against variational Monte Carlo.

The two methods share nothing but the wavefunction and local energy, so
agreement within the Monte Carlo error bar is an independent test of the
integrator.  Also shows that a fixed seed reproduces the run exactly.

    python demos/vmc_crosscheck.py
"""
from h3plus import IntegrationSettings, VmcSettings, load_parameters, variational_energy, vmc_run
from h3plus.cli import bundled

params = load_parameters(bundled("table2_row1.json"))
cub = variational_energy(params, tol=1e-7, settings=IntegrationSettings(max_evals=2_000_000))
print(f"cubature: {cub.total_ry:.5f} Ry ({cub.evaluations} evaluations)")

for walkers, steps in ((20, 2_000), (100, 10_000)):
    est = vmc_run(params, settings=VmcSettings(n_walkers=walkers, n_steps=steps, seed=11))
    d = est.sigma_distance("energy", cub.total_ry)
    print(f"VMC {est.samples:>8d} samples: {est.mean['energy']:.5f} +- {est.stderr['energy']:.5f} Ry,"
          f" {d:.2f} sigma from cubature, acceptance {est.acceptance_rate:.2f}")

again = vmc_run(params, settings=VmcSettings(n_walkers=100, n_steps=10_000, seed=11))
print("same seed, same numbers:", again.mean["energy"] == est.mean["energy"])
