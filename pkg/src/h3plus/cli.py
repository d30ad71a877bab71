"""Command-line driver: ``h3plus energy|optimize|expect|scan|vmc|selftest``.

Every command prints a JSON manifest on stdout holding the full flag set,
the parameter file contents, results with error estimates in Ry and
hartree, evaluation counts and wall time, so a run can be repeated from
its manifest alone.

Exit codes: 0 success, 2 usage, 3 validation, 4 tolerance not met
(only with ``--strict``), 5 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import replace
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from .ansatz import AnsatzParameters, load_parameters, save_parameters
from .errors import H3PlusError, InvalidArgumentError, InvalidParametersError
from .geometry import R_EQ, build_triangle
from .hamiltonian import IntegrationSettings, variational_energy
from .observables import expectation_values
from .optimize import (DEFAULT_EVALS_LADDER, DEFAULT_TOL_LADDER, MODE_ALIASES, SEVEN,
                       OptimizationStage, hl_start, minimize, write_trace_csv)
from .vmc import DEFAULT_STEP, VmcSettings, vmc_run

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_TOLERANCE, EXIT_INTERNAL = 0, 2, 3, 4, 5

log = logging.getLogger("h3plus")


class UsageError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("h3plus")
    except metadata.PackageNotFoundError:
        return "unknown"


def bundled(name: str) -> Path:
    """Path of a parameter file shipped with the package."""
    return Path(str(resources.files("h3plus") / "data" / name))


def _resolve_params(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    b = bundled(name)
    if b.exists():
        return b
    raise InvalidArgumentError(f"parameter file {name!r} not found (also looked in bundled data)")


def _read_params(args):
    if args.params is None:
        raise UsageError("--params is required")
    path = _resolve_params(args.params)
    content = json.loads(path.read_text()) if path.suffix == ".json" else None
    params = load_parameters(path).validate()
    return params, str(path), content


def _energy_block(total_ry: float, err_ry: float) -> dict:
    return {"ry": total_ry, "hartree": total_ry / 2.0, "error_ry": err_ry, "error_hartree": err_ry / 2.0}


def _settings(args) -> IntegrationSettings:
    return IntegrationSettings(max_evals=int(args.max_evals), threads=int(args.threads))


def _breakdown_dict(b) -> dict:
    return {
        "energy": _energy_block(b.total_ry, b.error_estimate),
        "components_ry": {"kinetic": b.kinetic, "nuclear_attraction": b.nuclear_attraction,
                          "ee_repulsion": b.ee_repulsion, "nn_repulsion": b.nn_repulsion},
        "kinetic_laplacian_form_ry": b.kinetic_laplacian,
        "error_estimate_embedded_rule_ry": b.error_estimate,
        "error_estimate_history_ry": b.history_error,
        "norm": b.norm,
        "evaluations": b.evaluations,
        "converged": b.converged,
    }


def cmd_energy(args):
    params, path, content = _read_params(args)
    b = variational_energy(params, build_triangle(args.R), args.tol, _settings(args))
    return {"results": _breakdown_dict(b), "params_file": path, "params": content}, b.converged


def cmd_expect(args):
    params, path, content = _read_params(args)
    o = expectation_values(params, build_triangle(args.R), args.tol, _settings(args),
                           symmetry_evals=args.symmetry_evals)
    return {"results": o.as_dict(), "units": "bohr, bohr^-1, bohr^2; energy in Ry",
            "params_file": path, "params": content}, o.converged


def _stage_from(args, params):
    mode = MODE_ALIASES.get(args.stage)
    if mode is None:
        raise UsageError(f"invalid stage {args.stage!r}; use 7, 7+3 or 10")
    if mode != SEVEN and params.variant != "Psi0PlusHL":
        params = hl_start(params)
    tl = tuple(args.tol_ladder) if args.tol_ladder else DEFAULT_TOL_LADDER
    el = tuple(int(x) for x in args.evals_ladder) if args.evals_ladder else DEFAULT_EVALS_LADDER
    return OptimizationStage(mode, params, tol_ladder=tl, evals_ladder=el, max_iters=args.max_iters)


def cmd_optimize(args):
    params, path, content = _read_params(args)
    stage = _stage_from(args, params)
    res = minimize(stage, build_triangle(args.R), settings=_settings(args),
                   final_evals=int(args.max_evals))
    if args.out:
        save_parameters(res.best_params, args.out, energy_ry=res.best_energy)
    if args.trace:
        write_trace_csv(res.trace, args.trace)
    out = {
        "results": {
            "energy": _energy_block(res.best_energy, res.energy_error),
            "best_params": res.best_params.to_dict(),
            "iterations": res.trace[-1][0] if res.trace else 0,
            "objective_calls": res.objective_calls,
            "final": None if res.breakdown is None else _breakdown_dict(res.breakdown),
        },
        "stage": {"mode": stage.mode, "tol_ladder": list(stage.tol_ladder),
                  "evals_ladder": list(stage.evals_ladder), "max_iters": stage.max_iters},
        "params_file": path, "params": content,
    }
    return out, True if res.breakdown is None else res.breakdown.converged


def cmd_scan(args):
    params, path, content = _read_params(args)
    if not args.R_min > 0 or not args.R_max > args.R_min:
        raise UsageError("need 0 < --R-min < --R-max")
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    rows = []
    all_ok = True
    for R in np.linspace(args.R_min, args.R_max, args.steps):
        geom = build_triangle(float(R))
        p = params
        if args.reoptimize:
            st = OptimizationStage(SEVEN if params.variant == "Psi0" else "Ten", params,
                                   tol_ladder=(1e-2,), evals_ladder=(int(args.max_evals),),
                                   max_iters=args.max_iters)
            p = minimize(st, geom, settings=_settings(args)).best_params
        b = variational_energy(p, geom, args.tol, _settings(args))
        rows.append({"R_bohr": float(R), "E_ry": b.total_ry, "E_hartree": b.total_hartree,
                     "err_ry": b.error_estimate, "err_history_ry": b.history_error,
                     "converged": b.converged})
        all_ok &= b.converged
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["R_bohr", "E_ry", "E_hartree", "err_ry"])
            for r in rows:
                w.writerow([repr(r["R_bohr"]), repr(r["E_ry"]), repr(r["E_hartree"]), repr(r["err_ry"])])
    return {"results": {"rows": rows}, "params_file": path, "params": content}, all_ok


def cmd_vmc(args):
    params, path, content = _read_params(args)
    s = VmcSettings(n_walkers=args.walkers, n_steps=args.steps, burn_in=args.burn_in,
                    step_size=args.step_size, seed=args.seed, blocking=args.blocking)
    est = vmc_run(params, build_triangle(args.R), s)
    res = {name: {"mean": est.mean[name], "stderr": est.stderr[name]} for name in est.mean}
    res["energy"].update(_energy_block(est.mean["energy"], est.stderr["energy"]))
    return {"results": {"observables": res, "acceptance_rate": est.acceptance_rate,
                        "samples": est.samples},
            "params_file": path, "params": content}, True


def cmd_selftest(args):
    from .selftest import run_all
    lines = []
    ok = run_all(lambda s: (lines.append(s), print(s, file=sys.stderr)))
    if not ok:
        raise _SelftestFailed({"results": {"checks": lines, "passed": False}})
    return {"results": {"checks": lines, "passed": True}}, True


class _SelftestFailed(Exception):
    def __init__(self, manifest):
        self.manifest = manifest


COMMANDS = {"energy": cmd_energy, "expect": cmd_expect, "optimize": cmd_optimize,
            "scan": cmd_scan, "vmc": cmd_vmc, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="parameter JSON file (or the name of a bundled one, "
                                         "e.g. table2_row1.json)")
    common.add_argument("--R", type=float, default=R_EQ, help="interproton distance, bohr")
    common.add_argument("--tol", type=float, default=1e-5, help="relative cubature tolerance")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--seed", type=int, default=20110525, help="VMC master seed")
    common.add_argument("--out", help="output file (manifest; parameters for optimize; CSV for scan)")
    common.add_argument("--manifest", help="also write the JSON manifest here")
    common.add_argument("--max-evals", type=float, default=4e6, help="cubature evaluation budget")
    common.add_argument("--strict", action="store_true",
                        help="exit with code 4 if the cubature tolerance was not met")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="h3plus", description="Variational H3+ ground state at fixed nuclei.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("energy", parents=[common], help="variational energy")
    e = sub.add_parser("expect", parents=[common], help="expectation values")
    e.add_argument("--symmetry-evals", type=float, default=0,
                   help="budget for the full-space symmetry-equivalence check (0 = skip)")
    o = sub.add_parser("optimize", parents=[common], help="minimize the energy")
    o.add_argument("--stage", default="7", help="7, 7+3 or 10")
    o.add_argument("--tol-ladder", type=float, nargs="+")
    o.add_argument("--evals-ladder", type=float, nargs="+")
    o.add_argument("--max-iters", type=int, default=400)
    o.add_argument("--trace", help="trace CSV")
    s = sub.add_parser("scan", parents=[common], help="energy along R")
    s.add_argument("--R-min", type=float, required=True)
    s.add_argument("--R-max", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--reoptimize", action="store_true", help="re-optimize parameters at each R")
    s.add_argument("--max-iters", type=int, default=200)
    v = sub.add_parser("vmc", parents=[common], help="variational Monte Carlo estimate")
    v.add_argument("--walkers", type=int, default=100)
    v.add_argument("--steps", type=int, default=10_000)
    v.add_argument("--burn-in", type=int, default=1_000)
    v.add_argument("--step-size", type=float, default=DEFAULT_STEP)
    v.add_argument("--blocking", type=int, default=10)
    sub.add_parser("selftest", parents=[common], help="analytic and symmetry checks")
    return p


def _emit(manifest: dict, args) -> None:
    text = json.dumps(manifest, indent=2, default=float)
    print(text)
    target = args.manifest or (args.out if args.command in ("energy", "expect", "vmc") else None)
    if target:
        Path(target).write_text(text + "\n")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1 or not args.tol > 0 or args.max_evals < 149:
        print("error: need --threads >= 1, --tol > 0, --max-evals >= 149", file=sys.stderr)
        return EXIT_USAGE
    if not (np.isfinite(args.R) and args.R > 0):
        print("error: --R must be a positive number", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    base = {"command": args.command, "argv": argv, "flags": vars(args), "R_bohr": args.R,
            "tol": args.tol, "seed": args.seed, "version": _version()}
    try:
        body, converged = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidArgumentError, InvalidParametersError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _SelftestFailed as exc:
        _emit({**base, **exc.manifest, "wall_time_s": time.perf_counter() - t0}, args)
        return EXIT_INTERNAL
    except H3PlusError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    manifest = {**base, **body, "converged": bool(converged),
                "wall_time_s": time.perf_counter() - t0}
    _emit(manifest, args)
    if not converged:
        print("warning: cubature tolerance not met within --max-evals "
              "(the embedded-rule error estimate is conservative; error_estimate_history_ry is a heuristic alternative)",
              file=sys.stderr)
        if args.strict:
            return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
