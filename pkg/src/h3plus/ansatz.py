"""Symmetrized exponentially correlated trial functions for H3+.

The main function is a sum over the six proton relabelings and the two
electron orderings of

    exp(-α₁r₁A - α₂r₁B - α₃r₁C - α₄r₂A - α₅r₂B - α₆r₂C + γ r₁₂)

optionally plus ``A·exp(-α̃ Σ r_jκ + γ̃ r₁₂)`` (a single Heitler-London-type
product in which all six electron-proton exponents are equal).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import _kernels as K
from .errors import InvalidArgumentError, InvalidParametersError, SingularConfigurationError
from .geometry import R_EQ, TriangleGeometry, as_points, build_triangle

__all__ = [
    "PSI0",
    "PSI0_HL",
    "AnsatzParameters",
    "PrimitiveTerm",
    "ExpandedAnsatz",
    "expand",
    "evaluate",
    "gradients",
    "laplacians",
    "load_parameters",
    "save_parameters",
    "PARAMETER_SCHEMA",
]

PSI0 = "Psi0"
PSI0_HL = "Psi0PlusHL"

PARAMETER_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "H3+ trial-function parameters (inverse bohr)",
    "type": "object",
    "properties": {
        "alpha": {"type": "array", "items": {"type": "number"}, "minItems": 6, "maxItems": 6},
        "gamma": {"type": "number"},
        "A": {"type": "number"},
        "alpha_tilde": {"type": "number"},
        "gamma_tilde": {"type": "number"},
        "variant": {"enum": [PSI0, PSI0_HL]},
        "energy_ry": {"type": "number"},
        "comment": {"type": "string"},
    },
    "required": ["alpha", "gamma"],
    "additionalProperties": False,
    "dependentRequired": {"A": ["alpha_tilde", "gamma_tilde"]},
}


@dataclass(frozen=True)
class AnsatzParameters:
    alpha: tuple
    gamma: float
    hl_amplitude: float = 0.0
    hl_alpha: float = 0.0
    hl_gamma: float = 0.0
    variant: str = PSI0

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        for name in ("gamma", "hl_amplitude", "hl_alpha", "hl_gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if len(self.alpha) != 6:
            raise InvalidArgumentError("alpha needs exactly six entries")
        if self.variant not in (PSI0, PSI0_HL):
            raise InvalidArgumentError(f"unknown variant {self.variant!r}")

    def violations(self) -> list[str]:
        """Human-readable list of violated normalizability conditions."""
        bad = []
        vals = list(self.alpha) + [self.gamma]
        if self.variant == PSI0_HL:
            vals += [self.hl_amplitude, self.hl_alpha, self.hl_gamma]
        if not all(math.isfinite(v) for v in vals):
            bad.append("all parameters must be finite")
            return bad
        a = self.alpha
        if not a[0] + a[1] + a[2] > self.gamma:
            bad.append(f"alpha1+alpha2+alpha3 > gamma ({a[0] + a[1] + a[2]:.6g} <= {self.gamma:.6g})")
        if not a[3] + a[4] + a[5] > self.gamma:
            bad.append(f"alpha4+alpha5+alpha6 > gamma ({a[3] + a[4] + a[5]:.6g} <= {self.gamma:.6g})")
        if self.variant == PSI0_HL and not 3.0 * self.hl_alpha > self.hl_gamma:
            bad.append(f"3*alpha_tilde > gamma_tilde ({3 * self.hl_alpha:.6g} <= {self.hl_gamma:.6g})")
        return bad

    def is_valid(self) -> bool:
        return not self.violations()

    def validate(self) -> "AnsatzParameters":
        bad = self.violations()
        if bad:
            raise InvalidParametersError("; ".join(bad))
        return self

    def vector(self) -> np.ndarray:
        """All ten parameters in the order α₁…α₆, γ, A, α̃, γ̃."""
        return np.array(list(self.alpha) + [self.gamma, self.hl_amplitude, self.hl_alpha, self.hl_gamma])

    @classmethod
    def from_vector(cls, v, variant: str = PSI0) -> "AnsatzParameters":
        v = [float(x) for x in v]
        if len(v) == 7:
            v = v + [0.0, 0.0, 0.0]
        return cls(tuple(v[:6]), v[6], v[7], v[8], v[9], variant)

    def with_hl(self, amplitude: float, alpha: float, gamma: float) -> "AnsatzParameters":
        return replace(self, hl_amplitude=amplitude, hl_alpha=alpha, hl_gamma=gamma, variant=PSI0_HL)

    def to_dict(self) -> dict:
        d = {"alpha": list(self.alpha), "gamma": self.gamma, "variant": self.variant}
        if self.variant == PSI0_HL:
            d.update(A=self.hl_amplitude, alpha_tilde=self.hl_alpha, gamma_tilde=self.hl_gamma)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnsatzParameters":
        validator = jsonschema.Draft202012Validator(PARAMETER_SCHEMA)
        errors = sorted(validator.iter_errors(d), key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            raise InvalidArgumentError(f"{e.json_path}: {e.message}")
        variant = d.get("variant", PSI0_HL if "A" in d else PSI0)
        if variant == PSI0_HL and "A" not in d:
            raise InvalidArgumentError("$: variant Psi0PlusHL needs A, alpha_tilde, gamma_tilde")
        return cls(tuple(d["alpha"]), d["gamma"], d.get("A", 0.0),
                   d.get("alpha_tilde", 0.0), d.get("gamma_tilde", 0.0), variant)


def load_parameters(path) -> AnsatzParameters:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"$: not valid JSON ({exc})") from exc
    return AnsatzParameters.from_dict(data)


def save_parameters(params: AnsatzParameters, path, **extra) -> None:
    d = params.to_dict()
    d.update(extra)
    Path(path).write_text(json.dumps(d, indent=2) + "\n")


@dataclass(frozen=True)
class PrimitiveTerm:
    coefficient: float
    beta: np.ndarray  # (2, 3): electron j, proton κ
    corr: float


@dataclass(frozen=True)
class ExpandedAnsatz:
    terms: tuple
    geometry: TriangleGeometry
    _arrays: Optional[tuple] = field(default=None, repr=False, compare=False)

    def arrays(self):
        """Contiguous ``(coef, beta, corr)`` arrays for the compiled kernels."""
        if self._arrays is None:
            coef = np.array([t.coefficient for t in self.terms], dtype=float)
            beta = np.ascontiguousarray([t.beta for t in self.terms], dtype=float)
            corr = np.array([t.corr for t in self.terms], dtype=float)
            object.__setattr__(self, "_arrays", (coef, beta, corr))
        return self._arrays

    def scaled(self, c: float) -> "ExpandedAnsatz":
        terms = tuple(PrimitiveTerm(c * t.coefficient, t.beta, t.corr) for t in self.terms)
        return ExpandedAnsatz(terms, self.geometry)


def expand(params: AnsatzParameters, geometry: Optional[TriangleGeometry] = None) -> ExpandedAnsatz:
    params.validate()
    if geometry is None:
        geometry = build_triangle(R_EQ)
    a = params.alpha
    direct = []
    for perm in itertools.permutations(range(3)):
        b = np.zeros((2, 3))
        for k in range(3):
            b[0, perm[k]] = a[k]
            b[1, perm[k]] = a[3 + k]
        direct.append(PrimitiveTerm(1.0, b, params.gamma))
    exchanged = [PrimitiveTerm(1.0, t.beta[::-1].copy(), t.corr) for t in direct]
    terms = direct + exchanged
    if params.variant == PSI0_HL:
        terms.append(PrimitiveTerm(params.hl_amplitude, np.full((2, 3), params.hl_alpha), params.hl_gamma))
    return ExpandedAnsatz(tuple(terms), geometry)


def evaluate(ansatz: ExpandedAnsatz, config):
    pts = as_points(config)
    flat = np.ascontiguousarray(pts.reshape(-1, 6))
    coef, beta, corr = ansatz.arrays()
    out = K.psi_batch(coef, beta, corr, ansatz.geometry.proton_positions, flat)
    return out.reshape(pts.shape[:-1]) if pts.ndim > 1 else float(out[0])


def _derivs(ansatz, config):
    pts = as_points(config)
    flat = np.ascontiguousarray(pts.reshape(-1, 6))
    P = ansatz.geometry.proton_positions
    d1 = np.linalg.norm(flat[:, None, :3] - P, axis=-1)
    d2 = np.linalg.norm(flat[:, None, 3:] - P, axis=-1)
    d12 = np.linalg.norm(flat[:, :3] - flat[:, 3:], axis=-1)
    if np.any(d1 == 0) or np.any(d2 == 0) or np.any(d12 == 0):
        raise SingularConfigurationError("electron on a proton or on the other electron")
    coef, beta, corr = ansatz.arrays()
    psi, g1, g2, lap = K.derivs_batch(coef, beta, corr, P, flat, 0.0)
    return pts.shape[:-1], psi, g1, g2, lap


def gradients(ansatz: ExpandedAnsatz, config):
    """Analytic ``(∇₁Ψ, ∇₂Ψ)``; each has shape ``batch + (3,)``."""
    shape, _, g1, g2, _ = _derivs(ansatz, config)
    return g1.reshape(shape + (3,)), g2.reshape(shape + (3,))


def laplacians(ansatz: ExpandedAnsatz, config):
    """Analytic ``(Δ₁Ψ, Δ₂Ψ)``."""
    shape, _, _, _, lap = _derivs(ansatz, config)
    if shape == ():
        return float(lap[0, 0]), float(lap[0, 1])
    return lap[:, 0].reshape(shape), lap[:, 1].reshape(shape)
