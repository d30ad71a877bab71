"""Equilateral proton frame and interparticle distances.

Protons A, B, C sit in the z = 0 plane on a circle of radius R/√3 about the
origin; A lies on the +x axis and B, C follow by +120° and +240° rotations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "TriangleGeometry",
    "ElectronConfiguration",
    "DistanceSet",
    "build_triangle",
    "distances",
    "rotation_z",
    "as_points",
    "R_EQ",
]

LABELS = ("A", "B", "C")

# equilibrium side length in bohr
R_EQ = 1.65


@dataclass(frozen=True)
class TriangleGeometry:
    side_R: float
    proton_positions: np.ndarray  # (3, 3), rows A, B, C

    @property
    def circumradius(self) -> float:
        return self.side_R / math.sqrt(3.0)

    @property
    def nuclear_repulsion(self) -> float:
        """Proton-proton repulsion in Rydberg, 3·2/R."""
        return 6.0 / self.side_R


@dataclass(frozen=True)
class ElectronConfiguration:
    """Two electron positions; each may carry leading batch axes."""

    x1: np.ndarray
    x2: np.ndarray

    @classmethod
    def from_flat(cls, point) -> "ElectronConfiguration":
        p = np.asarray(point, dtype=float)
        return cls(p[..., :3], p[..., 3:6])

    def flat(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.x1, float), np.asarray(self.x2, float)], axis=-1)

    def swapped(self) -> "ElectronConfiguration":
        return ElectronConfiguration(self.x2, self.x1)


@dataclass(frozen=True)
class DistanceSet:
    r1: np.ndarray   # (..., 3) electron 1 to A, B, C
    r2: np.ndarray   # (..., 3) electron 2 to A, B, C
    r12: np.ndarray
    rad1: np.ndarray  # |x1| from the circumcentre
    rad2: np.ndarray


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def build_triangle(side_R: float) -> TriangleGeometry:
    side_R = float(side_R)
    if not math.isfinite(side_R) or side_R <= 0.0:
        raise InvalidArgumentError(f"side_R must be positive and finite, got {side_R!r}")
    a = np.array([side_R / math.sqrt(3.0), 0.0, 0.0])
    pos = np.array([a, rotation_z(2 * math.pi / 3) @ a, rotation_z(4 * math.pi / 3) @ a])
    pos[:, 2] = 0.0
    pos.setflags(write=False)
    return TriangleGeometry(side_R, pos)


def as_points(config) -> np.ndarray:
    """Normalise a configuration (dataclass, ``(..., 6)`` or ``(..., 2, 3)``)
    to a flat ``(..., 6)`` float array."""
    if isinstance(config, ElectronConfiguration):
        return config.flat()
    p = np.asarray(config, dtype=float)
    if p.shape[-2:] == (2, 3):
        return p.reshape(p.shape[:-2] + (6,))
    if p.shape[-1] != 6:
        raise InvalidArgumentError(f"cannot read a configuration from shape {p.shape}")
    return p


def distances(geom: TriangleGeometry, config) -> DistanceSet:
    p = as_points(config)
    x1, x2 = p[..., None, :3], p[..., None, 3:]
    P = geom.proton_positions
    r1 = np.linalg.norm(x1 - P, axis=-1)
    r2 = np.linalg.norm(x2 - P, axis=-1)
    r12 = np.linalg.norm(p[..., :3] - p[..., 3:], axis=-1)
    return DistanceSet(r1, r2, r12, np.linalg.norm(p[..., :3], axis=-1),
                       np.linalg.norm(p[..., 3:], axis=-1))
