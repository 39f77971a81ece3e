"""Planar geometry shared by every layer of the simulator.

Points and vectors are float arrays whose last axis holds (x, y). Every helper here
broadcasts over leading axes, so the same call works for one node or a whole batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

# float64 array of shape (2,), or (..., 2) for a batch
Vec2 = npt.NDArray[np.float64]


class DegenerateLineError(ValueError):
    """Raised when a line is requested through two coincident points."""


def vec2(x: float, y: float) -> Vec2:
    return np.array((x, y), dtype=float)


ZERO = vec2(0.0, 0.0)
ZERO.flags.writeable = False


def norm(v: npt.ArrayLike, keepdims: bool = False):
    """Euclidean length along the last axis."""
    return np.linalg.norm(v, axis=-1, keepdims=keepdims)


def distance(a: npt.ArrayLike, b: npt.ArrayLike):
    return np.linalg.norm(np.subtract(a, b), axis=-1)


def is_finite(v: npt.ArrayLike) -> bool:
    return bool(np.isfinite(v).all())


@dataclass(frozen=True, slots=True)
class Zone:
    """Exploration zone [0, width] x [0, height], origin at the southwest corner."""

    width: float = 1000.0
    height: float = 1000.0

    @property
    def extent(self) -> Vec2:
        return vec2(self.width, self.height)

    @property
    def center(self) -> Vec2:
        return self.extent / 2.0

    def contains(self, p: npt.ArrayLike):
        p = np.asarray(p)
        return np.all((p >= 0.0) & (p <= self.extent), axis=-1)

    def clamp(self, pos: Vec2, vel: Vec2) -> tuple[Vec2, Vec2]:
        """Clamp positions into the zone and zero the outward velocity components."""
        extent = self.extent
        vel = np.where(pos < 0.0, np.maximum(vel, 0.0), vel)
        vel = np.where(pos > extent, np.minimum(vel, 0.0), vel)
        return np.clip(pos, 0.0, extent), vel


def line_parameters(p: Vec2, s: Vec2, d: Vec2) -> tuple[np.ndarray, np.ndarray]:
    """Position of p's foot along s->d (0 at s, 1 at d) and the squared length of s->d.

    Rows with s == d get a parameter of 0.
    """
    sd = d - s
    length_sq = np.einsum("...i,...i->...", sd, sd)
    dot = np.einsum("...i,...i->...", p - s, sd)
    safe = np.where(length_sq == 0.0, 1.0, length_sq)
    return np.where(length_sq == 0.0, 0.0, dot / safe), length_sq


def project_onto_segment_line(p: Vec2, s: Vec2, d: Vec2) -> Vec2:
    """Orthogonal projection of p onto the infinite line through s and d."""
    p, s, d = (np.asarray(v, dtype=float) for v in (p, s, d))
    t, length_sq = line_parameters(p, s, d)
    if np.any(length_sq == 0.0):
        raise DegenerateLineError(f"line through coincident points {s.tolist()}")
    return s + t[..., None] * (d - s)
