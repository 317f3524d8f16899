"""Small geometry helpers shared by the scene builder and the renderer.

Coordinate conventions used everywhere in this package:

* SUMO plane: x east, y north, meters.
* World (render) frame: right-handed, X = east, Y = up, Z = -north,
  so a SUMO point (x, y) maps to world (x, h, -y).
* Compass headings are degrees in [0, 360), 0 = north, clockwise positive.
  A model faces -Z (north) at heading 0 and is rotated about Y by -heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def wrap_half_turn(delta_deg: float) -> float:
    """Map an angle difference onto (-180, 180] degrees."""
    return 180.0 - (180.0 - delta_deg) % 360.0


def norm_compass(angle_deg: float) -> float:
    """Normalize an angle to [0, 360) degrees."""
    a = angle_deg % 360.0
    return a if a < 360.0 else 0.0


def compass_to_dir2(angle_deg: float) -> tuple[float, float]:
    """Unit direction (dx, dy) in the SUMO plane for a compass heading."""
    r = math.radians(angle_deg)
    return math.sin(r), math.cos(r)


def heading_from_delta(dx: float, dy: float) -> float:
    """Compass heading of a movement increment in the SUMO plane."""
    return 90.0 - math.degrees(math.atan2(dy, dx))


def to_world(x: float, y: float, height: float = 0.0) -> np.ndarray:
    """Map a SUMO plane point to the world frame."""
    return np.array([x, height, -y], dtype=np.float64)


def unit(v: np.ndarray) -> np.ndarray:
    n = float(np.sqrt(np.dot(v, v)))
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def polyline_length(points: np.ndarray) -> float:
    """Total arclength of a (N, 2) polyline."""
    d = np.diff(points, axis=0)
    return float(np.sum(np.sqrt(np.sum(d * d, axis=1))))


def shoelace_area(polygon: np.ndarray) -> float:
    """Signed area of a (N, 2) polygon (positive = counter-clockwise)."""
    x = polygon[:, 0]
    y = polygon[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def triangle_area2(a, b, c) -> float:
    """Twice the signed area of a 2D triangle."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def rotation_y(yaw_rad: float) -> np.ndarray:
    c, s = math.cos(yaw_rad), math.sin(yaw_rad)
    return np.array(
        [
            [c, 0.0, s],
            [0.0, 1.0, 0.0],
            [-s, 0.0, c],
        ],
        dtype=np.float64,
    )


@dataclass
class Transform:
    """Rigid placement in the world frame: scale, then yaw about Y, then translate."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw_deg: float = 0.0
    scale: float = 1.0

    def matrix(self) -> np.ndarray:
        m = np.eye(4, dtype=np.float64)
        m[:3, :3] = rotation_y(math.radians(self.yaw_deg)) * self.scale
        m[:3, 3] = np.asarray(self.translation, dtype=np.float64)
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        return apply_matrix(self.matrix(), points)

    def apply_normals(self, normals: np.ndarray) -> np.ndarray:
        r = rotation_y(math.radians(self.yaw_deg))
        return _mat3_apply(r, normals)


def apply_matrix(m: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Apply a 4x4 transform to (N, 3) points.

    Written as explicit column combinations so the result never routes
    through a BLAS matmul; keeps frame output bit-identical across builds.
    """
    p = np.asarray(points, dtype=np.float64)
    out = np.empty_like(p)
    for i in range(3):
        out[:, i] = p[:, 0] * m[i, 0] + p[:, 1] * m[i, 1] + p[:, 2] * m[i, 2] + m[i, 3]
    return out


def _mat3_apply(r: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    v = np.asarray(vecs, dtype=np.float64)
    out = np.empty_like(v)
    for i in range(3):
        out[:, i] = v[:, 0] * r[i, 0] + v[:, 1] * r[i, 1] + v[:, 2] * r[i, 2]
    return out
