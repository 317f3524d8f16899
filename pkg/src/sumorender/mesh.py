"""Triangle mesh container and primitive builders."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass
class MaterialRef:
    kind: str = "flat_color"  # "flat_color" or "textured"
    color: tuple[float, float, float] = (0.8, 0.8, 0.8)
    texture_name: str | None = None

    def __post_init__(self):
        if self.kind not in ("flat_color", "textured"):
            raise ValidationError(f"unknown material kind {self.kind!r}")
        if self.kind == "textured" and not self.texture_name:
            raise ValidationError("textured material requires a texture_name")


@dataclass
class Mesh:
    positions: np.ndarray  # (N, 3) float64, world or model space
    normals: np.ndarray  # (N, 3) float64 unit vectors
    triangles: np.ndarray  # (M, 3) int32 vertex indices
    material: MaterialRef = field(default_factory=MaterialRef)
    uvs: np.ndarray | None = None  # (N, 2) float64 or None
    two_sided: bool = False  # thin layered geometry visible from both sides
    unlit: bool = False  # emissive surfaces (signal lamps) skip shading

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        if self.uvs is not None:
            self.uvs = np.asarray(self.uvs, dtype=np.float64).reshape(-1, 2)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def validate(self) -> None:
        n = len(self.positions)
        if len(self.normals) != n:
            raise ValidationError("normals/positions length mismatch")
        if self.uvs is not None and len(self.uvs) != n:
            raise ValidationError("uvs/positions length mismatch")
        if self.triangle_count and (
            self.triangles.min() < 0 or self.triangles.max() >= n
        ):
            raise ValidationError("triangle index out of range")
        areas = self.triangle_areas()
        if np.any(areas <= 1e-12):
            raise ValidationError("mesh contains a degenerate triangle")

    def triangle_areas(self) -> np.ndarray:
        a = self.positions[self.triangles[:, 0]]
        b = self.positions[self.triangles[:, 1]]
        c = self.positions[self.triangles[:, 2]]
        cross = np.cross(b - a, c - a)
        return 0.5 * np.sqrt(np.sum(cross * cross, axis=1))

    def surface_area(self) -> float:
        return float(self.triangle_areas().sum())


def empty_mesh(material: MaterialRef | None = None) -> Mesh:
    return Mesh(
        positions=np.zeros((0, 3)),
        normals=np.zeros((0, 3)),
        triangles=np.zeros((0, 3), dtype=np.int32),
        material=material or MaterialRef(),
    )


def face_normals(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = positions[triangles[:, 0]]
    b = positions[triangles[:, 1]]
    c = positions[triangles[:, 2]]
    n = np.cross(b - a, c - a)
    lengths = np.sqrt(np.sum(n * n, axis=1, keepdims=True))
    lengths[lengths == 0] = 1.0
    return n / lengths


def mesh_from_faces(positions, triangles, material: MaterialRef | None = None, **kw) -> Mesh:
    """Build a flat-shaded mesh: vertex normals copied from face normals.

    Vertices are duplicated per face so each triangle carries its own normal.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    fn = face_normals(positions, triangles)
    out_pos = positions[triangles.reshape(-1)]
    out_norm = np.repeat(fn, 3, axis=0)
    out_tris = np.arange(len(out_pos), dtype=np.int32).reshape(-1, 3)
    return Mesh(out_pos, out_norm, out_tris, material or MaterialRef(), **kw)


def make_box(sx: float, sy: float, sz: float, material: MaterialRef | None = None,
             center=(0.0, 0.0, 0.0)) -> Mesh:
    """Axis-aligned box of the given extents centered on ``center``."""
    hx, hy, hz = sx / 2.0, sy / 2.0, sz / 2.0
    cx, cy, cz = center
    corners = np.array(
        [
            [cx - hx, cy - hy, cz - hz],
            [cx + hx, cy - hy, cz - hz],
            [cx + hx, cy + hy, cz - hz],
            [cx - hx, cy + hy, cz - hz],
            [cx - hx, cy - hy, cz + hz],
            [cx + hx, cy - hy, cz + hz],
            [cx + hx, cy + hy, cz + hz],
            [cx - hx, cy + hy, cz + hz],
        ]
    )
    faces = [
        (0, 2, 1), (0, 3, 2),  # -z
        (4, 5, 6), (4, 6, 7),  # +z
        (0, 1, 5), (0, 5, 4),  # -y
        (3, 7, 6), (3, 6, 2),  # +y
        (0, 4, 7), (0, 7, 3),  # -x
        (1, 2, 6), (1, 6, 5),  # +x
    ]
    return mesh_from_faces(corners, faces, material)


def make_pyramid(base: float, height: float, material: MaterialRef | None = None,
                 base_y: float = 0.0, center=(0.0, 0.0)) -> Mesh:
    """Square pyramid, apex up; used for tree canopies and roofs."""
    hb = base / 2.0
    cx, cz = center
    pts = np.array(
        [
            [cx - hb, base_y, cz - hb],
            [cx + hb, base_y, cz - hb],
            [cx + hb, base_y, cz + hb],
            [cx - hb, base_y, cz + hb],
            [cx, base_y + height, cz],
        ]
    )
    faces = [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4), (0, 2, 1), (0, 3, 2)]
    return mesh_from_faces(pts, faces, material)


def merge_meshes(meshes: list[Mesh], material: MaterialRef | None = None) -> Mesh:
    """Concatenate meshes that share one material into a single mesh."""
    meshes = [m for m in meshes if m.triangle_count > 0]
    if not meshes:
        return empty_mesh(material)
    mat = material or meshes[0].material
    has_uv = all(m.uvs is not None for m in meshes)
    positions, normals, uvs, tris = [], [], [], []
    offset = 0
    for m in meshes:
        positions.append(m.positions)
        normals.append(m.normals)
        if has_uv:
            uvs.append(m.uvs)
        tris.append(m.triangles.astype(np.int64) + offset)
        offset += len(m.positions)
    return Mesh(
        positions=np.concatenate(positions),
        normals=np.concatenate(normals),
        triangles=np.concatenate(tris).astype(np.int32),
        material=mat,
        uvs=np.concatenate(uvs) if has_uv else None,
        two_sided=meshes[0].two_sided,
        unlit=meshes[0].unlit,
    )
