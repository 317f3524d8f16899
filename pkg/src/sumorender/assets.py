"""Texture and model library.

Every slot is keyed by name and shipped as a procedural stand-in (generated
textures, primitive-composed models). Users can override any slot by setting
the SUMORENDER_ASSETS environment variable to a directory containing
``textures/<name>.png`` and/or ``models/<name>.obj``. The model text format
is a minimal triangle list: lines ``v x y z`` and ``f i j k`` (1-based).
"""

from __future__ import annotations

import io
import os
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError
from .mesh import MaterialRef, Mesh, make_box, make_pyramid, mesh_from_faces

ASSET_DIR_ENV = "SUMORENDER_ASSETS"

SKY_TEXTURES = (
    "sky_blue",
    "sky_daycloud1",
    "sky_daycloud2",
    "sky_daycloud3",
    "sky_night1",
    "sky_night2",
    "sky_night3",
    "sky_halloween",
)
GROUND_TEXTURES = (
    "ground_grass",
    "ground_stone",
    "ground_sand",
    "ground_chess",
    "ground_chesslarge",
    "ground_halloween",
)

OBJECT_MODELS = (
    "tree",
    "fence",
    "shop",
    "home",
    "block",
    "marker",
    "trafficlight2",
    "trafficlight3",
    "trafficlight_countdown",
)
CAR_MODELS = tuple(f"car{i}" for i in range(10))

_CAR_COLORS = [
    (0.78, 0.12, 0.12),
    (0.12, 0.30, 0.72),
    (0.90, 0.90, 0.92),
    (0.15, 0.15, 0.17),
    (0.75, 0.75, 0.78),
    (0.10, 0.52, 0.25),
    (0.85, 0.55, 0.10),
    (0.45, 0.20, 0.55),
    (0.55, 0.35, 0.20),
    (0.85, 0.80, 0.30),
]


class Texture:
    """RGB texture held as float32 in [0, 1] for filtering."""

    def __init__(self, name: str, pixels: np.ndarray):
        self.name = name
        self.pixels = np.asarray(pixels, dtype=np.float32)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValidationError(f"texture {name!r} must be HxWx3")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def to_png_bytes(self) -> bytes:
        img = Image.fromarray((np.clip(self.pixels, 0, 1) * 255).astype(np.uint8))
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()


def validate_texture_name(name: str, family: str) -> None:
    valid = SKY_TEXTURES if family == "sky" else GROUND_TEXTURES
    if name not in valid:
        raise ValidationError(
            f"unknown {family} texture {name!r}; valid names: {', '.join(valid)}"
        )


def _override_dir() -> Path | None:
    value = os.environ.get(ASSET_DIR_ENV)
    return Path(value) if value else None


def get_texture(name: str) -> Texture:
    if name not in SKY_TEXTURES and name not in GROUND_TEXTURES:
        raise ValidationError(
            f"unknown texture {name!r}; valid names: "
            f"{', '.join(SKY_TEXTURES + GROUND_TEXTURES)}"
        )
    override = _override_dir()
    if override is not None:
        path = override / "textures" / f"{name}.png"
        if path.is_file():
            img = Image.open(path).convert("RGB")
            return Texture(name, np.asarray(img, dtype=np.float32) / 255.0)
    return _procedural_texture(name)


def _rng_for(name: str) -> np.random.Generator:
    # Stable per-name stream so generated assets never change between runs.
    seed = int.from_bytes(name.encode("utf-8"), "little") % (2**32)
    return np.random.default_rng(seed)


@lru_cache(maxsize=32)
def _procedural_texture(name: str) -> Texture:
    if name.startswith("sky_"):
        return Texture(name, _sky_pixels(name))
    return Texture(name, _ground_pixels(name))


def _vertical_gradient(h: int, w: int, top, bottom) -> np.ndarray:
    t = np.linspace(0.0, 1.0, h, dtype=np.float32)[:, None, None]
    top = np.asarray(top, dtype=np.float32)
    bottom = np.asarray(bottom, dtype=np.float32)
    return np.broadcast_to((1 - t) * top + t * bottom, (h, w, 3)).copy()


def _sky_pixels(name: str) -> np.ndarray:
    h, w = 128, 256
    rng = _rng_for(name)
    if name == "sky_blue":
        px = _vertical_gradient(h, w, (0.18, 0.42, 0.85), (0.78, 0.88, 0.97))
    elif name.startswith("sky_daycloud"):
        px = _vertical_gradient(h, w, (0.30, 0.52, 0.88), (0.80, 0.88, 0.95))
        for _ in range(10 + 4 * int(name[-1])):
            cy = rng.uniform(0.25 * h, 0.7 * h)
            cx = rng.uniform(0, w)
            ry = rng.uniform(3, 7)
            rx = rng.uniform(10, 30)
            yy, xx = np.mgrid[0:h, 0:w]
            dist = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2
            blob = np.clip(1.0 - dist, 0, 1)[:, :, None]
            px = px * (1 - 0.8 * blob) + 0.8 * blob * np.array([0.97, 0.97, 0.98])
    elif name.startswith("sky_night"):
        px = _vertical_gradient(h, w, (0.01, 0.01, 0.06), (0.05, 0.05, 0.14))
        count = 120 + 60 * int(name[-1])
        ys = rng.integers(0, int(0.8 * h), count)
        xs = rng.integers(0, w, count)
        mags = rng.uniform(0.4, 1.0, count)
        px[ys, xs] = mags[:, None] * np.array([1.0, 1.0, 0.95])
    else:  # sky_halloween
        px = _vertical_gradient(h, w, (0.10, 0.02, 0.14), (0.85, 0.35, 0.05))
    return px.astype(np.float32)


def _noise(rng: np.random.Generator, h: int, w: int, base, spread: float) -> np.ndarray:
    base = np.asarray(base, dtype=np.float32)
    n = rng.uniform(-spread, spread, (h, w, 1)).astype(np.float32)
    return np.clip(base + n, 0.0, 1.0)


def _ground_pixels(name: str) -> np.ndarray:
    h = w = 128
    rng = _rng_for(name)
    if name == "ground_grass":
        return _noise(rng, h, w, (0.18, 0.42, 0.14), 0.06)
    if name == "ground_stone":
        return _noise(rng, h, w, (0.52, 0.52, 0.54), 0.05)
    if name == "ground_sand":
        return _noise(rng, h, w, (0.80, 0.70, 0.45), 0.05)
    if name == "ground_halloween":
        return _noise(rng, h, w, (0.16, 0.05, 0.18), 0.05)
    # checker patterns: "chess" has 8x8 squares per tile, "chesslarge" 2x2
    squares = 8 if name == "ground_chess" else 2
    yy, xx = np.mgrid[0:h, 0:w]
    mask = ((yy * squares // h) + (xx * squares // w)) % 2
    px = np.where(mask[:, :, None] == 0, 0.92, 0.12).astype(np.float32)
    return np.repeat(px, 3, axis=2)


def load_model_text(text: str, name: str = "<model>") -> Mesh:
    """Parse the minimal mesh format: ``v x y z`` and ``f i j k`` (1-based)."""
    verts: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v" and len(parts) >= 4:
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elif parts[0] == "f" and len(parts) >= 4:
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:4]]
            faces.append(tuple(idx))
    if not verts or not faces:
        raise ValidationError(f"model {name!r} has no usable vertices/faces")
    return mesh_from_faces(np.array(verts), faces, MaterialRef(color=(0.7, 0.7, 0.7)))


def get_model(name: str) -> list[Mesh]:
    """Model parts for a registered name; a part list so colors can differ."""
    if name not in OBJECT_MODELS and name not in CAR_MODELS:
        raise ValidationError(f"unknown model {name!r}")
    override = _override_dir()
    if override is not None:
        path = override / "models" / f"{name}.obj"
        if path.is_file():
            return [load_model_text(path.read_text(encoding="utf-8"), name)]
    return _procedural_model(name)


@lru_cache(maxsize=32)
def _procedural_model(name: str) -> list[Mesh]:
    if name.startswith("car"):
        return _car_model(int(name[3:]))
    builder = {
        "tree": _tree_model,
        "fence": _fence_model,
        "shop": _shop_model,
        "home": _home_model,
        "block": _block_model,
        "marker": _marker_model,
        "trafficlight2": lambda: _trafficlight_model(2),
        "trafficlight3": lambda: _trafficlight_model(3),
        "trafficlight_countdown": lambda: _trafficlight_model(2, countdown=True),
    }[name]
    return builder()


def _tree_model() -> list[Mesh]:
    trunk = make_box(0.4, 2.0, 0.4, MaterialRef(color=(0.36, 0.24, 0.12)), center=(0, 1.0, 0))
    canopy = make_pyramid(2.6, 3.2, MaterialRef(color=(0.10, 0.40, 0.12)), base_y=1.8)
    return [trunk, canopy]


def _fence_model() -> list[Mesh]:
    gray = MaterialRef(color=(0.55, 0.55, 0.58))
    parts = [make_box(0.12, 1.2, 0.12, gray, center=(x, 0.6, 0)) for x in (-1.8, 0.0, 1.8)]
    parts.append(make_box(4.0, 0.08, 0.08, gray, center=(0, 1.1, 0)))
    parts.append(make_box(4.0, 0.08, 0.08, gray, center=(0, 0.6, 0)))
    return parts


def _shop_model() -> list[Mesh]:
    body = make_box(8.0, 4.0, 6.0, MaterialRef(color=(0.75, 0.62, 0.45)), center=(0, 2.0, 0))
    awning = make_box(8.4, 0.2, 1.2, MaterialRef(color=(0.70, 0.15, 0.15)), center=(0, 3.0, -3.4))
    return [body, awning]


def _home_model() -> list[Mesh]:
    body = make_box(7.0, 3.5, 7.0, MaterialRef(color=(0.82, 0.78, 0.68)), center=(0, 1.75, 0))
    roof = make_pyramid(7.8, 2.4, MaterialRef(color=(0.55, 0.20, 0.15)), base_y=3.5)
    return [body, roof]


def _block_model() -> list[Mesh]:
    return [make_box(12.0, 18.0, 12.0, MaterialRef(color=(0.58, 0.60, 0.64)), center=(0, 9.0, 0))]


def _marker_model() -> list[Mesh]:
    # neutral stand-in for unknown poi kinds
    return [make_pyramid(1.0, 2.0, MaterialRef(color=(0.85, 0.15, 0.70)))]


# Lamp centers per design, in model space on the housing front (-Z) face.
TRAFFICLIGHT_HOUSING_TOP = 4.2
LAMP_RADIUS = 0.16
LAMP_FACE_Z = -0.18


def _trafficlight_model(heads: int, countdown: bool = False) -> list[Mesh]:
    pole = make_box(0.18, 3.0, 0.18, MaterialRef(color=(0.25, 0.25, 0.28)), center=(0, 1.5, 0))
    housing_h = 0.55 * heads + 0.25 + (0.7 if countdown else 0.0)
    housing = make_box(
        0.5,
        housing_h,
        0.3,
        MaterialRef(color=(0.12, 0.12, 0.14)),
        center=(0, TRAFFICLIGHT_HOUSING_TOP - housing_h / 2.0, 0),
    )
    return [pole, housing]


def lamp_positions(design_heads: int, countdown: bool = False) -> list[tuple[str, np.ndarray]]:
    """(color_slot, model-space center) per lamp, top to bottom."""
    slots = ["red", "green"] if design_heads == 2 else ["red", "yellow", "green"]
    out = []
    y = TRAFFICLIGHT_HOUSING_TOP - 0.35 - (0.7 if countdown else 0.0)
    for slot in slots:
        out.append((slot, np.array([0.0, y, LAMP_FACE_Z])))
        y -= 0.55
    return out


def _car_model(index: int) -> list[Mesh]:
    body_color = MaterialRef(color=_CAR_COLORS[index % len(_CAR_COLORS)])
    dark = MaterialRef(color=(0.10, 0.10, 0.12))
    # ~4.4 m long, forward along -Z, base on the ground plane
    body = make_box(1.8, 0.7, 4.4, body_color, center=(0, 0.60, 0))
    cabin = make_box(1.6, 0.55, 2.0, MaterialRef(color=(0.20, 0.22, 0.28)), center=(0, 1.2, 0.2))
    wheels = [
        make_box(0.25, 0.5, 0.7, dark, center=(sx * 0.85, 0.25, sz * 1.4))
        for sx in (-1, 1)
        for sz in (-1, 1)
    ]
    return [body, cabin] + wheels
