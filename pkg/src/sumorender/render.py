"""Software renderer: cameras, perspective projection, z-buffered triangle
rasterization with flat Lambert shading, and texture sampling.

No GPU dependency; frames render headless on any platform. A frame's buffer
is owned by one caller, the scene is shared read-only, so rendering many
frames concurrently is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from . import assets
from .errors import RenderError, ValidationError
from .geom import Transform, compass_to_dir2, to_world, unit
from .mesh import MaterialRef, Mesh, face_normals
from .scene import SceneGraph, SignalHead
from .signals import HeadDesign, LampColor, countdown_at, display_state_at

DEFAULT_WIDTH = 1280
DEFAULT_HEIGHT = 720
DEFAULT_VFOV = 60.0
DEFAULT_NEAR = 0.3
DEFAULT_FAR = 5000.0

AMBIENT = 0.35
DIFFUSE = 0.65

_LAMP_RGB = {
    LampColor.GREEN: (0.1, 0.95, 0.2),
    LampColor.YELLOW: (0.98, 0.85, 0.1),
    LampColor.RED: (0.95, 0.12, 0.1),
    LampColor.DARK: (0.15, 0.15, 0.15),
}
_LAMP_OFF = (0.16, 0.16, 0.16)


@dataclass
class Camera:
    position: np.ndarray
    right: np.ndarray
    up: np.ndarray
    forward: np.ndarray
    vertical_fov: float = DEFAULT_VFOV
    aspect: float = DEFAULT_WIDTH / DEFAULT_HEIGHT
    near: float = DEFAULT_NEAR
    far: float = DEFAULT_FAR

    def __post_init__(self):
        if not (0.0 < self.vertical_fov < 180.0):
            raise ValidationError(f"vertical fov out of range: {self.vertical_fov}")
        if not (0.0 < self.near < self.far):
            raise ValidationError("camera requires 0 < near < far")
        basis = np.vstack([self.right, self.up, self.forward])
        if not np.allclose(basis @ basis.T, np.eye(3), atol=1e-9):
            raise ValidationError("camera basis is not orthonormal")

    @classmethod
    def look_at(cls, position, target, vertical_fov=DEFAULT_VFOV,
                aspect=DEFAULT_WIDTH / DEFAULT_HEIGHT, near=DEFAULT_NEAR,
                far=DEFAULT_FAR) -> "Camera":
        position = np.asarray(position, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        forward = unit(target - position)
        world_up = np.array([0.0, 1.0, 0.0])
        if abs(float(np.dot(forward, world_up))) > 0.999999:
            world_up = np.array([0.0, 0.0, -1.0])
        right = unit(np.cross(forward, world_up))
        up = np.cross(right, forward)
        return cls(position, right, up, forward, vertical_fov, aspect, near, far)


@dataclass
class CinematicPath:
    waypoints: list[tuple[float, np.ndarray, np.ndarray]]  # (t, position, look_at)

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise ValidationError("cinematic path needs at least 2 waypoints")
        times = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError("cinematic waypoint times must be strictly increasing")

    @property
    def span(self) -> tuple[float, float]:
        return self.waypoints[0][0], self.waypoints[-1][0]


def _hermite(p0, p1, m0, m1, h: float, s: float):
    """Cubic Hermite on [0, 1] with tangents scaled by the segment length h."""
    s2, s3 = s * s, s * s * s
    return (
        (2 * s3 - 3 * s2 + 1) * p0
        + (s3 - 2 * s2 + s) * h * m0
        + (-2 * s3 + 3 * s2) * p1
        + (s3 - s2) * h * m1
    )


def sample_cinematic_path(path: CinematicPath, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Pose on the path at time t: Catmull-Rom through the waypoints.

    Tangents use the finite-difference form over the waypoint times, which
    reduces to exact linear interpolation on collinear equally-spaced points.
    Times outside the span clamp to the nearest endpoint.
    """
    wps = path.waypoints
    t0, t1 = path.span
    if t <= t0:
        return wps[0][1].copy(), wps[0][2].copy()
    if t >= t1:
        return wps[-1][1].copy(), wps[-1][2].copy()
    hi = next(i for i in range(1, len(wps)) if wps[i][0] >= t)
    lo = hi - 1

    def tangent(i: int, channel: int) -> np.ndarray:
        a = max(i - 1, 0)
        b = min(i + 1, len(wps) - 1)
        return (wps[b][channel] - wps[a][channel]) / (wps[b][0] - wps[a][0])

    h = wps[hi][0] - wps[lo][0]
    s = (t - wps[lo][0]) / h
    pos = _hermite(wps[lo][1], wps[hi][1], tangent(lo, 1), tangent(hi, 1), h, s)
    look = _hermite(wps[lo][2], wps[hi][2], tangent(lo, 2), tangent(hi, 2), h, s)
    return pos, look


@dataclass
class EulerianParams:
    position: np.ndarray
    look_at: np.ndarray


@dataclass
class LagrangianParams:
    vehicle_id: str
    behind: float = 8.0
    height: float = 4.0
    look_ahead: float = 10.0
    look_height: float = 1.0


@dataclass
class CinematicParams:
    path: CinematicPath


def build_camera(mode: str, params, scene: SceneGraph, t: float,
                 vertical_fov=DEFAULT_VFOV, aspect=DEFAULT_WIDTH / DEFAULT_HEIGHT,
                 near=DEFAULT_NEAR, far=DEFAULT_FAR) -> Camera:
    """Camera pose for one frame in the requested mode."""
    kw = dict(vertical_fov=vertical_fov, aspect=aspect, near=near, far=far)
    if mode == "eulerian":
        return Camera.look_at(params.position, params.look_at, **kw)
    if mode == "cinematic":
        pos, look = sample_cinematic_path(params.path, t)
        return Camera.look_at(pos, look, **kw)
    if mode == "lagrangian":
        track = next(
            (tr for tr, _ in scene.vehicle_tracks if tr.vehicle_id == params.vehicle_id),
            None,
        )
        if track is None:
            raise RenderError(f"no track for vehicle {params.vehicle_id!r}")
        frame = track.frame_at(t)
        if frame is None:
            raise RenderError(
                f"vehicle {params.vehicle_id!r} is not present at t={t:.3f}"
            )
        vpos = to_world(track.x[frame], track.y[frame])
        dx, dy = compass_to_dir2(track.heading_deg[frame])
        fwd = np.array([dx, 0.0, -dy])
        cam_pos = vpos - fwd * params.behind + np.array([0.0, params.height, 0.0])
        target = vpos + fwd * params.look_ahead + np.array([0.0, params.look_height, 0.0])
        return Camera.look_at(cam_pos, target, **kw)
    raise ValidationError(f"unknown camera mode {mode!r}")


@dataclass
class FrameBuffer:
    width: int
    height: int
    color: np.ndarray = field(init=False)
    depth: np.ndarray = field(init=False)
    far: float = DEFAULT_FAR

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("framebuffer dimensions must be positive")
        self.color = np.zeros((self.height, self.width, 3), dtype=np.uint8)
        self.depth = np.full((self.height, self.width), self.far, dtype=np.float64)

    def to_image(self) -> Image.Image:
        return Image.fromarray(self.color, mode="RGB")

    def save_png(self, path) -> None:
        self.to_image().save(path, format="PNG")


def project_points(camera: Camera, points: np.ndarray, width: int, height: int):
    """World points to (pixel xy, camera-space depth). Row 0 is the top."""
    rel = points - camera.position
    cx = rel[:, 0] * camera.right[0] + rel[:, 1] * camera.right[1] + rel[:, 2] * camera.right[2]
    cy = rel[:, 0] * camera.up[0] + rel[:, 1] * camera.up[1] + rel[:, 2] * camera.up[2]
    cz = rel[:, 0] * camera.forward[0] + rel[:, 1] * camera.forward[1] + rel[:, 2] * camera.forward[2]
    tan_half = math.tan(math.radians(camera.vertical_fov) / 2.0)
    safe_z = np.where(cz > 1e-12, cz, 1e-12)
    ndc_x = cx / (safe_z * tan_half * camera.aspect)
    ndc_y = cy / (safe_z * tan_half)
    px = (ndc_x * 0.5 + 0.5) * width
    py = (0.5 - ndc_y * 0.5) * height
    return np.column_stack([px, py]), cz


def _clip_near(poly_cam: np.ndarray, attrs: np.ndarray | None, near: float):
    """Sutherland-Hodgman clip of a camera-space polygon against z = near."""
    out_pts, out_attrs = [], []
    n = len(poly_cam)
    for i in range(n):
        a, b = poly_cam[i], poly_cam[(i + 1) % n]
        a_in, b_in = a[2] >= near, b[2] >= near
        if a_in:
            out_pts.append(a)
            if attrs is not None:
                out_attrs.append(attrs[i])
        if a_in != b_in:
            f = (near - a[2]) / (b[2] - a[2])
            out_pts.append(a + f * (b - a))
            if attrs is not None:
                out_attrs.append(attrs[i] + f * (attrs[(i + 1) % n] - attrs[i]))
    if len(out_pts) < 3:
        return None, None
    return np.array(out_pts), (np.array(out_attrs) if attrs is not None else None)


def rasterize_triangle(fb: FrameBuffer, xy: np.ndarray, depth: np.ndarray,
                       color=None, uv: np.ndarray | None = None,
                       texture: "assets.Texture | None" = None,
                       shade: float = 1.0) -> None:
    """Fill one screen-space triangle into the framebuffer.

    A pixel is covered iff its center lies inside the triangle under the
    top-left fill rule; the depth test is strict-less. ``depth`` holds the
    camera-space z of each vertex; depth and texture coordinates are
    interpolated perspective-correctly. Degenerate triangles are skipped.
    """
    x0, y0 = xy[0]
    x1, y1 = xy[1]
    x2, y2 = xy[2]
    area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    if area2 == 0.0:
        return
    if area2 < 0.0:  # reorder so edge functions are positive inside
        xy = xy[[0, 2, 1]]
        depth = depth[[0, 2, 1]]
        if uv is not None:
            uv = uv[[0, 2, 1]]
        x0, y0 = xy[0]
        x1, y1 = xy[1]
        x2, y2 = xy[2]
        area2 = -area2

    min_x = max(math.ceil(min(x0, x1, x2) - 0.5), 0)
    max_x = min(math.floor(max(x0, x1, x2) - 0.5), fb.width - 1)
    min_y = max(math.ceil(min(y0, y1, y2) - 0.5), 0)
    max_y = min(math.floor(max(y0, y1, y2) - 0.5), fb.height - 1)
    if min_x > max_x or min_y > max_y:
        return

    xs = np.arange(min_x, max_x + 1, dtype=np.float64) + 0.5
    ys = np.arange(min_y, max_y + 1, dtype=np.float64) + 0.5
    px = xs[None, :]
    py = ys[:, None]

    def edge(ax, ay, bx, by):
        # E > 0 strictly inside; E == 0 included only for top/left edges
        e = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        dxe, dye = bx - ax, by - ay
        top_left = (dye == 0.0 and dxe > 0.0) or dye < 0.0
        return (e > 0.0) | ((e == 0.0) if top_left else False), e

    in0, e0 = edge(x0, y0, x1, y1)
    in1, e1 = edge(x1, y1, x2, y2)
    in2, e2 = edge(x2, y2, x0, y0)
    mask = in0 & in1 & in2
    if not mask.any():
        return

    # barycentric weights from the opposite edge functions
    b0 = e1 / area2
    b1 = e2 / area2
    b2 = e0 / area2
    inv_z = b0 / depth[0] + b1 / depth[1] + b2 / depth[2]
    with np.errstate(divide="ignore"):
        z = 1.0 / inv_z

    region = (slice(min_y, max_y + 1), slice(min_x, max_x + 1))
    mask &= z < fb.depth[region]
    mask &= z > 0.0
    if not mask.any():
        return

    if texture is not None and uv is not None:
        u = (b0 * uv[0, 0] / depth[0] + b1 * uv[1, 0] / depth[1] + b2 * uv[2, 0] / depth[2]) * z
        v = (b0 * uv[0, 1] / depth[0] + b1 * uv[1, 1] / depth[1] + b2 * uv[2, 1] / depth[2]) * z
        texel = sample_texture(texture, np.column_stack([u[mask], v[mask]]))
        rgb = np.clip(texel * shade * 255.0, 0.0, 255.0).astype(np.uint8)
        fb.color[region][mask] = rgb
    else:
        rgb = np.clip(np.asarray(color, dtype=np.float64) * 255.0, 0.0, 255.0).astype(np.uint8)
        fb.color[region][mask] = rgb
    fb.depth[region][mask] = z[mask]


def sample_texture(texture: "assets.Texture", uv: np.ndarray) -> np.ndarray:
    """Bilinear texture sample with wrap-around addressing. uv is (N, 2)."""
    px = texture.pixels
    h, w = px.shape[0], px.shape[1]
    u = np.mod(uv[:, 0], 1.0) * w - 0.5
    v = np.mod(uv[:, 1], 1.0) * h - 0.5
    x0 = np.floor(u).astype(np.int64)
    y0 = np.floor(v).astype(np.int64)
    fx = (u - x0)[:, None]
    fy = (v - y0)[:, None]
    x1 = (x0 + 1) % w
    y1 = (y0 + 1) % h
    x0 %= w
    y0 %= h
    top = px[y0, x0] * (1 - fx) + px[y0, x1] * fx
    bottom = px[y1, x0] * (1 - fx) + px[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def sky_direction_uv(directions: np.ndarray) -> np.ndarray:
    """Equirectangular uv for unit view directions (azimuth/elevation map)."""
    azimuth = np.arctan2(directions[..., 0], -directions[..., 2])
    elevation = np.arcsin(np.clip(directions[..., 1], -1.0, 1.0))
    u = np.mod(azimuth / (2.0 * math.pi), 1.0)
    v = 0.5 - elevation / math.pi
    return np.stack([u, v], axis=-1)


def _fill_sky(fb: FrameBuffer, camera: Camera, texture: "assets.Texture") -> None:
    tan_half = math.tan(math.radians(camera.vertical_fov) / 2.0)
    xs = (np.arange(fb.width) + 0.5) / fb.width * 2.0 - 1.0
    ys = 1.0 - (np.arange(fb.height) + 0.5) / fb.height * 2.0
    gx = xs[None, :, None] * (tan_half * camera.aspect)
    gy = ys[:, None, None] * tan_half
    dirs = camera.forward + gx * camera.right + gy * camera.up
    dirs = dirs / np.sqrt(np.sum(dirs * dirs, axis=-1, keepdims=True))
    uv = sky_direction_uv(dirs).reshape(-1, 2)
    rgb = sample_texture(texture, uv).reshape(fb.height, fb.width, 3)
    fb.color[:] = np.clip(rgb * 255.0, 0.0, 255.0).astype(np.uint8)


def _shade_factor(normal: np.ndarray, light_dir: np.ndarray) -> float:
    # light_dir is the propagation direction; illumination comes from -light_dir
    lambert = max(0.0, float(-np.dot(normal, light_dir)))
    return AMBIENT + DIFFUSE * lambert


def _draw_mesh(fb: FrameBuffer, camera: Camera, mesh: Mesh,
               light_dir: np.ndarray, texture_cache: dict) -> None:
    if mesh.triangle_count == 0:
        return
    xy, cz = project_points(camera, mesh.positions, fb.width, fb.height)
    tris = mesh.triangles
    tri_z = cz[tris]
    # fully behind the near plane or beyond the far plane: cull early
    keep = ~(np.all(tri_z < camera.near, axis=1) | np.all(tri_z > camera.far, axis=1))
    if not keep.any():
        return

    texture = None
    if mesh.material.kind == "textured":
        name = mesh.material.texture_name
        if name not in texture_cache:
            texture_cache[name] = assets.get_texture(name)
        texture = texture_cache[name]

    normals = face_normals(mesh.positions, mesh.triangles)
    forward = camera.forward

    for ti in np.nonzero(keep)[0]:
        idx = tris[ti]
        zs = cz[idx]
        normal = normals[ti]
        if not mesh.two_sided:
            # backface: normal pointing away from the camera
            view = mesh.positions[idx[0]] - camera.position
            if float(np.dot(normal, view)) > 0.0:
                continue
        shade = 1.0 if mesh.unlit else _shade_factor(
            normal if float(np.dot(normal, forward)) < 0 or not mesh.two_sided else -normal,
            light_dir,
        )
        uvs = mesh.uvs[idx] if mesh.uvs is not None else None
        if np.all(zs >= camera.near):
            color = None
            if texture is None:
                color = np.asarray(mesh.material.color) * shade
            rasterize_triangle(fb, xy[idx], zs, color=color, uv=uvs,
                               texture=texture, shade=shade)
            continue
        # crosses the near plane: clip in camera space and re-project
        cam_pts = _camera_space(camera, mesh.positions[idx])
        clipped, clipped_uv = _clip_near(cam_pts, uvs, camera.near)
        if clipped is None:
            continue
        cxy, cdepth = _project_camera_space(camera, clipped, fb.width, fb.height)
        for k in range(1, len(clipped) - 1):
            fan = [0, k, k + 1]
            color = None
            if texture is None:
                color = np.asarray(mesh.material.color) * shade
            rasterize_triangle(
                fb, cxy[fan], cdepth[fan], color=color,
                uv=clipped_uv[fan] if clipped_uv is not None else None,
                texture=texture, shade=shade,
            )


def _camera_space(camera: Camera, points: np.ndarray) -> np.ndarray:
    rel = points - camera.position
    return np.column_stack([
        rel[:, 0] * camera.right[0] + rel[:, 1] * camera.right[1] + rel[:, 2] * camera.right[2],
        rel[:, 0] * camera.up[0] + rel[:, 1] * camera.up[1] + rel[:, 2] * camera.up[2],
        rel[:, 0] * camera.forward[0] + rel[:, 1] * camera.forward[1] + rel[:, 2] * camera.forward[2],
    ])


def _project_camera_space(camera: Camera, cam_pts: np.ndarray, width: int, height: int):
    tan_half = math.tan(math.radians(camera.vertical_fov) / 2.0)
    cz = cam_pts[:, 2]
    safe_z = np.where(cz > 1e-12, cz, 1e-12)
    ndc_x = cam_pts[:, 0] / (safe_z * tan_half * camera.aspect)
    ndc_y = cam_pts[:, 1] / (safe_z * tan_half)
    px = (ndc_x * 0.5 + 0.5) * width
    py = (0.5 - ndc_y * 0.5) * height
    return np.column_stack([px, py]), cz


def _instance_mesh(mesh: Mesh, transform: Transform) -> Mesh:
    return Mesh(
        positions=transform.apply(mesh.positions),
        normals=transform.apply_normals(mesh.normals),
        triangles=mesh.triangles,
        material=mesh.material,
        uvs=mesh.uvs,
        two_sided=mesh.two_sided,
        unlit=mesh.unlit,
    )


# 7-segment encodings for countdown numerals (segments a-g).
_SEGMENTS = {
    "a": ((-0.5, 1.0), (0.5, 1.0)),
    "b": ((0.5, 1.0), (0.5, 0.0)),
    "c": ((0.5, 0.0), (0.5, -1.0)),
    "d": ((-0.5, -1.0), (0.5, -1.0)),
    "e": ((-0.5, 0.0), (-0.5, -1.0)),
    "f": ((-0.5, 1.0), (-0.5, 0.0)),
    "g": ((-0.5, 0.0), (0.5, 0.0)),
}
_DIGIT_SEGMENTS = {
    0: "abcdef", 1: "bc", 2: "abged", 3: "abgcd", 4: "fgbc",
    5: "afgcd", 6: "afgedc", 7: "abc", 8: "abcdefg", 9: "abcfgd",
}


def _digit_quads(value: int, origin: np.ndarray, right: np.ndarray, up: np.ndarray,
                 size: float, rgb) -> list[Mesh]:
    quads = []
    text = f"{min(max(value, 0), 99):02d}"
    for pos, ch in enumerate(text):
        center = origin + right * ((pos - 0.5) * size * 1.4)
        for seg in _DIGIT_SEGMENTS[int(ch)]:
            (ax, ay), (bx, by) = _SEGMENTS[seg]
            a = center + right * (ax * size * 0.5) + up * (ay * size * 0.5)
            b = center + right * (bx * size * 0.5) + up * (by * size * 0.5)
            quads.append(_line_quad(a, b, size * 0.12, rgb))
    return quads


def _line_quad(a: np.ndarray, b: np.ndarray, width: float, rgb) -> Mesh:
    d = b - a
    n = np.cross(d, np.array([0.0, 0.0, -1.0]))
    ln = np.sqrt(np.sum(n * n))
    if ln < 1e-12:
        n = np.cross(d, np.array([0.0, 1.0, 0.0]))
        ln = np.sqrt(np.sum(n * n))
    n = n / ln * (width / 2.0)
    pts = np.array([a - n, a + n, b - n, b + n])
    return mesh_from_quad(pts, MaterialRef(color=tuple(rgb)))


def mesh_from_quad(pts: np.ndarray, material) -> Mesh:
    normals = np.tile(unit(np.cross(pts[1] - pts[0], pts[2] - pts[0])), (4, 1))
    tris = np.array([[0, 1, 2], [2, 1, 3]], dtype=np.int32)
    return Mesh(pts, normals, tris, material, two_sided=True, unlit=True)


def _lamp_quads(head: SignalHead, scene: SceneGraph, t: float,
                yellow_duration: float) -> list[Mesh]:
    heads = 3 if head.design is HeadDesign.THREE_HEAD else 2
    is_countdown = head.design is HeadDesign.COUNTDOWN
    if head.dark:
        display = LampColor.DARK
    else:
        display = display_state_at(
            scene.signal_timeline, head.tls_id, head.link_index, t,
            head.design, yellow_duration,
        )
    slot_names = {LampColor.RED: "red", LampColor.YELLOW: "yellow", LampColor.GREEN: "green"}
    lit_slot = slot_names.get(display)

    m = head.transform.matrix()
    right = m[:3, 0].copy()
    up = m[:3, 1].copy()
    out: list[Mesh] = []
    for slot, center_model in assets.lamp_positions(heads, countdown=is_countdown):
        center = head.transform.apply(center_model[None, :])[0]
        rgb = _LAMP_RGB[LampColor(slot)] if slot == lit_slot else _LAMP_OFF
        r = assets.LAMP_RADIUS
        pts = np.array([
            center - right * r - up * r,
            center + right * r - up * r,
            center - right * r + up * r,
            center + right * r + up * r,
        ])
        out.append(mesh_from_quad(pts, MaterialRef(color=rgb)))

    if is_countdown and not head.dark:
        value = countdown_at(scene.signal_timeline, head.tls_id, head.link_index, t)
        rgb = _LAMP_RGB.get(display, _LAMP_OFF)
        origin_model = np.array([0.0, assets.TRAFFICLIGHT_HOUSING_TOP - 0.35,
                                 assets.LAMP_FACE_Z])
        origin = head.transform.apply(origin_model[None, :])[0]
        out.extend(_digit_quads(value, origin, right, up, 0.28, rgb))
    return out


def render_frame(
    scene: SceneGraph,
    camera: Camera,
    t: float,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    yellow_duration: float = 3.0,
) -> FrameBuffer:
    """Render one frame of the scene at simulation time t.

    Draw order is irrelevant to the output (z-buffer, strict-less test).
    Vehicles are posed from their track sample nearest below t and are
    absent outside their lifespans.
    """
    fb = FrameBuffer(width=width, height=height, far=camera.far)
    texture_cache: dict = {}
    _fill_sky(fb, camera, assets.get_texture(scene.sky.texture_name))
    light_dir = scene.light.direction

    _draw_mesh(fb, camera, scene.ground_mesh, light_dir, texture_cache)
    _draw_mesh(fb, camera, scene.road_surface, light_dir, texture_cache)
    _draw_mesh(fb, camera, scene.road_markings, light_dir, texture_cache)

    for instance in scene.static_objects:
        for part in scene.models[instance.model]:
            _draw_mesh(fb, camera, _instance_mesh(part, instance.transform),
                       light_dir, texture_cache)

    for head in scene.signal_heads:
        for quad in _lamp_quads(head, scene, t, yellow_duration):
            _draw_mesh(fb, camera, quad, light_dir, texture_cache)

    for track, model_index in scene.vehicle_tracks:
        frame = track.frame_at(t)
        if frame is None:
            continue
        transform = Transform(
            translation=to_world(track.x[frame], track.y[frame]),
            yaw_deg=-float(track.heading_deg[frame]),
        )
        for part in scene.models[f"car{model_index}"]:
            _draw_mesh(fb, camera, _instance_mesh(part, transform),
                       light_dir, texture_cache)
    return fb
