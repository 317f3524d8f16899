"""Scene graph assembly: tessellated road network, markings, static objects,
vehicle instances, sky and ground.

Layer heights: the ground plane sits at 0, road surfaces at +0.01 m and
demarcation lines a further +0.02 m up, so the z-buffered rasterizer never
fights between layers.
"""

from __future__ import annotations

import hashlib
import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import assets
from .errors import ValidationError
from .geom import Transform, shoelace_area, triangle_area2, unit
from .ingest import PoiSet, RoadNetwork, SignalStateLog
from .mesh import MaterialRef, Mesh, empty_mesh, merge_meshes, mesh_from_faces
from .signals import HeadDesign, SignalTimeline, build_signal_timeline
from .smoothing import SmoothedTrack

log = logging.getLogger(__name__)

ROAD_HEIGHT = 0.01
MARKING_HEIGHT = ROAD_HEIGHT + 0.02
GROUND_MARGIN = 200.0  # meters beyond the network bounds
SKY_RADIUS_FACTOR = 10.0  # times the network diagonal

# Road marking geometry; the usual 1:2 dash pattern, configurable per job.
DASH_LENGTH = 3.0
GAP_LENGTH = 6.0
LINE_WIDTH = 0.15

ROAD_COLOR = (0.33, 0.33, 0.35)
MARKING_COLOR = (0.93, 0.93, 0.93)

VEHICLE_MODEL_COUNT = 10

_POI_KIND_MODELS = {
    "tree": "tree",
    "fence": "fence",
    "shop": "shop",
    "home": "home",
    "block": "block",
    "trafficlight2": "trafficlight2",
    "trafficlight3": "trafficlight3",
    "trafficlight_countdown": "trafficlight_countdown",
}
_SIGNAL_KIND_DESIGNS = {
    "trafficlight2": HeadDesign.TWO_HEAD,
    "trafficlight3": HeadDesign.THREE_HEAD,
    "trafficlight_countdown": HeadDesign.COUNTDOWN,
}
_TLS_POI_ID = re.compile(r"^tl:(?P<tls>.+):(?P<link>\d+)$")


@dataclass
class SkySpec:
    texture_name: str
    radius: float
    center: np.ndarray  # world frame


@dataclass
class GroundSpec:
    texture_name: str
    tile_size: float
    extent: tuple[float, float, float, float]  # world xmin, zmin, xmax, zmax


@dataclass
class ObjectInstance:
    kind: str
    model: str
    transform: Transform
    poi_id: str = ""


@dataclass
class SignalHead:
    tls_id: str | None  # None when unbound: displayed dark
    link_index: int
    design: HeadDesign
    transform: Transform

    @property
    def dark(self) -> bool:
        return self.tls_id is None


@dataclass
class DirectionalLight:
    direction: np.ndarray = field(
        default_factory=lambda: unit(np.array([-0.4, -1.0, -0.3]))
    )
    intensity: float = 1.0


@dataclass
class SceneGraph:
    """Immutable render-ready world; share read-only across workers."""

    sky: SkySpec
    ground: GroundSpec
    ground_mesh: Mesh
    road_surface: Mesh
    road_markings: Mesh
    static_objects: list[ObjectInstance]
    signal_heads: list[SignalHead]
    signal_timeline: SignalTimeline
    vehicle_tracks: list[tuple[SmoothedTrack, int]]
    models: dict[str, list[Mesh]]
    light: DirectionalLight
    rng_seed: int

    def static_triangle_count(self) -> int:
        count = (
            self.ground_mesh.triangle_count
            + self.road_surface.triangle_count
            + self.road_markings.triangle_count
        )
        for obj in self.static_objects:
            count += sum(p.triangle_count for p in self.models[obj.model])
        return count


def _segment_frames(shape: np.ndarray):
    """Per-segment (p0, p1, direction, left normal), skipping zero-length runs."""
    frames = []
    for a, b in zip(shape[:-1], shape[1:]):
        d = b - a
        length = math.hypot(d[0], d[1])
        if length < 1e-9:
            log.warning("skipping zero-length polyline segment at %s", a)
            continue
        d = d / length
        left = np.array([-d[1], d[0]])
        frames.append((a, b, d, left))
    return frames


def tessellate_lane_ribbon(shape: np.ndarray, width: float) -> Mesh:
    """Tessellate a lane centerline into a flat ribbon in the ground plane.

    One quad per segment, offset half a width to each side, plus a triangle
    fan filling the wedge on the outer side of every bend. Collinear interior
    vertices produce no fan.
    """
    shape = np.asarray(shape, dtype=np.float64)
    if shape.ndim != 2 or len(shape) < 2:
        raise ValidationError("ribbon tessellation requires a polyline of >= 2 points")
    if width <= 0:
        raise ValidationError(f"ribbon width must be positive, got {width}")
    half = width / 2.0
    frames = _segment_frames(shape)
    if not frames:
        raise ValidationError("polyline has no non-degenerate segments")

    positions: list[np.ndarray] = []
    faces: list[tuple[int, int, int]] = []

    def add_quad(a_l, a_r, b_l, b_r):
        i = len(positions)
        positions.extend([a_l, a_r, b_l, b_r])
        faces.append((i, i + 1, i + 2))
        faces.append((i + 2, i + 1, i + 3))

    for a, b, _, left in frames:
        off = left * half
        add_quad(a + off, a - off, b + off, b - off)

    # Wedge fans between consecutive segments, on the outer side of the bend.
    for (a0, b0, d0, l0), (a1, b1, d1, l1) in zip(frames[:-1], frames[1:]):
        if not np.array_equal(b0, a1):
            continue  # a zero-length run was skipped in between
        turn = d0[0] * d1[1] - d0[1] * d1[0]
        if abs(turn) < 1e-12:
            continue  # collinear: quads share the cross-section exactly
        pivot = b0
        if turn > 0:  # left turn: wedge opens on the right side
            start, end = -l0 * half, -l1 * half
        else:
            start, end = l0 * half, l1 * half
        angle = math.atan2(
            start[0] * end[1] - start[1] * end[0], float(np.dot(start, end))
        )
        steps = max(1, math.ceil(abs(angle) / (math.pi / 12)))
        base = len(positions)
        positions.append(pivot)
        for k in range(steps + 1):
            f = k / steps
            c, s = math.cos(angle * f), math.sin(angle * f)
            positions.append(pivot + np.array([start[0] * c - start[1] * s,
                                               start[0] * s + start[1] * c]))
        for k in range(steps):
            tri = (base, base + 1 + k, base + 2 + k)
            p0, p1, p2 = (positions[i] for i in tri)
            if abs(triangle_area2(p0, p1, p2)) > 1e-12:
                faces.append(tri)

    pts2 = np.array(positions)
    pts3 = np.column_stack([pts2[:, 0], np.zeros(len(pts2)), -pts2[:, 1]])
    tris = np.array(faces, dtype=np.int64)
    normals = np.tile(np.array([0.0, 1.0, 0.0]), (len(pts3), 1))
    return Mesh(pts3, normals, tris, MaterialRef(color=ROAD_COLOR), two_sided=True)


def triangulate_junction(shape: np.ndarray) -> Mesh:
    """Ear-clip a junction polygon into a triangle mesh in the ground plane.

    Falls back to a centroid fan (with a warning) if clipping stalls, which
    happens on self-intersecting input.
    """
    poly = np.asarray(shape, dtype=np.float64)
    if len(poly) < 3:
        raise ValidationError("junction polygon needs at least 3 vertices")
    tris2d = _ear_clip(poly)
    if tris2d is not None:
        # self-intersecting input can survive clipping but gets the area wrong
        pts, faces = tris2d
        got = sum(abs(triangle_area2(pts[a], pts[b], pts[c])) / 2.0 for a, b, c in faces)
        want = abs(shoelace_area(poly))
        if abs(got - want) > max(1e-9, 1e-6 * want):
            tris2d = None
    if tris2d is None:
        log.warning("junction polygon could not be ear-clipped; using centroid fan")
        tris2d = _centroid_fan(poly)
    pts, faces = tris2d
    pts3 = np.column_stack([pts[:, 0], np.zeros(len(pts)), -pts[:, 1]])
    normals = np.tile(np.array([0.0, 1.0, 0.0]), (len(pts3), 1))
    return Mesh(pts3, normals, np.array(faces, dtype=np.int64),
                MaterialRef(color=ROAD_COLOR), two_sided=True)


def _ear_clip(poly: np.ndarray):
    indices = list(range(len(poly)))
    if shoelace_area(poly) < 0:
        indices.reverse()
    faces: list[tuple[int, int, int]] = []

    def is_ear(i_prev: int, i_cur: int, i_next: int) -> bool:
        a, b, c = poly[i_prev], poly[i_cur], poly[i_next]
        if triangle_area2(a, b, c) <= 1e-12:
            return False
        for j in indices:
            if j in (i_prev, i_cur, i_next):
                continue
            p = poly[j]
            if (
                triangle_area2(a, b, p) >= -1e-12
                and triangle_area2(b, c, p) >= -1e-12
                and triangle_area2(c, a, p) >= -1e-12
            ):
                return False
        return True

    guard = 0
    while len(indices) > 3:
        guard += 1
        if guard > 2 * len(poly) ** 2:
            return None
        clipped = False
        for k in range(len(indices)):
            i_prev = indices[k - 1]
            i_cur = indices[k]
            i_next = indices[(k + 1) % len(indices)]
            area2 = triangle_area2(poly[i_prev], poly[i_cur], poly[i_next])
            if abs(area2) <= 1e-12:
                # collinear vertex: drop it, it adds no area
                indices.pop(k)
                clipped = True
                break
            if is_ear(i_prev, i_cur, i_next):
                faces.append((i_prev, i_cur, i_next))
                indices.pop(k)
                clipped = True
                break
        if not clipped:
            return None
    if len(indices) == 3:
        if abs(triangle_area2(*(poly[i] for i in indices))) > 1e-12:
            faces.append(tuple(indices))
    if not faces:
        return None
    return poly, faces


def _centroid_fan(poly: np.ndarray):
    centroid = poly.mean(axis=0)
    pts = np.vstack([poly, centroid])
    c = len(poly)
    faces = []
    for i in range(len(poly)):
        j = (i + 1) % len(poly)
        if abs(triangle_area2(poly[i], poly[j], centroid)) > 1e-12:
            faces.append((i, j, c))
    return pts, faces


def _offset_polyline(shape: np.ndarray, offset: float) -> np.ndarray:
    """Offset a polyline sideways (positive = left of travel), miter joints."""
    frames = _segment_frames(shape)
    if not frames:
        return shape.copy()
    pts = [frames[0][0] + frames[0][3] * offset]
    for (a0, b0, d0, l0), (a1, b1, d1, l1) in zip(frames[:-1], frames[1:]):
        m = l0 + l1
        norm = math.hypot(m[0], m[1])
        if norm < 1e-9:  # U-turn; fall back to the first normal
            pts.append(b0 + l0 * offset)
            continue
        m = m / norm
        denom = float(np.dot(m, l0))
        scale = offset / denom if abs(denom) > 1e-6 else offset
        pts.append(b0 + m * scale)
    pts.append(frames[-1][1] + frames[-1][3] * offset)
    return np.array(pts)


def _arclength_point(shape: np.ndarray, s: float) -> np.ndarray:
    """Point at arclength s along a polyline (clamped to the ends)."""
    remaining = s
    for a, b in zip(shape[:-1], shape[1:]):
        seg = math.hypot(*(b - a))
        if remaining <= seg:
            if seg == 0:
                return a.copy()
            return a + (b - a) * (remaining / seg)
        remaining -= seg
    return shape[-1].copy()


def _sub_polyline(shape: np.ndarray, s0: float, s1: float) -> np.ndarray:
    """Slice a polyline between arclengths s0 < s1."""
    pts = [_arclength_point(shape, s0)]
    acc = 0.0
    for a, b in zip(shape[:-1], shape[1:]):
        seg = math.hypot(*(b - a))
        if acc + seg <= s0:
            acc += seg
            continue
        if acc >= s1:
            break
        if s0 < acc < s1:
            pts.append(a.copy())
        acc += seg
    pts.append(_arclength_point(shape, s1))
    out = [pts[0]]
    for p in pts[1:]:
        if math.hypot(*(p - out[-1])) > 1e-9:
            out.append(p)
    if len(out) < 2:
        return np.array([])
    return np.array(out)


def generate_markings(
    network: RoadNetwork,
    dash: float = DASH_LENGTH,
    gap: float = GAP_LENGTH,
    line_width: float = LINE_WIDTH,
) -> Mesh:
    """Lane demarcation lines for every non-internal edge.

    Solid lines run along the outermost lane borders; dashed separators run
    between adjacent lanes of the same edge. Lane shapes stop at junction
    borders, so markings never cross junction polygons.
    """
    material = MaterialRef(color=MARKING_COLOR)
    ribbons: list[Mesh] = []

    def add_solid(line: np.ndarray):
        if len(line) >= 2:
            ribbons.append(tessellate_lane_ribbon(line, line_width))

    def add_dashed(line: np.ndarray):
        if len(line) < 2:
            return
        total = sum(math.hypot(*(b - a)) for a, b in zip(line[:-1], line[1:]))
        s = 0.0
        period = dash + gap
        while s < total - 1e-9:
            piece = _sub_polyline(line, s, min(s + dash, total))
            if len(piece) >= 2:
                ribbons.append(tessellate_lane_ribbon(piece, line_width))
            s += period

    for edge in network.normal_edges():
        if not edge.lanes:
            continue
        lanes = edge.lanes  # sorted by index; 0 is rightmost in SUMO
        add_solid(_offset_polyline(lanes[0].shape, -lanes[0].width / 2.0))
        add_solid(_offset_polyline(lanes[-1].shape, lanes[-1].width / 2.0))
        for lane in lanes[:-1]:
            add_dashed(_offset_polyline(lane.shape, lane.width / 2.0))

    mesh = merge_meshes(ribbons, material)
    mesh.material = material
    mesh.two_sided = True
    return mesh


def marking_dash_count(length: float, dash: float = DASH_LENGTH, gap: float = GAP_LENGTH) -> int:
    """Dashes emitted along a separator of the given length."""
    if length <= 0:
        return 0
    return int(math.ceil((length - 1e-9) / (dash + gap)))


def place_static_objects(pois: PoiSet) -> list[ObjectInstance]:
    """Map pois onto model instances in the world frame.

    Unknown kinds fall back to the neutral marker model with a warning.
    Traffic light kinds are returned here as ordinary instances; the scene
    build additionally binds them to signal heads.
    """
    instances: list[ObjectInstance] = []
    for poi in pois.pois:
        model = _POI_KIND_MODELS.get(poi.kind)
        if model is None:
            log.warning("poi %r has unknown kind %r; using marker model", poi.id, poi.kind)
            model = "marker"
        x, y = poi.position
        transform = Transform(
            translation=np.array([x, 0.0, -y]),
            yaw_deg=-(poi.heading_deg or 0.0),
            scale=poi.scale or 1.0,
        )
        instances.append(
            ObjectInstance(kind=poi.kind, model=model, transform=transform, poi_id=poi.id)
        )
    return instances


def parse_signal_binding(poi_id: str) -> tuple[str, int] | None:
    """Extract (tls_id, link_index) from a poi id of the form tl:<tls>:<link>."""
    m = _TLS_POI_ID.match(poi_id)
    if not m:
        return None
    return m.group("tls"), int(m.group("link"))


def assign_vehicle_model(vehicle_id: str, seed: int) -> int:
    """Deterministic near-uniform model index in [0, 10) for a vehicle id."""
    digest = hashlib.sha256(f"{seed}:{vehicle_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % VEHICLE_MODEL_COUNT


def _ground_mesh(extent, tile_size: float, texture_name: str) -> Mesh:
    xmin, zmin, xmax, zmax = extent
    cells = 32
    xs = np.linspace(xmin, xmax, cells + 1)
    zs = np.linspace(zmin, zmax, cells + 1)
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    pts = np.column_stack([gx.ravel(), np.zeros(gx.size), gz.ravel()])
    uvs = np.column_stack([gx.ravel() / tile_size, gz.ravel() / tile_size])
    faces = []
    stride = cells + 1
    for i in range(cells):
        for j in range(cells):
            a = i * stride + j
            b = a + 1
            c = a + stride
            d = c + 1
            faces.append((a, c, b))
            faces.append((b, c, d))
    normals = np.tile(np.array([0.0, 1.0, 0.0]), (len(pts), 1))
    return Mesh(
        pts,
        normals,
        np.array(faces, dtype=np.int64),
        MaterialRef(kind="textured", color=(1, 1, 1), texture_name=texture_name),
        uvs=uvs,
        two_sided=True,
    )


@dataclass
class SceneOptions:
    sky_texture: str = "sky_blue"
    ground_texture: str = "ground_grass"
    ground_tile: float = 10.0
    seed: int = 0


def build_scene(
    network: RoadNetwork,
    pois: PoiSet | None = None,
    tracks: list[SmoothedTrack] | None = None,
    signal_log: SignalStateLog | None = None,
    options: SceneOptions | None = None,
) -> SceneGraph:
    """Assemble the full immutable scene graph.

    Internal edges are excluded from ribbon tessellation (junction polygons
    cover that area). The sky sphere is sized at 10x the network diagonal and
    the ground extends 200 m past the network bounds so cameras inside the
    scene never see their edges.
    """
    options = options or SceneOptions()
    assets.validate_texture_name(options.sky_texture, "sky")
    assets.validate_texture_name(options.ground_texture, "ground")

    xmin, ymin, xmax, ymax = network.bounds
    diag = math.hypot(xmax - xmin, ymax - ymin)
    center = np.array([(xmin + xmax) / 2.0, 0.0, -(ymin + ymax) / 2.0])
    sky = SkySpec(
        texture_name=options.sky_texture,
        radius=max(SKY_RADIUS_FACTOR * diag, 1000.0),
        center=center,
    )
    extent = (
        xmin - GROUND_MARGIN,
        -(ymax + GROUND_MARGIN),
        xmax + GROUND_MARGIN,
        -(ymin - GROUND_MARGIN),
    )
    ground = GroundSpec(options.ground_texture, options.ground_tile, extent)
    ground_mesh = _ground_mesh(extent, options.ground_tile, options.ground_texture)

    surface_parts: list[Mesh] = []
    for edge in network.normal_edges():
        for lane in edge.lanes:
            surface_parts.append(tessellate_lane_ribbon(lane.shape, lane.width))
    for junction in network.junctions:
        if junction.shape is not None:
            surface_parts.append(triangulate_junction(junction.shape))
    road_surface = merge_meshes(surface_parts, MaterialRef(color=ROAD_COLOR))
    road_surface.two_sided = True
    road_surface.positions = road_surface.positions.copy()
    road_surface.positions[:, 1] += ROAD_HEIGHT

    road_markings = generate_markings(network)
    road_markings.positions = road_markings.positions.copy()
    road_markings.positions[:, 1] += MARKING_HEIGHT

    timeline = build_signal_timeline(signal_log or SignalStateLog(entries=[]))

    static_objects: list[ObjectInstance] = []
    signal_heads: list[SignalHead] = []
    for instance in place_static_objects(pois or PoiSet(pois=[])):
        static_objects.append(instance)
        design = _SIGNAL_KIND_DESIGNS.get(instance.kind)
        if design is None:
            continue
        binding = parse_signal_binding(instance.poi_id)
        if binding is not None and timeline.known(*binding):
            tls_id, link = binding
        else:
            if binding is not None:
                log.warning(
                    "signal head %r references unknown tls link %s; displaying dark",
                    instance.poi_id, binding,
                )
            tls_id, link = None, 0
        signal_heads.append(
            SignalHead(tls_id=tls_id, link_index=link, design=design,
                       transform=instance.transform)
        )

    models: dict[str, list[Mesh]] = {}
    for instance in static_objects:
        if instance.model not in models:
            models[instance.model] = assets.get_model(instance.model)
    vehicle_tracks: list[tuple[SmoothedTrack, int]] = []
    for track in tracks or []:
        index = assign_vehicle_model(track.vehicle_id, options.seed)
        vehicle_tracks.append((track, index))
        name = f"car{index}"
        if name not in models:
            models[name] = assets.get_model(name)

    return SceneGraph(
        sky=sky,
        ground=ground,
        ground_mesh=ground_mesh,
        road_surface=road_surface,
        road_markings=road_markings,
        static_objects=static_objects,
        signal_heads=signal_heads,
        signal_timeline=timeline,
        vehicle_tracks=vehicle_tracks,
        models=models,
        light=DirectionalLight(),
        rng_seed=options.seed,
    )
