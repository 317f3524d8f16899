"""Scene builder tests: tessellation coverage oracles, placement, determinism."""

import math

import numpy as np
import pytest

from sumorender.errors import ValidationError
from sumorender.geom import shoelace_area
from sumorender.ingest import PoiSet, SignalStateLog, parse_network, parse_pois, parse_tls_states
from sumorender.scene import (
    SceneOptions,
    assign_vehicle_model,
    build_scene,
    generate_markings,
    marking_dash_count,
    parse_signal_binding,
    place_static_objects,
    tessellate_lane_ribbon,
    triangulate_junction,
)
from sumorender.signals import HeadDesign
from sumorender.smoothing import SmoothingParams, smooth_track
from sumorender.ingest import RawSample

from conftest import (
    MINIMAL_NET,
    edge_xml,
    grid_net,
    lane_xml,
    net_xml,
    poi_xml,
    random_polyline,
    tls_xml,
    cycle_tls_entries,
)


def mesh_xz_triangles(mesh):
    """Ground-plane triangles (x, -z) -> SUMO plane coordinates."""
    pts = np.column_stack([mesh.positions[:, 0], -mesh.positions[:, 2]])
    return pts[mesh.triangles]


def grid_coverage_area(triangles_2d, cell: float = 0.05) -> float:
    """Oracle: rasterize each triangle onto a fine grid, counting multiplicity.

    Independent of the mesh code: a plain half-plane sign test per triangle.
    """
    total = 0.0
    for tri in triangles_2d:
        (ax, ay), (bx, by), (cx, cy) = tri
        lo_x, hi_x = min(ax, bx, cx), max(ax, bx, cx)
        lo_y, hi_y = min(ay, by, cy), max(ay, by, cy)
        xs = np.arange(lo_x + cell / 2, hi_x, cell)
        ys = np.arange(lo_y + cell / 2, hi_y, cell)
        if len(xs) == 0 or len(ys) == 0:
            continue
        gx, gy = np.meshgrid(xs, ys)
        d0 = (bx - ax) * (gy - ay) - (by - ay) * (gx - ax)
        d1 = (cx - bx) * (gy - by) - (cy - by) * (gx - bx)
        d2 = (ax - cx) * (gy - cy) - (ay - cy) * (gx - cx)
        inside = ((d0 >= 0) & (d1 >= 0) & (d2 >= 0)) | ((d0 <= 0) & (d1 <= 0) & (d2 <= 0))
        total += inside.sum() * cell * cell
    return total


class TestRibbon:
    def test_straight_segment(self):
        mesh = tessellate_lane_ribbon(np.array([[0.0, 0.0], [10.0, 0.0]]), 3.5)
        assert len(mesh.positions) == 4
        assert mesh.triangle_count == 2
        xy = np.column_stack([mesh.positions[:, 0], -mesh.positions[:, 2]])
        expected = {(0.0, 1.75), (0.0, -1.75), (10.0, 1.75), (10.0, -1.75)}
        assert {(round(x, 9), round(y, 9)) for x, y in xy} == expected
        assert np.all(mesh.positions[:, 1] == 0.0)

    def test_bend_has_wedge_fan(self):
        shape = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]])
        mesh = tessellate_lane_ribbon(shape, 2.0)
        assert mesh.triangle_count > 4  # 2 quads + fan triangles
        mesh.validate()
        area = mesh.surface_area()
        oracle = grid_coverage_area(mesh_xz_triangles(mesh), cell=0.02)
        assert abs(area - oracle) <= 0.01 * oracle

    def test_collinear_no_fan(self):
        shape = np.array([[0.0, 0.0], [5.0, 0.0], [10.0, 0.0]])
        mesh = tessellate_lane_ribbon(shape, 2.0)
        assert mesh.triangle_count == 4  # exactly two quads

    def test_single_point_rejected(self):
        with pytest.raises(ValidationError):
            tessellate_lane_ribbon(np.array([[1.0, 1.0]]), 2.0)

    def test_zero_length_segment_skipped(self):
        shape = np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 0.0]])
        mesh = tessellate_lane_ribbon(shape, 2.0)
        assert mesh.triangle_count == 2

    def test_area_bounds_invariant(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            poly = random_polyline(rng)
            width = rng.uniform(2.5, 4.0)
            mesh = tessellate_lane_ribbon(poly, width)
            mesh.validate()
            length = sum(
                math.hypot(*(b - a)) for a, b in zip(poly[:-1], poly[1:])
            )
            area = mesh.surface_area()
            # quads alone cover exactly length*width; fans only add
            assert area >= length * width - 1e-6
            max_wedge = len(poly) * math.pi * (width / 2) ** 2
            assert area <= length * width + max_wedge

    def test_random_polylines_match_grid_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            poly = random_polyline(rng, segments=5)
            width = rng.uniform(2.5, 4.0)
            mesh = tessellate_lane_ribbon(poly, width)
            area = mesh.surface_area()
            oracle = grid_coverage_area(mesh_xz_triangles(mesh), cell=0.05)
            assert abs(area - oracle) <= 0.02 * oracle


class TestJunction:
    def test_unit_square(self):
        mesh = triangulate_junction(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
        assert mesh.triangle_count == 2
        assert mesh.surface_area() == pytest.approx(1.0, rel=1e-12)

    def test_convex_pentagon(self):
        poly = np.array(
            [(math.cos(a), math.sin(a)) for a in np.linspace(0, 2 * math.pi, 6)[:-1]]
        )
        mesh = triangulate_junction(poly)
        assert mesh.triangle_count == 3
        assert mesh.surface_area() == pytest.approx(abs(shoelace_area(poly)), rel=1e-9)

    def test_concave_l_hexagon(self):
        poly = np.array([[0, 0], [4, 0], [4, 1], [1, 1], [1, 3], [0, 3]], dtype=float)
        mesh = triangulate_junction(poly)
        mesh.validate()
        assert mesh.surface_area() == pytest.approx(abs(shoelace_area(poly)), rel=1e-6)

    def test_clockwise_input(self):
        poly = np.array([[0, 0], [0, 3], [1, 3], [1, 1], [4, 1], [4, 0]], dtype=float)
        mesh = triangulate_junction(poly)
        assert mesh.surface_area() == pytest.approx(abs(shoelace_area(poly)), rel=1e-6)

    def test_self_intersecting_falls_back(self):
        bowtie = np.array([[0, 0], [2, 2], [2, 0], [0, 2]], dtype=float)
        mesh = triangulate_junction(bowtie)  # centroid fan, no crash
        assert mesh.triangle_count >= 2

    def test_random_star_polygons(self):
        # angle gaps below pi keep the polygon simple and star-shaped
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(4, 12))
            gaps = rng.uniform(0.5, 1.0, n)
            angles = np.cumsum(gaps) / gaps.sum() * 2 * math.pi
            radii = rng.uniform(2.0, 10.0, n)
            poly = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
            mesh = triangulate_junction(poly)
            assert mesh.surface_area() == pytest.approx(abs(shoelace_area(poly)), rel=1e-6)


class TestMarkings:
    def test_single_lane_two_solid_lines(self):
        net = parse_network(MINIMAL_NET)
        mesh = generate_markings(net)
        # two solid border ribbons, one quad each for a straight lane
        assert mesh.triangle_count == 4

    def test_two_lane_dash_count(self):
        xml = net_xml(edges=edge_xml("e", [
            lane_xml("e_0", 0, "0,0 90,0", 3.2),
            lane_xml("e_1", 1, "0,3.2 90,3.2", 3.2),
        ]))
        net = parse_network(xml)
        mesh = generate_markings(net)
        assert marking_dash_count(90.0) == 10
        # 2 solid lines (2 tris each) + 10 dashes (2 tris each)
        assert mesh.triangle_count == 4 + 20

    def test_empty_network(self):
        net = parse_network(net_xml())
        assert generate_markings(net).triangle_count == 0

    def test_internal_edges_unmarked(self):
        net = parse_network(grid_net())
        normal_only = generate_markings(net)
        assert normal_only.triangle_count > 0
        # internal lane shapes never contribute
        xs = normal_only.positions[:, 0]
        assert np.all((xs >= -0.5) & (xs <= 200.5))


class TestPlacement:
    def test_tree_translation(self):
        pois = parse_pois(poi_xml([{"id": "t", "type": "tree", "x": 5, "y": 5}]))
        (inst,) = place_static_objects(pois)
        assert inst.model == "tree"
        assert np.allclose(inst.transform.translation, [5.0, 0.0, -5.0])

    def test_unknown_kind_marker_with_warning(self, caplog):
        pois = parse_pois(poi_xml([{"id": "g", "type": "gazebo", "x": 0, "y": 0}]))
        with caplog.at_level("WARNING"):
            (inst,) = place_static_objects(pois)
        assert inst.model == "marker"
        assert "gazebo" in caplog.text

    def test_signal_binding_pattern(self):
        assert parse_signal_binding("tl:J1:0") == ("J1", 0)
        assert parse_signal_binding("tl:cluster:J1:3") == ("cluster:J1", 3)
        assert parse_signal_binding("tree4") is None

    def test_heading_rotation(self):
        pois = parse_pois(poi_xml([{"id": "h", "type": "home", "x": 0, "y": 0, "angle": 90}]))
        (inst,) = place_static_objects(pois)
        assert inst.transform.yaw_deg == -90.0


class TestModelAssignment:
    def test_deterministic(self):
        assert assign_vehicle_model("veh0", 42) == assign_vehicle_model("veh0", 42)

    def test_seed_sensitivity(self):
        ids = [f"v{i}" for i in range(100)]
        a = [assign_vehicle_model(v, 1) for v in ids]
        b = [assign_vehicle_model(v, 2) for v in ids]
        assert a != b

    def test_near_uniform_distribution(self):
        counts = np.zeros(10)
        for i in range(10_000):
            counts[assign_vehicle_model(f"id{i}", 7)] += 1
        shares = counts / counts.sum()
        assert shares.max() <= 0.13
        assert shares.min() >= 0.05


def _one_track():
    raw = [RawSample(t=float(t), x=10.0 * t, y=100.0, angle_deg=90.0) for t in range(6)]
    return smooth_track(raw, SmoothingParams(), vehicle_id="v0")


class TestBuildScene:
    def test_minimal_scene(self):
        net = parse_network(MINIMAL_NET)
        scene = build_scene(net)
        assert scene.road_surface.triangle_count == 2
        assert scene.sky.texture_name == "sky_blue"
        assert scene.ground_mesh.triangle_count > 0
        assert scene.static_objects == []
        assert scene.vehicle_tracks == []

    def test_valid_sky_texture_resolves(self):
        net = parse_network(MINIMAL_NET)
        scene = build_scene(net, options=SceneOptions(sky_texture="sky_blue"))
        assert scene.sky.radius > 0

    def test_unknown_sky_lists_valid_names(self):
        net = parse_network(MINIMAL_NET)
        with pytest.raises(ValidationError) as err:
            build_scene(net, options=SceneOptions(sky_texture="sky_purple"))
        message = str(err.value)
        for name in ("sky_blue", "sky_daycloud1", "sky_night3", "sky_halloween"):
            assert name in message

    def test_marking_layer_above_surface(self):
        net = parse_network(grid_net())
        scene = build_scene(net)
        assert scene.road_markings.positions[:, 1].min() > scene.road_surface.positions[:, 1].max() - 1e-9
        assert scene.road_surface.positions[:, 1].min() > 0.0

    def test_signal_head_binding(self):
        net = parse_network(grid_net())
        tls_log = parse_tls_states(tls_xml(cycle_tls_entries("J1")))
        pois = parse_pois(poi_xml([
            {"id": "tl:J1:0", "type": "trafficlight3", "x": 108, "y": 92, "angle": 180},
            {"id": "tl:missing:0", "type": "trafficlight2", "x": 92, "y": 108},
        ]))
        scene = build_scene(net, pois, signal_log=tls_log)
        bound = [h for h in scene.signal_heads if not h.dark]
        dark = [h for h in scene.signal_heads if h.dark]
        assert len(bound) == 1 and bound[0].tls_id == "J1" and bound[0].link_index == 0
        assert bound[0].design is HeadDesign.THREE_HEAD
        assert len(dark) == 1

    def test_deterministic_vertex_buffers(self):
        net_text = grid_net()
        pois = parse_pois(poi_xml([{"id": "t1", "type": "tree", "x": 50, "y": 50}]))

        def build():
            return build_scene(
                parse_network(net_text), pois, [_one_track()],
                SignalStateLog(entries=[]), SceneOptions(seed=0),
            )

        a, b = build(), build()
        assert a.road_surface.positions.tobytes() == b.road_surface.positions.tobytes()
        assert a.road_markings.positions.tobytes() == b.road_markings.positions.tobytes()
        assert a.ground_mesh.positions.tobytes() == b.ground_mesh.positions.tobytes()
        assert a.vehicle_tracks[0][1] == b.vehicle_tracks[0][1]

    def test_all_triangles_non_degenerate(self):
        net = parse_network(grid_net())
        scene = build_scene(net)
        for mesh in (scene.ground_mesh, scene.road_surface, scene.road_markings):
            mesh.validate()

    def test_vehicle_model_resolved(self):
        net = parse_network(MINIMAL_NET)
        scene = build_scene(net, tracks=[_one_track()])
        (track, model_index) = scene.vehicle_tracks[0]
        assert track.vehicle_id == "v0"
        assert f"car{model_index}" in scene.models
