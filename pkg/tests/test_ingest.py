"""Parser tests: crafted fixtures, count oracles, error contracts."""

import re
import time

import numpy as np
import pytest

from sumorender.errors import ParseError, ValidationError
from sumorender.ingest import (
    parse_fcd,
    parse_network,
    parse_pois,
    parse_tls_states,
)

from conftest import (
    MINIMAL_NET,
    corridor_net,
    fcd_xml,
    grid_net,
    net_xml,
    edge_xml,
    lane_xml,
    poi_xml,
    tls_xml,
)


class TestParseNetwork:
    def test_minimal_single_lane(self):
        net = parse_network(MINIMAL_NET)
        assert len(net.edges) == 1
        lane = net.edges[0].lanes[0]
        assert lane.width == 3.5
        assert np.allclose(lane.shape, [(0, 0), (100, 0)])

    def test_internal_edges_flagged_and_retained(self):
        net = parse_network(grid_net())
        internal = [e for e in net.edges if e.function == "internal"]
        assert len(internal) == 1
        assert internal[0].id == ":J1_0"
        assert internal[0] not in net.normal_edges()

    def test_missing_width_defaults(self):
        xml = net_xml(edges=edge_xml("e", [lane_xml("e_0", 0, "0,0 10,0")]))
        net = parse_network(xml)
        assert net.edges[0].lanes[0].width == 3.2

    def test_malformed_xml_reports_line(self):
        bad = MINIMAL_NET.replace("</net>", "</oops>")
        with pytest.raises(ParseError) as err:
            parse_network(bad)
        assert re.search(r"line \d+", str(err.value))

    def test_short_lane_shape_names_lane(self):
        xml = net_xml(edges=edge_xml("e", [lane_xml("e_0", 0, "5,5")]))
        with pytest.raises(ValidationError, match="e_0"):
            parse_network(xml)

    def test_junction_polygon_captured(self):
        net = parse_network(grid_net())
        j = next(j for j in net.junctions if j.id == "J1")
        assert j.shape is not None and len(j.shape) == 4
        assert j.incoming_lane_ids == ["north_in_0", "south_in_0"]

    def test_tllogic_programs_captured(self):
        net = parse_network(grid_net())
        assert len(net.signal_programs) == 1
        prog = net.signal_programs[0]
        assert prog.tls_id == "J1"
        assert prog.phases == [(45.0, "GGrr"), (15.0, "rrGG")]

    def test_net_offset_and_bounds(self):
        net = parse_network(MINIMAL_NET)
        assert net.net_offset == (0.0, 0.0)
        assert net.bounds == (0.0, 0.0, 200.0, 200.0)

    def test_corridor_scale_parses_quickly(self):
        xml = corridor_net()
        start = time.perf_counter()
        net = parse_network(xml)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0
        assert len(net.normal_edges()) == 7  # 2 mains + 5 ramps
        assert sum(len(e.lanes) for e in net.normal_edges()) == 11

    def test_element_counts_match_text_scan(self):
        for xml in (MINIMAL_NET, grid_net(), corridor_net(length_m=1000, ramps=2)):
            net = parse_network(xml)
            assert len(net.edges) == xml.count("<edge ")
            assert sum(len(e.lanes) for e in net.edges) == xml.count("<lane ")
            assert len(net.junctions) == xml.count("<junction ")

    def test_duplicate_edge_id_rejected(self):
        lanes = [lane_xml("a_0", 0, "0,0 1,0")]
        xml = net_xml(edges=edge_xml("a", lanes) + "\n" + edge_xml("a", lanes))
        with pytest.raises(ValidationError, match="duplicate"):
            parse_network(xml)


class TestParseFcd:
    def test_single_vehicle_single_step(self):
        log = parse_fcd(fcd_xml([(0.0, [{"id": "v0", "x": 10.5, "y": 20.0, "angle": 90.0}])]))
        assert list(log.vehicles) == ["v0"]
        sample = log.vehicles["v0"][0]
        assert (sample.t, sample.x, sample.y, sample.angle_deg) == (0.0, 10.5, 20.0, 90.0)

    def test_lifespan_preserved(self):
        frames = [(float(t), []) for t in range(8)]
        for t in (3, 4, 5):
            frames[t] = (float(t), [{"id": "v1", "x": t, "y": 0, "angle": 0}])
        log = parse_fcd(fcd_xml(frames))
        assert [s.t for s in log.vehicles["v1"]] == [3.0, 4.0, 5.0]

    def test_time_step_detected_as_mode(self):
        frames = []
        for t in range(10):
            vehicles = [{"id": "a", "x": t, "y": 0, "angle": 0}]
            if t % 2 == 0:
                vehicles.append({"id": "b", "x": 0, "y": t, "angle": 0})
            frames.append((float(t), vehicles))
        log = parse_fcd(fcd_xml(frames))
        assert log.time_step == 1.0
        assert log.begin == 0.0 and log.end == 9.0

    def test_missing_time_names_timestep(self):
        xml = '<fcd-export><timestep time="0"/><timestep/></fcd-export>'
        with pytest.raises(ParseError, match="#1"):
            parse_fcd(xml)

    def test_bad_coordinate_names_vehicle_and_time(self):
        xml = fcd_xml([(2.0, [{"id": "vx", "x": "oops", "y": 0, "angle": 0}])])
        with pytest.raises(ParseError) as err:
            parse_fcd(xml)
        assert "vx" in str(err.value) and "2" in str(err.value)

    def test_angle_optional_speed_optional(self):
        log = parse_fcd(fcd_xml([(0.0, [{"id": "v0", "x": 1, "y": 2}])]))
        sample = log.vehicles["v0"][0]
        assert sample.angle_deg == 0.0 and sample.speed is None

    def test_times_strictly_increasing_property(self):
        rng = np.random.default_rng(5)
        frames = []
        for t in range(30):
            vehicles = [
                {"id": f"v{i}", "x": rng.uniform(0, 100), "y": rng.uniform(0, 100),
                 "angle": rng.uniform(0, 360)}
                for i in range(int(rng.integers(0, 4)))
            ]
            frames.append((float(t), vehicles))
        log = parse_fcd(fcd_xml(frames))
        for samples in log.vehicles.values():
            times = [s.t for s in samples]
            assert all(b > a for a, b in zip(times, times[1:]))

    def test_angle_normalized(self):
        log = parse_fcd(fcd_xml([(0.0, [{"id": "v0", "x": 0, "y": 0, "angle": 360.0}])]))
        assert log.vehicles["v0"][0].angle_deg == 0.0


class TestParseTlsStates:
    def test_two_entries(self):
        log = parse_tls_states(tls_xml([(0, "J1", "GGrr"), (45, "J1", "rrGG")]))
        assert len(log.entries) == 2
        assert log.entries[0] == (0.0, "J1", "GGrr")
        assert log.entries[1][2][0] == "r"

    def test_empty_document(self):
        log = parse_tls_states("<tlsStates></tlsStates>")
        assert log.entries == []

    def test_out_of_order_times_rejected(self):
        with pytest.raises(ValidationError, match="out of order"):
            parse_tls_states(tls_xml([(45, "J1", "G"), (0, "J1", "r")]))

    def test_unknown_state_char_named(self):
        with pytest.raises(ValidationError, match="'x'"):
            parse_tls_states(tls_xml([(0, "J1", "Gx")]))

    def test_interleaved_tls_ids_allowed(self):
        log = parse_tls_states(
            tls_xml([(0, "A", "G"), (0, "B", "r"), (10, "A", "r"), (5, "B", "G")])
        )
        assert len(log.entries) == 4


class TestParsePois:
    def test_tree_poi(self):
        pois = parse_pois(poi_xml([{"id": "tree1", "type": "tree", "x": 5, "y": 5}]))
        assert len(pois.pois) == 1
        poi = pois.pois[0]
        assert poi.kind == "tree" and poi.position == (5.0, 5.0)

    def test_unknown_kind_retained(self):
        pois = parse_pois(poi_xml([{"id": "g", "type": "gazebo", "x": 1, "y": 2}]))
        assert pois.pois[0].kind == "gazebo"

    def test_missing_coordinate_names_id(self):
        with pytest.raises(ValidationError, match="p9"):
            parse_pois(poi_xml([{"id": "p9", "type": "tree", "x": 4}]))

    def test_file_order_preserved(self):
        rows = [{"id": f"p{i}", "type": "tree", "x": i, "y": 0} for i in range(1000)]
        pois = parse_pois(poi_xml(rows))
        assert [p.id for p in pois.pois] == [f"p{i}" for i in range(1000)]

    def test_heading_passthrough(self):
        pois = parse_pois(poi_xml([{"id": "h", "type": "home", "x": 0, "y": 0, "angle": 45.0}]))
        assert pois.pois[0].heading_deg == 45.0
