"""Shared fixture builders: crafted SUMO documents and synthetic scenarios."""

from __future__ import annotations

import math

import numpy as np
import pytest


def net_xml(edges: str = "", junctions: str = "", tllogics: str = "",
            offset=(0.0, 0.0), boundary=(0.0, 0.0, 200.0, 200.0)) -> str:
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<net version="1.16">
    <location netOffset="{offset[0]},{offset[1]}"
              convBoundary="{boundary[0]},{boundary[1]},{boundary[2]},{boundary[3]}"
              origBoundary="-10,-10,10,10" projParameter="!"/>
{edges}
{junctions}
{tllogics}
</net>
"""


def lane_xml(lane_id: str, index: int, shape: str, width: float | None = None,
             speed: float = 13.89) -> str:
    width_attr = f' width="{width}"' if width is not None else ""
    return (
        f'        <lane id="{lane_id}" index="{index}" speed="{speed}" '
        f'length="100.0"{width_attr} shape="{shape}"/>'
    )


def edge_xml(edge_id: str, lanes: list[str], function: str | None = None) -> str:
    func_attr = f' function="{function}"' if function else ""
    body = "\n".join(lanes)
    return f'    <edge id="{edge_id}"{func_attr}>\n{body}\n    </edge>'


MINIMAL_NET = net_xml(
    edges=edge_xml("e1", [lane_xml("e1_0", 0, "0.00,0.00 100.00,0.00", width=3.5)]),
    junctions='    <junction id="J0" x="0.0" y="0.0"/>\n'
    '    <junction id="J1" x="100.0" y="0.0"/>',
)


def grid_net() -> str:
    """Four edges meeting at a central signalized junction."""
    edges = "\n".join(
        [
            edge_xml("north_in", [lane_xml("north_in_0", 0, "100.00,200.00 100.00,108.00", 3.2)]),
            edge_xml("south_in", [lane_xml("south_in_0", 0, "100.00,0.00 100.00,92.00", 3.2)]),
            edge_xml("east_out", [
                lane_xml("east_out_0", 0, "108.00,100.00 200.00,100.00", 3.2),
                lane_xml("east_out_1", 1, "108.00,103.20 200.00,103.20", 3.2),
            ]),
            edge_xml("west_out", [lane_xml("west_out_0", 0, "92.00,100.00 0.00,100.00", 3.2)]),
            edge_xml(":J1_0", [lane_xml(":J1_0_0", 0, "100.00,108.00 100.00,92.00", 3.2)],
                     function="internal"),
        ]
    )
    junctions = (
        '    <junction id="J1" x="100.0" y="100.0" '
        'shape="92.00,108.00 108.00,108.00 108.00,92.00 92.00,92.00" '
        'incLanes="north_in_0 south_in_0"/>'
    )
    tllogics = (
        '    <tlLogic id="J1" type="static" programID="0" offset="0">\n'
        '        <phase duration="45" state="GGrr"/>\n'
        '        <phase duration="15" state="rrGG"/>\n'
        "    </tlLogic>"
    )
    return net_xml(edges=edges, junctions=junctions, tllogics=tllogics)


def corridor_net(length_m: float = 6500.0, lanes_per_direction: int = 3,
                 ramps: int = 5, segment_m: float = 50.0) -> str:
    """Synthetic highway corridor at case-study scale."""
    parts = []
    n_segments = int(length_m / segment_m)

    def polyline(y0: float, reverse: bool) -> str:
        xs = np.linspace(0.0, length_m, n_segments + 1)
        ys = y0 + 8.0 * np.sin(xs / 900.0)
        pts = list(zip(xs, ys))
        if reverse:
            pts.reverse()
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)

    for direction, (y0, rev) in enumerate([(0.0, False), (15.0, True)]):
        lanes = [
            lane_xml(f"main{direction}_{i}", i, polyline(y0 + 3.2 * i, rev), 3.2)
            for i in range(lanes_per_direction)
        ]
        parts.append(edge_xml(f"main{direction}", lanes))
    for r in range(ramps):
        x0 = (r + 1) * length_m / (ramps + 1)
        shape = f"{x0 - 150:.2f},{-60:.2f} {x0:.2f},{-3.2:.2f}"
        parts.append(edge_xml(f"ramp{r}", [lane_xml(f"ramp{r}_0", 0, shape, 3.2)]))
    return net_xml(
        edges="\n".join(parts),
        boundary=(0.0, -60.0, length_m, 30.0),
    )


def fcd_xml(frames: list[tuple[float, list[dict]]]) -> str:
    """frames: list of (time, [vehicle attr dicts])."""
    body = []
    for t, vehicles in frames:
        rows = "".join(
            "        <vehicle "
            + " ".join(f'{k}="{v}"' for k, v in veh.items())
            + "/>\n"
            for veh in vehicles
        )
        body.append(f'    <timestep time="{t}">\n{rows}    </timestep>')
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n<fcd-export>\n'
        + "\n".join(body)
        + "\n</fcd-export>\n"
    )


def straight_drive_fcd(
    vehicle_id: str = "v0",
    speed: float = 10.0,
    duration: float = 20.0,
    y: float = 0.0,
    angle: float = 90.0,
    dt: float = 1.0,
) -> str:
    frames = []
    t = 0.0
    while t <= duration + 1e-9:
        frames.append(
            (t, [{"id": vehicle_id, "x": f"{speed * t:.2f}", "y": f"{y:.2f}",
                  "angle": f"{angle:.2f}", "speed": f"{speed:.2f}"}])
        )
        t += dt
    return fcd_xml(frames)


def tls_xml(entries: list[tuple[float, str, str]]) -> str:
    rows = "\n".join(
        f'    <tlsState time="{t}" id="{tls}" programID="0" phase="0" state="{state}"/>'
        for t, tls, state in entries
    )
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n<tlsStates>\n'
        + rows
        + "\n</tlsStates>\n"
    )


def poi_xml(pois: list[dict]) -> str:
    rows = "\n".join(
        "    <poi " + " ".join(f'{k}="{v}"' for k, v in poi.items()) + "/>"
        for poi in pois
    )
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n<additional>\n'
        + rows
        + "\n</additional>\n"
    )


def cycle_tls_entries(tls_id: str = "J1", cycles: int = 3,
                      green: float = 45.0, red: float = 15.0) -> list:
    """Fixed-cycle single-link program: green then red, repeated."""
    entries = []
    t = 0.0
    for _ in range(cycles):
        entries.append((t, tls_id, "G"))
        entries.append((t + green, tls_id, "r"))
        t += green + red
    return entries


@pytest.fixture
def minimal_net():
    return MINIMAL_NET


@pytest.fixture
def grid_net_xml():
    return grid_net()


def random_polyline(rng: np.random.Generator, segments: int = 6) -> np.ndarray:
    """Random gently-turning polyline that cannot self-overlap."""
    heading = rng.uniform(0, 2 * math.pi)
    pts = [np.array([0.0, 0.0])]
    for _ in range(segments):
        heading += rng.uniform(-math.radians(25), math.radians(25))
        length = rng.uniform(15.0, 30.0)
        pts.append(pts[-1] + length * np.array([math.cos(heading), math.sin(heading)]))
    return np.array(pts)
