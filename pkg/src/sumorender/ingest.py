"""Parsers for the four SUMO file kinds consumed by the pipeline.

Supported documents:

* plain-XML network (``*.net.xml``): edges, lanes, junctions, tlLogic programs
* FCD trajectory export: per-timestep vehicle positions and headings
* tls-states export: timestamped signal state strings
* additional/POI file: typed static objects

All coordinates are meters in SUMO's network frame (x east, y north) and are
taken as stored in the file; SUMO has already applied its netOffset. Parsing
is single-pass and the resulting structures are treated as read-only.
"""

from __future__ import annotations

import statistics
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .geom import norm_compass, shoelace_area

DEFAULT_LANE_WIDTH = 3.2  # SUMO's documented default, files routinely omit it

# Signal state characters: g/G green, y yellow, r/u red, o/O dark (off).
SIGNAL_STATE_CHARS = frozenset("GgyruoO")


@dataclass
class Lane:
    id: str
    index: int
    width: float
    speed_limit: float
    shape: np.ndarray  # (N, 2) polyline, N >= 2


@dataclass
class Edge:
    id: str
    function: str  # "normal" or "internal"
    lanes: list[Lane] = field(default_factory=list)


@dataclass
class Junction:
    id: str
    position: tuple[float, float]
    shape: np.ndarray | None  # (N, 2) polygon with N >= 3 and area > 0, or None
    incoming_lane_ids: list[str] = field(default_factory=list)


@dataclass
class SignalProgram:
    tls_id: str
    program_id: str
    phases: list[tuple[float, str]] = field(default_factory=list)  # (duration s, state)


@dataclass
class RoadNetwork:
    edges: list[Edge]
    junctions: list[Junction]
    signal_programs: list[SignalProgram]
    net_offset: tuple[float, float]
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

    def normal_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.function != "internal"]


@dataclass
class RawSample:
    t: float
    x: float
    y: float
    angle_deg: float  # compass degrees in [0, 360)
    speed: float | None = None


@dataclass
class TrajectoryLog:
    vehicles: dict[str, list[RawSample]]
    time_step: float
    begin: float
    end: float


@dataclass
class SignalStateLog:
    entries: list[tuple[float, str, str]]  # (t, tls_id, state_string)


@dataclass
class Poi:
    id: str
    kind: str
    position: tuple[float, float]
    heading_deg: float | None = None
    scale: float | None = None


@dataclass
class PoiSet:
    pois: list[Poi]


def _from_xml(xml_text: str) -> ET.Element:
    try:
        return ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else None
        raise ParseError(f"malformed XML: {exc.msg.split(':')[0]}", line=line) from exc


def _parse_shape(text: str, owner: str) -> np.ndarray:
    points = []
    for token in text.split():
        try:
            x, y = token.split(",")[:2]
            points.append((float(x), float(y)))
        except ValueError as exc:
            raise ParseError(f"bad shape coordinate {token!r} in {owner}") from exc
    return np.array(points, dtype=np.float64)


def parse_network(xml_text: str) -> RoadNetwork:
    """Parse a SUMO plain-XML net document into a RoadNetwork.

    Internal edges (``function="internal"``) are retained and flagged; the
    scene builder excludes them from ribbon tessellation because junction
    polygons cover that area. Junction shapes that are degenerate (fewer than
    3 distinct vertices or zero area) are stored as ``None``.
    """
    root = _from_xml(xml_text)

    net_offset = (0.0, 0.0)
    bounds = None
    location = root.find("location")
    if location is not None:
        off = location.get("netOffset")
        if off:
            dx, dy = off.split(",")
            net_offset = (float(dx), float(dy))
        conv = location.get("convBoundary")
        if conv:
            x1, y1, x2, y2 = (float(v) for v in conv.split(","))
            bounds = (min(x1, x2), min(y1, y2), max(x1, x2), max(y1, y2))

    edges: list[Edge] = []
    seen_edges: set[str] = set()
    for edge_el in root.iter("edge"):
        edge_id = edge_el.get("id")
        if edge_id is None:
            raise ValidationError("edge without id attribute")
        if edge_id in seen_edges:
            raise ValidationError(f"duplicate edge id {edge_id!r}")
        seen_edges.add(edge_id)
        edge = Edge(id=edge_id, function=edge_el.get("function", "normal"))
        for lane_el in edge_el.findall("lane"):
            lane_id = lane_el.get("id", f"{edge_id}_?")
            shape_text = lane_el.get("shape", "")
            shape = _parse_shape(shape_text, f"lane {lane_id!r}")
            if len(shape) < 2:
                raise ValidationError(
                    f"lane {lane_id!r} has {len(shape)} shape point(s), need at least 2"
                )
            # Collapse consecutive duplicate points; they carry no geometry.
            keep = np.ones(len(shape), dtype=bool)
            keep[1:] = np.any(np.diff(shape, axis=0) != 0.0, axis=1)
            shape = shape[keep]
            if len(shape) < 2:
                raise ValidationError(f"lane {lane_id!r} collapses to a single point")
            width = float(lane_el.get("width", DEFAULT_LANE_WIDTH))
            if width <= 0:
                raise ValidationError(f"lane {lane_id!r} has non-positive width {width}")
            edge.lanes.append(
                Lane(
                    id=lane_id,
                    index=int(lane_el.get("index", len(edge.lanes))),
                    width=width,
                    speed_limit=float(lane_el.get("speed", 13.89)),
                    shape=shape,
                )
            )
        edge.lanes.sort(key=lambda ln: ln.index)
        indices = [ln.index for ln in edge.lanes]
        if indices and indices != list(range(len(indices))):
            raise ValidationError(f"edge {edge_id!r} lane indices {indices} are not 0..n-1")
        edges.append(edge)

    junctions: list[Junction] = []
    for j_el in root.iter("junction"):
        j_id = j_el.get("id", "")
        pos = (float(j_el.get("x", 0.0)), float(j_el.get("y", 0.0)))
        shape = None
        shape_text = j_el.get("shape", "")
        if shape_text:
            poly = _parse_shape(shape_text, f"junction {j_id!r}")
            if len(poly) >= 2 and np.all(poly[0] == poly[-1]):
                poly = poly[:-1]
            if len(poly) >= 3 and abs(shoelace_area(poly)) > 1e-9:
                shape = poly
        inc = j_el.get("incLanes", "")
        junctions.append(
            Junction(
                id=j_id,
                position=pos,
                shape=shape,
                incoming_lane_ids=inc.split() if inc else [],
            )
        )

    programs: list[SignalProgram] = []
    for tl_el in root.iter("tlLogic"):
        prog = SignalProgram(
            tls_id=tl_el.get("id", ""),
            program_id=tl_el.get("programID", "0"),
        )
        for phase_el in tl_el.findall("phase"):
            prog.phases.append(
                (float(phase_el.get("duration", 0.0)), phase_el.get("state", ""))
            )
        programs.append(prog)

    if bounds is None:
        bounds = _bounds_from_lanes(edges)

    return RoadNetwork(
        edges=edges,
        junctions=junctions,
        signal_programs=programs,
        net_offset=net_offset,
        bounds=bounds,
    )


def _bounds_from_lanes(edges: list[Edge]) -> tuple[float, float, float, float]:
    xs, ys = [], []
    for edge in edges:
        for lane in edge.lanes:
            xs.append(lane.shape[:, 0])
            ys.append(lane.shape[:, 1])
    if not xs:
        return (0.0, 0.0, 0.0, 0.0)
    ax = np.concatenate(xs)
    ay = np.concatenate(ys)
    return (float(ax.min()), float(ay.min()), float(ax.max()), float(ay.max()))


def parse_fcd(xml_text: str) -> TrajectoryLog:
    """Parse a SUMO FCD export into per-vehicle ordered sample lists.

    Vehicles may appear and disappear mid-log (insertion/arrival); per
    vehicle, sample times must be strictly increasing. The log time step is
    detected as the mode of consecutive timestep deltas. A missing ``angle``
    stores a placeholder 0; the smoothing pipeline re-estimates orientation
    from motion regardless.
    """
    root = _from_xml(xml_text)

    vehicles: dict[str, list[RawSample]] = {}
    times: list[float] = []
    for index, step_el in enumerate(root.iter("timestep")):
        t_text = step_el.get("time")
        if t_text is None:
            raise ParseError(f"timestep #{index} is missing its time attribute")
        try:
            t = float(t_text)
        except ValueError as exc:
            raise ParseError(f"timestep #{index} has non-numeric time {t_text!r}") from exc
        times.append(t)
        for veh_el in step_el.findall("vehicle"):
            vid = veh_el.get("id")
            if vid is None:
                raise ParseError(f"vehicle without id at t={t}")
            try:
                x = float(veh_el.get("x"))
                y = float(veh_el.get("y"))
            except (TypeError, ValueError) as exc:
                raise ParseError(
                    f"vehicle {vid!r} at t={t} has a missing or non-numeric coordinate"
                ) from exc
            angle_text = veh_el.get("angle")
            angle = norm_compass(float(angle_text)) if angle_text is not None else 0.0
            speed_text = veh_el.get("speed")
            speed = float(speed_text) if speed_text is not None else None
            if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(angle)):
                raise ValidationError(f"vehicle {vid!r} at t={t} has a non-finite value")
            samples = vehicles.setdefault(vid, [])
            if samples and t <= samples[-1].t:
                raise ValidationError(
                    f"vehicle {vid!r} sample times not strictly increasing at t={t}"
                )
            samples.append(RawSample(t=t, x=x, y=y, angle_deg=angle, speed=speed))

    if not times:
        return TrajectoryLog(vehicles={}, time_step=1.0, begin=0.0, end=0.0)

    deltas = [round(b - a, 9) for a, b in zip(times, times[1:]) if b > a]
    time_step = statistics.mode(deltas) if deltas else 1.0
    return TrajectoryLog(
        vehicles=vehicles, time_step=time_step, begin=times[0], end=times[-1]
    )


def parse_tls_states(xml_text: str) -> SignalStateLog:
    """Parse a SUMO tls-states export.

    Entries are kept in file order; per tls id, times must be non-decreasing.
    An empty document yields an empty log, which renders all signals dark.
    """
    root = _from_xml(xml_text)

    entries: list[tuple[float, str, str]] = []
    last_t: dict[str, float] = {}
    for index, el in enumerate(root.iter("tlsState")):
        tls_id = el.get("id")
        state = el.get("state", "")
        t_text = el.get("time")
        if tls_id is None or t_text is None:
            raise ParseError(f"tlsState #{index} is missing id or time")
        t = float(t_text)
        if not state:
            raise ValidationError(f"tlsState #{index} for {tls_id!r} has an empty state")
        for ch in state:
            if ch not in SIGNAL_STATE_CHARS:
                raise ValidationError(
                    f"unknown state character {ch!r} in tlsState #{index} for {tls_id!r}"
                )
        if tls_id in last_t and t < last_t[tls_id]:
            raise ValidationError(
                f"tlsState times for {tls_id!r} are out of order at t={t}"
            )
        last_t[tls_id] = t
        entries.append((t, tls_id, state))
    return SignalStateLog(entries=entries)


def parse_pois(xml_text: str) -> PoiSet:
    """Parse a SUMO additional file's <poi> elements, preserving file order.

    The ``type`` attribute is carried verbatim as the poi kind; unknown kinds
    are retained and the scene builder decides the fallback model.
    """
    root = _from_xml(xml_text)

    pois: list[Poi] = []
    for el in root.iter("poi"):
        pid = el.get("id", f"poi{len(pois)}")
        x_text, y_text = el.get("x"), el.get("y")
        if x_text is None or y_text is None:
            raise ValidationError(f"poi {pid!r} is missing x or y")
        kind = el.get("type", "")
        if not kind:
            raise ValidationError(f"poi {pid!r} has no type attribute")
        angle_text = el.get("angle")
        pois.append(
            Poi(
                id=pid,
                kind=kind,
                position=(float(x_text), float(y_text)),
                heading_deg=float(angle_text) if angle_text is not None else None,
                scale=float(el.get("scale")) if el.get("scale") is not None else None,
            )
        )
    return PoiSet(pois=pois)
