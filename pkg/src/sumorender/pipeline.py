"""End-to-end orchestration: parse -> smooth -> build -> render/export.

Frames can render concurrently over the shared read-only scene; output is
identical regardless of worker count. The run manifest records input
digests, resolved parameters and frame digests, making reruns checkable.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import assets
from .config import RenderJob, cinematic_path_from_config
from .errors import RenderError
from .ingest import (
    PoiSet,
    SignalStateLog,
    parse_fcd,
    parse_network,
    parse_pois,
    parse_tls_states,
)
from .mesh import Mesh
from .render import (
    CinematicParams,
    EulerianParams,
    LagrangianParams,
    build_camera,
    render_frame,
)
from .scene import SceneGraph, SceneOptions, build_scene
from .signals import LampColor
from .smoothing import dump_tracks_csv, frame_count, smooth_all

BUNDLE_VERSION = 1

_COLOR_CODES = {
    LampColor.DARK: 0.0,
    LampColor.GREEN: 1.0,
    LampColor.YELLOW: 2.0,
    LampColor.RED: 3.0,
}


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class LoadedInputs:
    network: object
    log: object
    signal_log: SignalStateLog
    pois: PoiSet
    digests: dict[str, dict]


def load_inputs(job: RenderJob) -> LoadedInputs:
    digests = {}

    def read(path: str, label: str) -> str:
        digests[label] = {"path": path, "sha256": _sha256_file(path)}
        return Path(path).read_text(encoding="utf-8")

    network = parse_network(read(job.net_path, "net"))
    log = parse_fcd(read(job.fcd_path, "fcd"))
    signal_log = SignalStateLog(entries=[])
    if job.tls_path:
        signal_log = parse_tls_states(read(job.tls_path, "tls"))
    pois = PoiSet(pois=[])
    if job.pois_path:
        pois = parse_pois(read(job.pois_path, "pois"))
    return LoadedInputs(network, log, signal_log, pois, digests)


def prepare_scene(job: RenderJob, inputs: LoadedInputs) -> SceneGraph:
    tracks = smooth_all(inputs.log.vehicles, job.smoothing)
    if job.tracks_csv:
        dump_tracks_csv(tracks, job.tracks_csv)
    return build_scene(
        inputs.network,
        inputs.pois,
        tracks,
        inputs.signal_log,
        SceneOptions(
            sky_texture=job.sky,
            ground_texture=job.ground,
            seed=job.seed,
        ),
    )


def _camera_params(job: RenderJob):
    cam = job.camera
    if cam.mode == "eulerian":
        return EulerianParams(
            position=np.array(cam.position, dtype=np.float64),
            look_at=np.array(cam.look_at, dtype=np.float64),
        )
    if cam.mode == "lagrangian":
        return LagrangianParams(
            vehicle_id=cam.vehicle, behind=cam.behind,
            height=cam.height, look_ahead=cam.look_ahead,
        )
    return CinematicParams(path=cinematic_path_from_config(cam))


_WORKER_STATE: dict = {}


def _render_one(args, raw_fh=None):
    index, t = args
    scene = _WORKER_STATE["scene"]
    job: RenderJob = _WORKER_STATE["job"]
    params = _WORKER_STATE["params"]
    width, height = job.resolution
    try:
        camera = build_camera(
            job.camera.mode, params, scene, t,
            vertical_fov=job.fov, aspect=width / height,
        )
    except RenderError as exc:
        return index, None, str(exc)
    fb = render_frame(scene, camera, t, width=width, height=height,
                      yellow_duration=job.yellow_duration)
    frame_path = Path(job.frames_dir) / f"frame_{index:06d}.png"
    fb.save_png(frame_path)
    if raw_fh is not None:
        raw_fh.write(fb.color.tobytes())
    digest = hashlib.sha256(fb.color.tobytes()).hexdigest()
    return index, digest, None


def _init_worker(scene, job, params):
    _WORKER_STATE.update(scene=scene, job=job, params=params)


def render_sequence(job: RenderJob) -> dict:
    """Render every frame of the job's window and write the run manifest.

    Returns the manifest dict. Raises RenderError when the whole job is
    unrenderable (e.g. the ego vehicle never appears in the window); frames
    the ego vehicle misses within the window are skipped with a manifest note.
    """
    if not job.frames_dir:
        raise RenderError("output.frames_dir is required for rendering")
    t_start = time.perf_counter()
    inputs = load_inputs(job)
    t_loaded = time.perf_counter()

    begin = job.begin if job.begin is not None else inputs.log.begin
    end = job.end if job.end is not None else inputs.log.end
    if end < begin:
        raise RenderError(f"window [{begin}, {end}] is empty")

    scene = prepare_scene(job, inputs)
    t_built = time.perf_counter()

    params = _camera_params(job)
    if job.camera.mode == "lagrangian":
        track = next(
            (tr for tr, _ in scene.vehicle_tracks if tr.vehicle_id == job.camera.vehicle),
            None,
        )
        if track is None:
            raise RenderError(f"vehicle {job.camera.vehicle!r} not present in the log")
        t0, t1 = track.t0, track.t0 + (len(track) - 1) / track.fps
        if t1 < begin or t0 > end:
            raise RenderError(
                f"vehicle {job.camera.vehicle!r} is absent for the whole window "
                f"[{begin}, {end}] (lifespan [{t0:.2f}, {t1:.2f}])"
            )

    Path(job.frames_dir).mkdir(parents=True, exist_ok=True)
    n_frames = frame_count(end - begin, job.smoothing.fps)
    tasks = [(k, begin + k / job.smoothing.fps) for k in range(n_frames)]

    workers = job.workers if job.workers > 0 else (os.cpu_count() or 1)
    stream = job.raw_stream is not None
    results: list[tuple[int, str | None, str | None]] = []
    if workers == 1 or stream or len(tasks) < 4:
        # raw streaming is inherently ordered, so it always runs sequentially
        _init_worker(scene, job, params)
        raw_fh = None
        if stream:
            raw_fh = (
                sys.stdout.buffer
                if job.raw_stream == "-"
                else open(job.raw_stream, "wb")
            )
        try:
            for task in tasks:
                result = _render_one(task, raw_fh)
                results.append(result)
        finally:
            if raw_fh is not None and job.raw_stream != "-":
                raw_fh.close()
    else:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(scene, job, params),
        ) as pool:
            results = list(pool.map(_render_one, tasks))

    t_rendered = time.perf_counter()
    skipped = [
        {"frame": idx, "reason": err} for idx, digest, err in results if digest is None
    ]
    if len(skipped) == len(results) and results:
        raise RenderError("every frame failed: " + skipped[0]["reason"])

    manifest = {
        "inputs": inputs.digests,
        "parameters": job.parameters_dict(),
        "window": {"begin": begin, "end": end},
        "frame_count": n_frames,
        "frames_written": sum(1 for _, digest, _ in results if digest is not None),
        "skipped_frames": skipped,
        "frame_digests": {
            f"frame_{idx:06d}.png": digest for idx, digest, _ in results if digest
        },
        "timings_s": {
            "load": round(t_loaded - t_start, 4),
            "build": round(t_built - t_loaded, 4),
            "render": round(t_rendered - t_built, 4),
            "wall": round(time.perf_counter() - t_start, 4),
        },
    }
    manifest_path = job.manifest_path or str(Path(job.frames_dir) / "manifest.json")
    Path(manifest_path).parent.mkdir(parents=True, exist_ok=True)
    Path(manifest_path).write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest


class _BufferWriter:
    """Accumulates little-endian binary sections aligned to 4 bytes."""

    def __init__(self):
        self._chunks: list[bytes] = []
        self._offset = 0

    def add(self, data: bytes) -> tuple[int, int]:
        pad = (-self._offset) % 4
        if pad:
            self._chunks.append(b"\x00" * pad)
            self._offset += pad
        start = self._offset
        self._chunks.append(data)
        self._offset += len(data)
        return start, len(data)

    def bytes(self) -> bytes:
        return b"".join(self._chunks)


def _mesh_entry(mesh: Mesh, name: str, writer: _BufferWriter) -> dict:
    positions = mesh.positions.astype("<f4")
    normals = mesh.normals.astype("<f4")
    indices = mesh.triangles.astype("<u4")
    entry: dict = {
        "name": name,
        "material": {
            "kind": mesh.material.kind,
            "color": list(mesh.material.color),
            "texture": mesh.material.texture_name,
        },
        "two_sided": mesh.two_sided,
        "vertex_count": int(len(positions)),
        "index_count": int(indices.size),
    }
    off, length = writer.add(positions.tobytes())
    entry["positions"] = {"offset": off, "length": length}
    off, length = writer.add(normals.tobytes())
    entry["normals"] = {"offset": off, "length": length}
    if mesh.uvs is not None:
        off, length = writer.add(mesh.uvs.astype("<f4").tobytes())
        entry["uvs"] = {"offset": off, "length": length}
    else:
        entry["uvs"] = None
    off, length = writer.add(indices.tobytes())
    entry["indices"] = {"offset": off, "length": length}
    return entry


def export_bundle(job: RenderJob) -> dict:
    """Write the portable scene bundle: manifest JSON + one binary buffer.

    The bundle carries everything the interactive viewer needs (meshes,
    object transforms, signal timelines, vehicle tracks, texture images);
    the original SUMO files are not needed to load it.
    """
    if not job.bundle_path:
        raise RenderError("output.bundle is required for export")
    inputs = load_inputs(job)
    scene = prepare_scene(job, inputs)

    bundle_dir = Path(job.bundle_path)
    bundle_dir.mkdir(parents=True, exist_ok=True)

    writer = _BufferWriter()
    meshes = [
        _mesh_entry(scene.ground_mesh, "ground", writer),
        _mesh_entry(scene.road_surface, "road_surface", writer),
        _mesh_entry(scene.road_markings, "road_markings", writer),
    ]

    model_entries: dict[str, list[dict]] = {}
    for name, parts in sorted(scene.models.items()):
        model_entries[name] = [
            _mesh_entry(part, f"{name}:{i}", writer) for i, part in enumerate(parts)
        ]

    objects = []
    for obj in scene.static_objects:
        off, length = writer.add(obj.transform.matrix().astype("<f4").tobytes())
        objects.append(
            {
                "kind": obj.kind,
                "model": obj.model,
                "poi_id": obj.poi_id,
                "transform": {"offset": off, "length": length},
            }
        )

    heads = []
    for head in scene.signal_heads:
        off, length = writer.add(head.transform.matrix().astype("<f4").tobytes())
        heads.append(
            {
                "tls": head.tls_id,
                "link": head.link_index,
                "design": head.design.value,
                "dark": head.dark,
                "transform": {"offset": off, "length": length},
            }
        )

    timelines = []
    for tls_id, link in scene.signal_timeline.links():
        intervals = scene.signal_timeline.intervals(tls_id, link)
        data = np.array(
            [[t, _COLOR_CODES[color]] for t, color in intervals], dtype="<f4"
        )
        off, length = writer.add(data.tobytes())
        timelines.append(
            {
                "tls": tls_id,
                "link": link,
                "count": len(intervals),
                "intervals": {"offset": off, "length": length},
            }
        )

    tracks = []
    t_min, t_max = None, None
    for track, model_index in scene.vehicle_tracks:
        interleaved = np.column_stack([track.x, track.y, track.heading_deg]).astype("<f4")
        off, length = writer.add(interleaved.tobytes())
        tracks.append(
            {
                "vehicle": track.vehicle_id,
                "model": f"car{model_index}",
                "fps": track.fps,
                "t0": track.t0,
                "frames": len(track),
                "samples": {"offset": off, "length": length},
            }
        )
        end_t = track.t0 + (len(track) - 1) / track.fps
        t_min = track.t0 if t_min is None else min(t_min, track.t0)
        t_max = end_t if t_max is None else max(t_max, end_t)

    textures = []
    texture_names = {scene.sky.texture_name, scene.ground.texture_name}
    for name in sorted(texture_names):
        png = assets.get_texture(name).to_png_bytes()
        off, length = writer.add(png)
        textures.append({"name": name, "format": "png", "offset": off, "length": length})

    blob = writer.bytes()
    (bundle_dir / "scene.bin").write_bytes(blob)

    manifest = {
        "format": "scene-bundle",
        "version": BUNDLE_VERSION,
        "buffer": {
            "file": "scene.bin",
            "byte_length": len(blob),
            "sha256": hashlib.sha256(blob).hexdigest(),
        },
        "endianness": "little",
        "inputs": inputs.digests,
        "sky": {
            "texture": scene.sky.texture_name,
            "radius": scene.sky.radius,
            "center": [float(v) for v in scene.sky.center],
        },
        "ground": {
            "texture": scene.ground.texture_name,
            "tile_size": scene.ground.tile_size,
            "extent": list(scene.ground.extent),
        },
        "light": {
            "direction": [float(v) for v in scene.light.direction],
            "intensity": scene.light.intensity,
        },
        "fps": job.smoothing.fps,
        "yellow_duration": job.yellow_duration,
        "time_span": [t_min if t_min is not None else 0.0,
                      t_max if t_max is not None else 0.0],
        "meshes": meshes,
        "models": model_entries,
        "objects": objects,
        "signal_heads": heads,
        "signal_timelines": timelines,
        "tracks": tracks,
        "textures": textures,
    }
    (bundle_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2), encoding="utf-8"
    )
    return manifest


def info_summary(job: RenderJob) -> dict:
    """Statistics about the configured inputs, for the `info` CLI verb."""
    inputs = load_inputs(job)
    network = inputs.network
    log = inputs.log
    lane_count = sum(len(e.lanes) for e in network.edges)
    total_lane_length = 0.0
    for edge in network.normal_edges():
        for lane in edge.lanes:
            d = np.diff(lane.shape, axis=0)
            total_lane_length += float(np.sum(np.sqrt(np.sum(d * d, axis=1))))
    sample_count = sum(len(s) for s in log.vehicles.values())
    return {
        "network": {
            "edges": len(network.edges),
            "normal_edges": len(network.normal_edges()),
            "lanes": lane_count,
            "junctions": len(network.junctions),
            "signal_programs": len(network.signal_programs),
            "total_lane_length_m": round(total_lane_length, 1),
            "bounds": list(network.bounds),
        },
        "trajectories": {
            "vehicles": len(log.vehicles),
            "samples": sample_count,
            "time_step_s": log.time_step,
            "span": [log.begin, log.end],
        },
        "signals": {"entries": len(inputs.signal_log.entries)},
        "pois": {"count": len(inputs.pois.pois)},
    }
