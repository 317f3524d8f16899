"""Render job configuration: YAML document -> validated RenderJob.

Sections: inputs / time / smoothing / render / output. Unknown keys are
rejected by name so typos fail loudly instead of silently using a default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError
from .smoothing import SmoothingParams

MODES = ("eulerian", "lagrangian", "cinematic")

_SCHEMA = {
    "inputs": {"net", "fcd", "tls", "pois"},
    "time": {"begin", "end"},
    "smoothing": {"fps", "window", "heading_window", "min_step"},
    "render": {
        "mode", "camera", "sky", "ground", "resolution", "seed",
        "yellow_duration", "fov", "workers",
    },
    "output": {"frames_dir", "bundle", "raw_stream", "manifest", "tracks_csv"},
}
_CAMERA_KEYS = {
    "eulerian": {"position", "look_at"},
    "lagrangian": {"vehicle", "behind", "height", "look_ahead"},
    "cinematic": {"waypoints"},
}


@dataclass
class CameraConfig:
    mode: str
    position: list[float] | None = None
    look_at: list[float] | None = None
    vehicle: str | None = None
    behind: float = 8.0
    height: float = 4.0
    look_ahead: float = 10.0
    waypoints: list[dict] = field(default_factory=list)


@dataclass
class RenderJob:
    net_path: str
    fcd_path: str
    tls_path: str | None
    pois_path: str | None
    begin: float | None  # None: use the log span
    end: float | None
    smoothing: SmoothingParams
    camera: CameraConfig
    sky: str = "sky_blue"
    ground: str = "ground_grass"
    resolution: tuple[int, int] = (1280, 720)
    seed: int = 0
    yellow_duration: float = 3.0
    fov: float = 60.0
    workers: int = 0  # 0: use available parallelism
    frames_dir: str | None = None
    bundle_path: str | None = None
    raw_stream: str | None = None
    manifest_path: str | None = None
    tracks_csv: str | None = None

    def parameters_dict(self) -> dict:
        """Resolved parameter values, recorded verbatim in run manifests."""
        cam = {"mode": self.camera.mode}
        if self.camera.mode == "eulerian":
            cam.update(position=self.camera.position, look_at=self.camera.look_at)
        elif self.camera.mode == "lagrangian":
            cam.update(
                vehicle=self.camera.vehicle, behind=self.camera.behind,
                height=self.camera.height, look_ahead=self.camera.look_ahead,
            )
        else:
            cam.update(waypoints=self.camera.waypoints)
        return {
            "time": {"begin": self.begin, "end": self.end},
            "smoothing": {
                "fps": self.smoothing.fps,
                "window": self.smoothing.window,
                "heading_window": self.smoothing.heading_window,
                "min_step": self.smoothing.min_step,
            },
            "render": {
                "camera": cam, "sky": self.sky, "ground": self.ground,
                "resolution": list(self.resolution), "seed": self.seed,
                "yellow_duration": self.yellow_duration, "fov": self.fov,
            },
        }


def _require(section: dict, section_name: str, key: str):
    if key not in section or section[key] is None:
        raise ConfigError(f"{section_name}.{key} required")
    return section[key]


def _check_keys(mapping: dict, allowed: set[str], where: str):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def load_config(text: str) -> RenderJob:
    """Parse a YAML job description and apply all defaults."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping of sections")
    _check_keys(doc, set(_SCHEMA), "config")
    for name, allowed in _SCHEMA.items():
        section = doc.get(name)
        if section is None:
            continue
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        _check_keys(section, allowed, name)

    inputs = doc.get("inputs") or {}
    time_sec = doc.get("time") or {}
    smoothing_sec = doc.get("smoothing") or {}
    render_sec = doc.get("render") or {}
    output_sec = doc.get("output") or {}

    net = _require(inputs, "inputs", "net")
    fcd = _require(inputs, "inputs", "fcd")

    begin = time_sec.get("begin")
    end = time_sec.get("end")
    if begin is not None and end is not None and not (float(begin) < float(end)):
        raise ConfigError(f"time.begin ({begin}) must be below time.end ({end})")

    smoothing = SmoothingParams(
        fps=float(smoothing_sec.get("fps", SmoothingParams.fps)),
        window=int(smoothing_sec.get("window", SmoothingParams.window)),
        heading_window=int(
            smoothing_sec.get("heading_window", SmoothingParams.heading_window)
        ),
        min_step=float(smoothing_sec.get("min_step", SmoothingParams.min_step)),
    )

    mode = _require(render_sec, "render", "mode")
    if mode not in MODES:
        raise ConfigError(f"render.mode must be one of {', '.join(MODES)}; got {mode!r}")
    camera_sec = render_sec.get("camera") or {}
    _check_keys(camera_sec, _CAMERA_KEYS[mode], f"render.camera ({mode})")
    camera = CameraConfig(mode=mode)
    if mode == "eulerian":
        camera.position = [float(v) for v in _require(camera_sec, "camera", "position")]
        camera.look_at = [float(v) for v in _require(camera_sec, "camera", "look_at")]
        if len(camera.position) != 3 or len(camera.look_at) != 3:
            raise ConfigError("camera.position and camera.look_at must be [x, y, z]")
    elif mode == "lagrangian":
        camera.vehicle = str(_require(camera_sec, "camera", "vehicle"))
        camera.behind = float(camera_sec.get("behind", camera.behind))
        camera.height = float(camera_sec.get("height", camera.height))
        camera.look_ahead = float(camera_sec.get("look_ahead", camera.look_ahead))
    else:
        waypoints = _require(camera_sec, "camera", "waypoints")
        if not isinstance(waypoints, list) or len(waypoints) < 2:
            raise ConfigError("camera.waypoints must list at least 2 waypoints")
        parsed = []
        for i, wp in enumerate(waypoints):
            _check_keys(wp, {"t", "position", "look_at"}, f"camera.waypoints[{i}]")
            parsed.append(
                {
                    "t": float(_require(wp, f"camera.waypoints[{i}]", "t")),
                    "position": [float(v) for v in _require(wp, f"camera.waypoints[{i}]", "position")],
                    "look_at": [float(v) for v in _require(wp, f"camera.waypoints[{i}]", "look_at")],
                }
            )
        camera.waypoints = parsed

    resolution = render_sec.get("resolution", [1280, 720])
    if len(resolution) != 2 or any(int(v) <= 0 for v in resolution):
        raise ConfigError("render.resolution must be [width, height] of positive ints")

    return RenderJob(
        net_path=str(net),
        fcd_path=str(fcd),
        tls_path=str(inputs["tls"]) if inputs.get("tls") else None,
        pois_path=str(inputs["pois"]) if inputs.get("pois") else None,
        begin=float(begin) if begin is not None else None,
        end=float(end) if end is not None else None,
        smoothing=smoothing,
        camera=camera,
        sky=str(render_sec.get("sky", "sky_blue")),
        ground=str(render_sec.get("ground", "ground_grass")),
        resolution=(int(resolution[0]), int(resolution[1])),
        seed=int(render_sec.get("seed", 0)),
        yellow_duration=float(render_sec.get("yellow_duration", 3.0)),
        fov=float(render_sec.get("fov", 60.0)),
        workers=int(render_sec.get("workers", 0)),
        frames_dir=output_sec.get("frames_dir"),
        bundle_path=output_sec.get("bundle"),
        raw_stream=output_sec.get("raw_stream"),
        manifest_path=output_sec.get("manifest"),
        tracks_csv=output_sec.get("tracks_csv"),
    )


def cinematic_path_from_config(camera: CameraConfig):
    from .render import CinematicPath

    return CinematicPath(
        waypoints=[
            (
                wp["t"],
                np.array(wp["position"], dtype=np.float64),
                np.array(wp["look_at"], dtype=np.float64),
            )
            for wp in camera.waypoints
        ]
    )
