"""sumorender: batch 3D visualisation of SUMO microsimulation outputs.

Parses standard SUMO files (network, FCD trajectories, signal states, POIs),
smooths trajectories to frame rate, builds an immutable 3D scene graph and
renders it headless with a software rasterizer. Scenes can also be exported
as a portable bundle for the interactive browser viewer.
"""

from .config import RenderJob, load_config
from .ingest import (
    PoiSet,
    RoadNetwork,
    SignalStateLog,
    TrajectoryLog,
    parse_fcd,
    parse_network,
    parse_pois,
    parse_tls_states,
)
from .pipeline import export_bundle, info_summary, render_sequence
from .render import Camera, FrameBuffer, build_camera, render_frame
from .scene import SceneGraph, SceneOptions, build_scene
from .signals import HeadDesign, LampColor, build_signal_timeline
from .smoothing import SmoothedTrack, SmoothingParams, smooth_track

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "FrameBuffer",
    "HeadDesign",
    "LampColor",
    "PoiSet",
    "RenderJob",
    "RoadNetwork",
    "SceneGraph",
    "SceneOptions",
    "SignalStateLog",
    "SmoothedTrack",
    "SmoothingParams",
    "TrajectoryLog",
    "build_camera",
    "build_scene",
    "build_signal_timeline",
    "export_bundle",
    "info_summary",
    "load_config",
    "parse_fcd",
    "parse_network",
    "parse_pois",
    "parse_tls_states",
    "render_frame",
    "render_sequence",
    "smooth_track",
]
