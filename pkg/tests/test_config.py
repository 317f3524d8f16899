"""Config loading: defaults, strict key checking, mode-specific requirements."""

import pytest

from sumorender.config import load_config
from sumorender.errors import ConfigError

MINIMAL_CONFIG = """
inputs:
  net: net.xml
  fcd: fcd.xml
render:
  mode: eulerian
  camera:
    position: [0, 50, 50]
    look_at: [0, 0, 0]
"""


class TestLoadConfig:
    def test_minimal_applies_defaults(self):
        job = load_config(MINIMAL_CONFIG)
        assert job.smoothing.fps == 25
        assert job.smoothing.window == 21
        assert job.smoothing.heading_window == 41
        assert job.smoothing.min_step == 0.03
        assert job.yellow_duration == 3.0
        assert job.resolution == (1280, 720)
        assert job.seed == 0
        assert job.sky == "sky_blue" and job.ground == "ground_grass"

    def test_lagrangian_requires_vehicle(self):
        text = MINIMAL_CONFIG.replace("eulerian", "lagrangian")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(text)  # position/look_at are not lagrangian keys
        text = """
inputs: {net: a, fcd: b}
render:
  mode: lagrangian
  camera: {}
"""
        with pytest.raises(ConfigError, match="camera.vehicle required"):
            load_config(text)

    def test_unknown_key_named(self):
        text = MINIMAL_CONFIG + "\nrendr:\n  x: 1\n"
        with pytest.raises(ConfigError, match="rendr"):
            load_config(text)

    def test_unknown_nested_key_named(self):
        text = MINIMAL_CONFIG.replace("mode: eulerian", "mode: eulerian\n  qualty: low")
        with pytest.raises(ConfigError, match="qualty"):
            load_config(text)

    def test_missing_required_input(self):
        with pytest.raises(ConfigError, match="inputs.net required"):
            load_config("inputs: {fcd: b}\nrender: {mode: eulerian}")

    def test_bad_window_order(self):
        text = MINIMAL_CONFIG + "\ntime:\n  begin: 10\n  end: 5\n"
        with pytest.raises(ConfigError, match="begin"):
            load_config(text)

    def test_bad_mode(self):
        text = MINIMAL_CONFIG.replace("eulerian", "orbital")
        with pytest.raises(ConfigError, match="orbital"):
            load_config(text)

    def test_cinematic_waypoints(self):
        text = """
inputs: {net: a, fcd: b}
render:
  mode: cinematic
  camera:
    waypoints:
      - {t: 0, position: [0, 10, 0], look_at: [10, 0, 0]}
      - {t: 5, position: [50, 10, 0], look_at: [60, 0, 0]}
"""
        job = load_config(text)
        assert len(job.camera.waypoints) == 2
        assert job.camera.waypoints[1]["t"] == 5.0

    def test_cinematic_single_waypoint_rejected(self):
        text = """
inputs: {net: a, fcd: b}
render:
  mode: cinematic
  camera:
    waypoints:
      - {t: 0, position: [0, 10, 0], look_at: [10, 0, 0]}
"""
        with pytest.raises(ConfigError, match="waypoints"):
            load_config(text)

    def test_overrides(self):
        text = MINIMAL_CONFIG + """
smoothing: {fps: 30, window: 11}
time: {begin: 5, end: 12.5}
output: {frames_dir: out}
"""
        job = load_config(text)
        assert job.smoothing.fps == 30
        assert job.smoothing.window == 11
        assert job.smoothing.heading_window == 41  # untouched default
        assert (job.begin, job.end) == (5.0, 12.5)
        assert job.frames_dir == "out"

    def test_not_yaml(self):
        with pytest.raises(ConfigError):
            load_config("{] nope")

    def test_scalar_document_rejected(self):
        with pytest.raises(ConfigError):
            load_config("42")
