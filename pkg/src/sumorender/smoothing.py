"""Trajectory smoothing: low-rate discrete samples to high-rate coherent tracks.

Five stages, applied per vehicle over exactly its lifespan:

1. unwrap the sampled compass angles so the signal is continuous,
2. linearly resample position and unwrapped angle to the output frame rate,
3. centred moving average over all three components (clipped windows at the
   boundaries),
4. re-estimate orientation from the per-frame movement direction, falling
   back to the smoothed angle signal where the step distance is too small
   for a stable estimate, then average the candidates with a wider window,
5. assemble the final track with headings normalized to [0, 360).

All functions are pure; smoothing different vehicles in parallel is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import RawSample

# Defaults tuned for 25 fps output; the window sizes do not auto-scale with
# fps, override them in the config when rendering at other rates.
DEFAULT_FPS = 25.0
DEFAULT_WINDOW = 21
DEFAULT_HEADING_WINDOW = 41
DEFAULT_MIN_STEP = 0.03  # meters of displacement per output frame


@dataclass
class SmoothingParams:
    fps: float = DEFAULT_FPS
    window: int = DEFAULT_WINDOW  # odd, frames; position/angle moving average
    heading_window: int = DEFAULT_HEADING_WINDOW  # odd, frames; heading average
    min_step: float = DEFAULT_MIN_STEP  # below this, keep the angle-signal heading

    def __post_init__(self):
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        for name in ("window", "heading_window"):
            value = getattr(self, name)
            if value < 1 or value % 2 == 0:
                raise ValidationError(f"{name} must be a positive odd integer, got {value}")
        if self.min_step < 0:
            raise ValidationError(f"min_step must be >= 0, got {self.min_step}")


@dataclass
class SmoothedTrack:
    vehicle_id: str
    fps: float
    t0: float
    x: np.ndarray  # (N,) meters
    y: np.ndarray  # (N,) meters
    heading_deg: np.ndarray  # (N,) compass degrees in [0, 360)
    source_span: tuple[float, float]

    def __len__(self) -> int:
        return len(self.x)

    def frame_time(self, frame: int) -> float:
        return self.t0 + frame / self.fps

    def frame_at(self, t: float) -> int | None:
        """Frame index whose sample time is nearest below t, or None outside the lifespan."""
        idx = int(np.floor((t - self.t0) * self.fps + 1e-9))
        if idx < 0 or idx >= len(self.x):
            return None
        return idx


def unwrap_angles(angles_deg) -> np.ndarray:
    """Remove artificial full-turn jumps from a sampled angle sequence.

    The first output equals the first input; every consecutive output
    difference lies in (-180, 180]; each output is congruent to its input
    modulo 360.
    """
    a = np.asarray(angles_deg, dtype=np.float64)
    if a.size == 0:
        raise ValidationError("unwrap_angles requires a non-empty sequence")
    if not np.all(np.isfinite(a)):
        raise ValidationError("unwrap_angles requires finite angles")
    if a.size == 1:
        return a.copy()
    deltas = 180.0 - np.mod(180.0 - np.diff(a), 360.0)
    out = np.empty_like(a)
    out[0] = a[0]
    out[1:] = a[0] + np.cumsum(deltas)
    return out


def frame_count(span: float, fps: float) -> int:
    """Number of output frames covering a raw time span: floor(span * fps) + 1."""
    return int(np.floor(span * fps + 1e-9)) + 1


def resample_linear(times, values, fps: float) -> np.ndarray:
    """Resample a sampled signal to uniform spacing 1/fps by linear interpolation.

    ``times`` must be strictly increasing. ``values`` may be 1D (one channel)
    or 2D of shape (len(times), channels). A single input sample yields a
    single output sample.
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.size == 0:
        raise ValidationError("resample_linear requires at least one sample")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("resample_linear requires strictly increasing times")
    if t.size == 1:
        return v[:1].copy()
    n = frame_count(float(t[-1] - t[0]), fps)
    # A single division per frame keeps times exact where the grids coincide.
    out_t = t[0] + np.arange(n, dtype=np.float64) / fps
    if v.ndim == 1:
        return np.interp(out_t, t, v)
    return np.column_stack([np.interp(out_t, t, v[:, c]) for c in range(v.shape[1])])


def rolling_mean(seq, window: int) -> np.ndarray:
    """Centred moving average with clipped windows near the boundaries.

    ``window`` must be odd and >= 1. Element t averages indices j with
    |j - t| <= (window - 1) / 2, restricted to the sequence bounds, so the
    effective window cardinality shrinks at the ends.
    """
    if window < 1 or window % 2 == 0:
        raise ValidationError(f"window must be a positive odd integer, got {window}")
    a = np.asarray(seq, dtype=np.float64)
    n = a.shape[0]
    if window == 1 or n <= 1:
        return a.copy()
    half = (window - 1) // 2
    out = np.empty_like(a)
    if n >= window:
        # Full windows summed independently (no running-sum cancellation).
        windows = np.lib.stride_tricks.sliding_window_view(a, window, axis=0)
        out[half : n - half] = windows.sum(axis=-1) / window
        clipped = list(range(half)) + list(range(n - half, n))
    else:
        clipped = list(range(n))
    for t in clipped:
        lo = max(0, t - half)
        hi = min(n, t + half + 1)
        out[t] = a[lo:hi].mean(axis=0)
    return out


def estimate_headings(positions, fallback_deg, params: SmoothingParams) -> np.ndarray:
    """Velocity-based heading estimate over an already-resampled track.

    Where the per-frame step distance exceeds ``params.min_step`` the heading
    candidate is the movement direction, continued on the unwrapped branch of
    its predecessor; elsewhere the candidate falls back to the (unwrapped)
    angle signal. Candidates are then averaged with ``heading_window``.
    The result stays on the unwrapped branch; callers normalize at output.
    """
    pos = np.asarray(positions, dtype=np.float64)
    fb = np.asarray(fallback_deg, dtype=np.float64)
    if pos.shape[0] != fb.shape[0]:
        raise ValidationError(
            f"positions ({pos.shape[0]}) and fallback ({fb.shape[0]}) lengths differ"
        )
    n = pos.shape[0]
    if n == 0:
        raise ValidationError("estimate_headings requires at least one frame")
    if n == 1:
        return fb.copy()

    dx = np.diff(pos[:, 0])
    dy = np.diff(pos[:, 1])
    step = np.sqrt(dx * dx + dy * dy)
    moving = step > params.min_step

    candidates = np.empty(n, dtype=np.float64)
    motion_heading = 90.0 - np.degrees(np.arctan2(dy, dx))
    candidates[1:] = np.where(moving, motion_heading, fb[1:])
    # First frame copies the second frame's source rule, using the 0->1 step.
    candidates[0] = motion_heading[0] if moving[0] else fb[0]

    # atan2 output is branch-cut bounded; re-unwrap before averaging so the
    # window never straddles a wrap.
    candidates = unwrap_angles(candidates)
    return rolling_mean(candidates, params.heading_window)


def smooth_track(
    raw: list[RawSample],
    params: SmoothingParams | None = None,
    vehicle_id: str = "",
) -> SmoothedTrack:
    """Run the full smoothing pipeline over one vehicle's raw samples."""
    if params is None:
        params = SmoothingParams()
    if not raw:
        raise ValidationError("smooth_track requires at least one raw sample")

    times = np.array([s.t for s in raw], dtype=np.float64)
    if np.any(np.diff(times) <= 0):
        raise ValidationError(
            f"vehicle {vehicle_id!r}: raw sample times must be strictly increasing"
        )
    xy = np.array([[s.x, s.y] for s in raw], dtype=np.float64)
    angles = unwrap_angles([s.angle_deg for s in raw])

    columns = np.column_stack([xy, angles])
    resampled = resample_linear(times, columns, params.fps)
    smoothed = rolling_mean(resampled, params.window)

    headings = estimate_headings(smoothed[:, :2], smoothed[:, 2], params)
    headings = np.mod(headings, 360.0)
    headings[headings == 360.0] = 0.0

    return SmoothedTrack(
        vehicle_id=vehicle_id,
        fps=params.fps,
        t0=float(times[0]),
        x=smoothed[:, 0].copy(),
        y=smoothed[:, 1].copy(),
        heading_deg=headings,
        source_span=(float(times[0]), float(times[-1])),
    )


def smooth_all(log_vehicles: dict[str, list[RawSample]], params: SmoothingParams | None = None) -> list[SmoothedTrack]:
    """Smooth every vehicle in a trajectory log, sorted by vehicle id."""
    params = params or SmoothingParams()
    return [
        smooth_track(samples, params, vehicle_id=vid)
        for vid, samples in sorted(log_vehicles.items())
    ]


def dump_tracks_csv(tracks: list[SmoothedTrack], path) -> None:
    """Debug dump: one row per frame with full float precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("vehicle_id,frame,t,x,y,heading_deg\n")
        for track in tracks:
            for k in range(len(track)):
                fh.write(
                    f"{track.vehicle_id},{k},{track.frame_time(k)!r},"
                    f"{track.x[k]!r},{track.y[k]!r},{track.heading_deg[k]!r}\n"
                )
