"""Signature capture parsing, trajectory normalization, and feature extraction.

A raw capture arrives in the wire format (see docs/wire-format.md): a list of
point records with integer ``t`` (ms since capture start), numeric ``x``,
``y``, ``p`` (pressure in [0,1]) and boolean ``pen`` (surface contact).
The pipeline is::

    wire dict -> SignatureSample -> preprocess -> (n, 3) trajectory
              -> extract_features -> (n, 7) z-scored feature sequence

All functions are pure; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSample,
    EmptySample,
    MalformedSample,
    NonMonotonicTime,
    PressureOutOfRange,
)

RESAMPLE_LEN = 256
FEATURE_CHANNELS = ("x", "y", "p", "dx", "dy", "speed", "angle")
N_CHANNELS = len(FEATURE_CHANNELS)


@dataclass(frozen=True)
class SignaturePoint:
    t: int
    x: float
    y: float
    p: float
    pen_down: bool


@dataclass(frozen=True)
class SignatureSample:
    points: tuple[SignaturePoint, ...]
    device_id: str = "unknown"


def parse_sample(raw) -> SignatureSample:
    """Parse and validate a wire-format capture.

    ``raw`` is either the full sample object ``{"device_id": ..., "points":
    [...]}`` or a bare point list. Raises EmptySample, NonMonotonicTime or
    PressureOutOfRange on semantic violations and MalformedSample on
    structural ones.
    """
    device_id = "unknown"
    if isinstance(raw, dict):
        points_raw = raw.get("points")
        device_id = raw.get("device_id", "unknown")
        if not isinstance(device_id, str):
            raise MalformedSample("device_id must be a string")
    else:
        points_raw = raw
    if not isinstance(points_raw, (list, tuple)):
        raise MalformedSample("points must be a list")

    points = []
    prev_t = None
    for i, rec in enumerate(points_raw):
        if not isinstance(rec, dict):
            raise MalformedSample(f"point {i} is not an object")
        try:
            t, x, y, p, pen = rec["t"], rec["x"], rec["y"], rec["p"], rec["pen"]
        except KeyError as e:
            raise MalformedSample(f"point {i} missing field {e.args[0]!r}") from None
        t = _as_int_ms(t, i)
        if not isinstance(pen, bool):
            raise MalformedSample(f"point {i}: pen must be boolean")
        for name, v in (("x", x), ("y", y), ("p", p)):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise MalformedSample(f"point {i}: {name} must be numeric")
            if not np.isfinite(v):
                raise MalformedSample(f"point {i}: {name} must be finite")
        if t < 0:
            raise NonMonotonicTime(f"point {i}: t={t} < 0")
        if prev_t is not None and t <= prev_t:
            raise NonMonotonicTime(f"point {i}: t={t} after t={prev_t}")
        prev_t = t
        if not 0.0 <= p <= 1.0:
            raise PressureOutOfRange(f"point {i}: p={p}")
        points.append(SignaturePoint(t, float(x), float(y), float(p), pen))

    if sum(1 for pt in points if pt.pen_down) < 2:
        raise EmptySample("fewer than 2 pen-down points")
    return SignatureSample(points=tuple(points), device_id=device_id)


def _as_int_ms(t, i: int) -> int:
    if isinstance(t, bool):
        raise MalformedSample(f"point {i}: t must be an integer")
    if isinstance(t, int):
        return t
    if isinstance(t, float) and t.is_integer():
        return int(t)
    raise MalformedSample(f"point {i}: t must be an integer millisecond count")


def serialize_sample(sample: SignatureSample) -> dict:
    """Inverse of parse_sample: emit the wire-format object (bit-exact round trip)."""
    return {
        "device_id": sample.device_id,
        "points": [
            {"t": pt.t, "x": pt.x, "y": pt.y, "p": pt.p, "pen": pt.pen_down}
            for pt in sample.points
        ],
    }


def preprocess(sample: SignatureSample, n: int = RESAMPLE_LEN) -> np.ndarray:
    """Resample, center, and scale a sample into an (n, 3) trajectory.

    Pen-up points are dropped (pressure is undefined off-surface); the
    remaining points are linearly resampled onto n instants uniform in t,
    translated so the (x, y) centroid sits at the origin, and isotropically
    scaled so the larger coordinate half-range equals 1. Pressure passes
    through resampling unchanged.
    """
    if n < 8:
        raise ValueError(f"resample length must be >= 8, got {n}")
    down = [pt for pt in sample.points if pt.pen_down]
    if len(down) < 2:
        raise EmptySample("fewer than 2 pen-down points")
    t = np.array([pt.t for pt in down], dtype=np.float64)
    x = np.array([pt.x for pt in down], dtype=np.float64)
    y = np.array([pt.y for pt in down], dtype=np.float64)
    p = np.array([pt.p for pt in down], dtype=np.float64)

    grid = np.linspace(t[0], t[-1], n)
    xr = np.interp(grid, t, x)
    yr = np.interp(grid, t, y)
    pr = np.interp(grid, t, p)

    xr = xr - xr.mean()
    yr = yr - yr.mean()
    scale = max(np.abs(xr).max(), np.abs(yr).max())
    if scale == 0.0:
        raise DegenerateSample("zero spatial extent")
    xr /= scale
    yr /= scale
    return np.column_stack([xr, yr, pr])


def extract_features(traj: np.ndarray) -> np.ndarray:
    """Derive the 7 z-scored channels from an (n, 3) normalized trajectory.

    Channels: x, y, p, dx, dy, speed, turning angle. Deltas are forward
    differences with the final difference repeated; the turning angle is
    atan2(dy, dx) unwrapped. Each channel is z-scored with the population
    standard deviation; zero-variance channels become all zeros.
    """
    traj = np.asarray(traj, dtype=np.float64)
    if traj.ndim != 2 or traj.shape[1] != 3 or traj.shape[0] < 2:
        raise ValueError("expected an (n, 3) trajectory with n >= 2")
    x, y, p = traj[:, 0], traj[:, 1], traj[:, 2]
    dx = np.empty_like(x)
    dx[:-1] = np.diff(x)
    dx[-1] = dx[-2]
    dy = np.empty_like(y)
    dy[:-1] = np.diff(y)
    dy[-1] = dy[-2]
    speed = np.hypot(dx, dy)
    angle = np.unwrap(np.arctan2(dy, dx))
    channels = np.column_stack([x, y, p, dx, dy, speed, angle])
    return zscore(channels)


def zscore(channels: np.ndarray) -> np.ndarray:
    """Per-column z-score with population std; constant columns map to zeros.

    "Constant" includes columns whose spread is below 1e-8 of their
    magnitude: centering error alone is O(eps * max|x|), so z-scoring such a
    column would amplify rounding noise into a full-scale channel (a 2-point
    stroke resampled to a line is the classic case). The floor keeps the
    mean of every surviving z-scored column well inside 1e-6.
    """
    mu = channels.mean(axis=0)
    sd = channels.std(axis=0)
    floor = 1e-8 * np.maximum(1.0, np.abs(channels).max(axis=0))
    varying = sd > floor
    out = np.zeros_like(channels)
    out[:, varying] = (channels[:, varying] - mu[varying]) / sd[varying]
    return out


def sample_to_features(sample: SignatureSample, n: int = RESAMPLE_LEN) -> np.ndarray:
    """Full preprocessing pipeline: sample -> (n, 7) feature sequence."""
    return extract_features(preprocess(sample, n))
