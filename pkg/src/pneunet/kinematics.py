"""Bending angle from tracked keypoints or from FEM end-face normals.

Angles run over [0, 360): the unsigned angle between the two end directions
is unfolded past 180 deg when the cross product points against the bending
orientation (``handedness`` in 2-D, ``axis`` in 3-D).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np


class DegenerateFrameError(ValueError):
    pass


class KeypointCSVError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


@dataclass(frozen=True)
class KeypointFrame:
    timestamp: float
    points: tuple[tuple[float, float, float], ...]  # (x px, y px, likelihood), fixed -> moving end
    frame: int = 0
    low_confidence: bool = False

    def __post_init__(self):
        if len(self.points) < 4:
            raise ValueError("a keypoint frame needs at least 4 points")

    @property
    def xy(self) -> np.ndarray:
        return np.array([(x, y) for x, y, _ in self.points])


@dataclass(frozen=True)
class AngleSample:
    timestamp: float
    angle: float


def _unfold(cross: float, dot: float, orientation: float) -> float:
    unsigned = math.degrees(math.atan2(abs(cross), dot))
    if orientation * cross < 0:
        return 360.0 - unsigned
    return unsigned


def angle_between_2d(v1, v2, handedness: int = 1) -> float:
    """Angle in [0, 360) turning from ``v1`` to ``v2``; ``handedness`` +1 means counter-clockwise."""
    v1 = np.asarray(v1, float)
    v2 = np.asarray(v2, float)
    if not (np.any(v1) and np.any(v2)):
        raise DegenerateFrameError("coincident keypoints give a zero-length vector")
    cross = float(v1[0] * v2[1] - v1[1] * v2[0])
    dot = float(v1 @ v2)
    a = _unfold(cross, dot, handedness)
    return 0.0 if a == 360.0 else a


def angle_from_keypoints(frame: KeypointFrame, handedness: int = 1) -> float:
    """Angle between the fixed-end vector (p0 -> p1) and the moving-end vector (p[-2] -> p[-1])."""
    xy = frame.xy
    return angle_between_2d(xy[1] - xy[0], xy[-1] - xy[-2], handedness)


def angle_from_end_normals(n_fixed, n_moving, axis=(1.0, 0.0, 0.0)) -> float:
    """Angle between end-face normals, unfolded past 180 deg about the bending ``axis``."""
    a = np.asarray(n_fixed, float)
    b = np.asarray(n_moving, float)
    ax = np.asarray(axis, float)
    if not (np.any(a) and np.any(b) and np.any(ax)):
        raise ValueError("normals and bending axis must be non-zero")
    cross = np.cross(a, b)
    along = float(cross @ ax) / float(np.linalg.norm(ax))
    sin = float(np.linalg.norm(cross))
    ang = _unfold(math.copysign(sin, along) if along != 0 else sin, float(a @ b), 1.0)
    return 0.0 if ang == 360.0 else ang


def angles_from_frames(frames: Iterable[KeypointFrame], handedness: int = 1) -> list[AngleSample]:
    return [AngleSample(f.timestamp, angle_from_keypoints(f, handedness)) for f in frames]


def _point_count(header: list[str]) -> int:
    if header[:2] != ["frame", "time_s"] or (len(header) - 2) % 3:
        raise KeypointCSVError(1, "header must be frame,time_s,x0,y0,l0,...")
    n = (len(header) - 2) // 3
    expected = [f"{c}{i}" for i in range(n) for c in "xyl"]
    if header[2:] != expected:
        raise KeypointCSVError(1, f"expected point columns {','.join(expected)}")
    return n


def parse_keypoint_csv(stream: TextIO, likelihood_threshold: float = 0.6) -> list[KeypointFrame]:
    """Read a tracker export; frames with any point below the threshold are flagged."""
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        return []
    n = _point_count(header)
    frames = []
    last_t = -math.inf
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise KeypointCSVError(line, f"expected {len(header)} fields, got {len(row)}")
        try:
            frame_no = int(row[0])
            t = float(row[1])
            vals = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise KeypointCSVError(line, str(exc)) from None
        if not all(math.isfinite(v) for v in [t, *vals]):
            raise KeypointCSVError(line, "non-finite value")
        if t <= last_t:
            raise KeypointCSVError(line, "timestamps must increase")
        last_t = t
        pts = tuple((vals[3 * i], vals[3 * i + 1], vals[3 * i + 2]) for i in range(n))
        try:
            flagged = any(l < likelihood_threshold for _, _, l in pts)
            frames.append(KeypointFrame(t, pts, frame_no, flagged))
        except ValueError as exc:
            raise KeypointCSVError(line, str(exc)) from None
    return frames


def write_keypoint_csv(frames: Iterable[KeypointFrame], stream: TextIO) -> None:
    frames = list(frames)
    n = len(frames[0].points) if frames else 4
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["frame", "time_s"] + [f"{c}{i}" for i in range(n) for c in "xyl"])
    for f in frames:
        w.writerow([int(f.frame), repr(float(f.timestamp))]
                   + [repr(float(v)) for p in f.points for v in p])


def write_angle_csv(samples: Iterable[AngleSample], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["time_s", "angle_deg"])
    for s in samples:
        w.writerow([repr(float(s.timestamp)), repr(float(s.angle))])


def read_angle_csv(stream: TextIO) -> list[AngleSample]:
    reader = csv.DictReader(stream)
    return [AngleSample(float(r["time_s"]), float(r["angle_deg"])) for r in reader]


def keypoints_to_text(frames: Iterable[KeypointFrame]) -> str:
    buf = io.StringIO()
    write_keypoint_csv(frames, buf)
    return buf.getvalue()
