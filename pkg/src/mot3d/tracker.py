"""Online per-frame 3D tracking loop.

Each frame: predict every live track, associate detections to predicted
tracks with the Hungarian solver over negated 3D IoU, update the matched
tracks, start new tracks from unmatched detections, retire tracks that have
coasted past max_age, and report the tracks updated this frame once their
hit streak clears min_hits (waived during the first min_hits frames so the
start of a sequence is not unrecallable by construction). Coasted tracks are
never reported.

A single pass of optimal assignment with IoU gating is used; there is no
second greedy re-association pass. One tracker instance is single-threaded;
distinct sequences are independent.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from . import filtering
from .assignment import solve_min_cost
from .filtering import KalmanTrack, NoiseParams
from .geometry3d import Box3D, iou3d


@dataclass(frozen=True)
class Detection:
    """One detector output box for one frame."""

    frame: int
    box: Box3D
    score: float
    category: str = "Car"

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise ValueError(f"frame index must be >= 0, got {self.frame}")
        if not math.isfinite(self.score):
            raise ValueError(f"detection score must be finite, got {self.score}")


@dataclass(frozen=True)
class TrackReport:
    """One confirmed track state emitted for one frame."""

    frame: int
    track_id: int
    box: Box3D
    score: float


_CONFIG_KEYS = {
    "iou_gate": float,
    "max_age": int,
    "min_hits": int,
    "p0_scale": float,
    "q_scale": float,
    "r_scale": float,
}


@dataclass(frozen=True)
class TrackerConfig:
    """Lifecycle and association constants; all keys optional in the file."""

    iou_gate: float = 0.1
    max_age: int = 2
    min_hits: int = 3
    p0_scale: float = 1.0
    q_scale: float = 1.0
    r_scale: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.iou_gate <= 1.0:
            raise ValueError(f"iou_gate must be in [0, 1], got {self.iou_gate}")
        if self.max_age < 0:
            raise ValueError(f"max_age must be >= 0, got {self.max_age}")
        if self.min_hits < 1:
            raise ValueError(f"min_hits must be >= 1, got {self.min_hits}")

    def noise(self) -> NoiseParams:
        return NoiseParams(self.p0_scale, self.q_scale, self.r_scale)

    @classmethod
    def from_file(cls, path: str | Path) -> "TrackerConfig":
        """Parse a flat `key = value` config file; `#` starts a comment."""
        values = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = re.fullmatch(r"(\w+)\s*[=:]\s*(\S+)", line)
            if m is None:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, text = m.group(1), m.group(2)
            if key not in _CONFIG_KEYS:
                raise ValueError(
                    f"{path}:{lineno}: unknown key {key!r} "
                    f"(known: {', '.join(sorted(_CONFIG_KEYS))})"
                )
            try:
                values[key] = _CONFIG_KEYS[key](text)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {text!r}") from exc
        return cls(**values)


class Tracker:
    """Stateful online tracker for one sequence and one category."""

    def __init__(self, config: TrackerConfig | None = None) -> None:
        self.config = config or TrackerConfig()
        self.tracks: list[KalmanTrack] = []
        self._next_id = 1
        self._steps = 0
        self._last_frame: int | None = None

    def step(self, frame: int, detections: Iterable[Detection]) -> list[TrackReport]:
        """Process one frame of detections and return this frame's reports.

        Frames must be fed in strictly increasing order; an empty detection
        list is a valid frame (all tracks coast).
        """
        dets = list(detections)
        if self._last_frame is not None and frame <= self._last_frame:
            raise ValueError(
                f"frames must be strictly increasing, got {frame} after {self._last_frame}"
            )
        for d in dets:
            if d.frame != frame:
                raise ValueError(f"detection for frame {d.frame} fed into frame {frame}")
        self._last_frame = frame
        frame_index = self._steps
        self._steps += 1

        for track in self.tracks:
            filtering.predict(track)

        matches, unmatched_dets, unmatched_tracks = self._associate(dets)

        for ti, di in matches:
            d = dets[di]
            filtering.update(self.tracks[ti], d.box, d.score)

        for di in unmatched_dets:
            d = dets[di]
            self.tracks.append(
                filtering.init_track(d.box, d.score, self._next_id, self.config.noise())
            )
            self._next_id += 1

        for ti in unmatched_tracks:
            self.tracks[ti].hit_streak = 0

        self.tracks = [t for t in self.tracks if t.time_since_update <= self.config.max_age]

        reports = []
        for track in self.tracks:
            if track.time_since_update != 0:
                continue
            if track.hit_streak >= self.config.min_hits or frame_index < self.config.min_hits:
                reports.append(
                    TrackReport(frame=frame, track_id=track.id, box=track.box(),
                                score=track.score)
                )
        return reports

    def _associate(self, dets: list[Detection]) -> tuple[list[tuple[int, int]], list[int], list[int]]:
        n_tracks = len(self.tracks)
        n_dets = len(dets)
        if n_tracks == 0 or n_dets == 0:
            return [], list(range(n_dets)), list(range(n_tracks))

        iou = [[iou3d(track.box(), d.box) for d in dets] for track in self.tracks]
        cost = [[-v for v in row] for row in iou]
        matches = []
        matched_t: set[int] = set()
        matched_d: set[int] = set()
        for ti, di in solve_min_cost(cost):
            if iou[ti][di] >= self.config.iou_gate:
                matches.append((ti, di))
                matched_t.add(ti)
                matched_d.add(di)
        unmatched_dets = [i for i in range(n_dets) if i not in matched_d]
        unmatched_tracks = [i for i in range(n_tracks) if i not in matched_t]
        return matches, unmatched_dets, unmatched_tracks


def run_sequence(config: TrackerConfig | None,
                 detections_by_frame: Mapping[int, list[Detection]]) -> list[TrackReport]:
    """Track one whole sequence, visiting every frame from 0 to the last.

    Empty frames between detections are stepped through so tracks age and
    die on schedule. Tracker state does not survive the call: there is no
    cross-sequence identity.
    """
    tracker = Tracker(config)
    reports: list[TrackReport] = []
    if not detections_by_frame:
        return reports
    last = max(detections_by_frame)
    for frame in range(0, last + 1):
        reports.extend(tracker.step(frame, detections_by_frame.get(frame, [])))
    return reports
