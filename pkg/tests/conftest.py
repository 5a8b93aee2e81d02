"""Shared builders for synthetic boxes, tracks and evaluation datasets."""

from __future__ import annotations

import math

import numpy as np
import pytest

from mot3d.geometry3d import Box3D
from mot3d.kitti_io import GtObject
from mot3d.tracker import Detection, TrackReport

CAR = dict(l=4.0, w=1.8, h=1.5)


def random_box(rng: np.random.Generator, center=(0.0, 0.5, 0.0), spread=5.0) -> Box3D:
    """KITTI-plausible random box: sizes 0.5-6 m, offsets up to ~spread m."""
    return Box3D(
        x=center[0] + rng.uniform(-spread, spread),
        y=center[1] + rng.uniform(-1.0, 2.0),
        z=center[2] + rng.uniform(-spread, spread),
        l=rng.uniform(0.5, 6.0),
        w=rng.uniform(0.5, 6.0),
        h=rng.uniform(0.5, 6.0),
        theta=rng.uniform(-math.pi, math.pi),
    )


def car_box(x: float, z: float, theta: float = 0.0, y: float = 1.6) -> Box3D:
    return Box3D(x=x, y=y, z=z, theta=theta, **CAR)


def gt_obj(frame: int, track_id: int, box: Box3D, category: str = "Car") -> GtObject:
    return GtObject(frame=frame, track_id=track_id, category=category,
                    truncated=0, occluded=0, alpha=0.0,
                    bbox2d=(-1.0, -1.0, -1.0, -1.0), box=box)


def report(frame: int, track_id: int, box: Box3D, score: float) -> TrackReport:
    return TrackReport(frame=frame, track_id=track_id, box=box, score=score)


def detection(frame: int, box: Box3D, score: float) -> Detection:
    return Detection(frame=frame, box=box, score=score)


def make_scored_dataset(rng: np.random.Generator, frames: int = 20, objects: int = 3):
    """Synthetic scored tracking output with drops, an id swap, and clutter.

    Returns (gt_by_frame, preds_by_frame) suitable for the evaluator; scores
    vary so the threshold sweep has many candidates, and some recall targets
    stay unreachable.
    """
    gt: dict[int, list[GtObject]] = {f: [] for f in range(frames)}
    preds: dict[int, list[TrackReport]] = {f: [] for f in range(frames)}
    paths = []
    for i in range(objects):
        x0 = -12.0 + 11.0 * i + rng.uniform(-1, 1)
        z0 = 6.0 + 4.0 * i
        vx = rng.uniform(-0.6, 0.6)
        vz = rng.uniform(0.2, 0.9)
        theta = rng.uniform(-0.4, 0.4)
        paths.append((x0, z0, vx, vz, theta))

    swap_frame = frames // 2
    for f in range(frames):
        for i, (x0, z0, vx, vz, theta) in enumerate(paths):
            box = car_box(x0 + vx * f, z0 + vz * f, theta)
            gt[f].append(gt_obj(f, i, box))
            if rng.uniform() < 0.12:  # dropped detection -> FN + frag material
                continue
            jitter = car_box(x0 + vx * f + rng.uniform(-0.3, 0.3),
                             z0 + vz * f + rng.uniform(-0.3, 0.3),
                             theta + rng.uniform(-0.05, 0.05))
            pred_id = i
            if i < 2 and f >= swap_frame:  # one id swap mid-sequence
                pred_id = 1 - i
            preds[f].append(report(f, 100 + pred_id, jitter, float(rng.uniform(1.0, 9.0))))
        if rng.uniform() < 0.25:  # clutter FP far away
            preds[f].append(report(f, 900 + f, car_box(80.0 + f, 80.0), float(rng.uniform(0.5, 4.0))))
    return gt, preds


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240901)
