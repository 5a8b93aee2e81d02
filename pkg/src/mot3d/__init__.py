"""mot3d: real-time 3D multi-object tracking and 3D MOT evaluation.

The tracker couples a constant-velocity 3D Kalman filter with optimal
(Hungarian) assignment over exact 3D IoU; the evaluator matches tracks to
ground truth directly in 3D and reports both the classic CLEAR metrics and
the recall-integrated sAMOTA/AMOTA/AMOTP.
"""

__version__ = "0.1.0"

from .assignment import solve_min_cost
from .filtering import KalmanTrack, NoiseParams, init_track, predict, update
from .geometry3d import Box3D, Polygon2D, bev_corners, convex_intersection_area, iou3d
from .kitti_io import (FormatError, GtObject, read_detections, read_gt_labels,
                       read_tracking_results, write_tracking_results)
from .mot_eval import (ClearCounts, EvalReport, IntegralMetrics, RecallPoint,
                       accumulate_clear, evaluate_tracking, match_frame,
                       metrics_from_counts, sweep_thresholds)
from .tracker import Detection, Tracker, TrackerConfig, TrackReport, run_sequence

__all__ = [
    "__version__",
    "Box3D", "Polygon2D", "bev_corners", "convex_intersection_area", "iou3d",
    "solve_min_cost",
    "KalmanTrack", "NoiseParams", "init_track", "predict", "update",
    "Detection", "Tracker", "TrackerConfig", "TrackReport", "run_sequence",
    "FormatError", "GtObject", "read_detections", "read_gt_labels",
    "read_tracking_results", "write_tracking_results",
    "ClearCounts", "EvalReport", "IntegralMetrics", "RecallPoint",
    "accumulate_clear", "evaluate_tracking", "match_frame",
    "metrics_from_counts", "sweep_thresholds",
]
