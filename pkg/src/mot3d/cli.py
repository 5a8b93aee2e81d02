"""Command-line entry point: `track`, `eval` and `bench` subcommands.

`track` turns a directory of per-sequence KITTI detection files (0000.txt,
0001.txt, ...) into KITTI tracking result files plus a manifest.json with
per-sequence frame counts and tracker-only FPS (file I/O excluded). `eval`
scores a results directory against a ground-truth directory and prints the
summary table (sAMOTA, AMOTA, AMOTP, MOTA, MOTP, IDS, FRAG), optionally
writing the per-recall-point CSV. `bench` measures tracker throughput on a
synthetic constant-velocity scenario.

The AB3DMOT_LOG environment variable sets the log level (DEBUG, INFO, ...).
Exit status is nonzero exactly when an error was reported, and partially
written outputs are removed on failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .geometry3d import Box3D
from .kitti_io import (list_sequence_files, read_detections, read_gt_labels,
                       read_tracking_results, write_tracking_results)
from .mot_eval import evaluate_tracking, format_summary_table, write_recall_csv
from .tracker import Detection, Tracker, TrackerConfig, run_sequence

logger = logging.getLogger(__name__)


@dataclass
class RunManifest:
    """What a successful `track` run did and how fast the loop was."""

    tool: str
    version: str
    detections_dir: str
    output_dir: str
    category: str
    config_path: str | None
    frame_counts: dict[str, int] = field(default_factory=dict)
    report_counts: dict[str, int] = field(default_factory=dict)
    tracker_seconds: float = 0.0
    wall_seconds: float = 0.0
    fps: float = 0.0

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")


def _track_one(detections_path: str, output_path: str, category: str,
               config: TrackerConfig) -> tuple[int, int, float]:
    """Track one sequence file; returns (frames, reports, loop_seconds)."""
    detections = read_detections(detections_path, category)
    n_frames = max(detections) + 1 if detections else 0
    start = time.perf_counter()
    reports = run_sequence(config, detections)
    elapsed = time.perf_counter() - start
    write_tracking_results(reports, output_path, category)
    return n_frames, len(reports), elapsed


def cmd_track(args: argparse.Namespace) -> int:
    wall_start = time.perf_counter()
    sequences = list_sequence_files(args.detections)
    if not sequences:
        raise ValueError(f"no sequence files found in {args.detections}")
    config = TrackerConfig.from_file(args.config) if args.config else TrackerConfig()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        tool="mot3d", version=__version__,
        detections_dir=str(args.detections), output_dir=str(out_dir),
        category=args.category, config_path=args.config,
    )

    jobs = {name: (str(path), str(out_dir / f"{name}.txt"))
            for name, path in sequences.items()}
    planned = [Path(dst) for _, dst in jobs.values()]
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futures = {
                    name: pool.submit(_track_one, src, dst, args.category, config)
                    for name, (src, dst) in jobs.items()
                }
                for name in jobs:
                    n_frames, n_reports, seconds = futures[name].result()
                    _record(manifest, name, n_frames, n_reports, seconds)
        else:
            for name, (src, dst) in jobs.items():
                n_frames, n_reports, seconds = _track_one(src, dst, args.category, config)
                _record(manifest, name, n_frames, n_reports, seconds)
    except BaseException:
        # every planned output is fair game: parallel workers may have
        # finished writing after the first failure surfaced
        for path in planned:
            path.unlink(missing_ok=True)
        raise

    total_frames = sum(manifest.frame_counts.values())
    manifest.fps = total_frames / manifest.tracker_seconds if manifest.tracker_seconds else 0.0
    manifest.wall_seconds = time.perf_counter() - wall_start
    manifest.write(out_dir / "manifest.json")
    print(f"tracked {len(sequences)} sequence(s), {total_frames} frames "
          f"at {manifest.fps:.1f} FPS (tracker loop only)")
    return 0


def _record(manifest: RunManifest, name: str, frames: int, reports: int,
            seconds: float) -> None:
    manifest.frame_counts[name] = frames
    manifest.report_counts[name] = reports
    manifest.tracker_seconds += seconds
    logger.info("sequence %s: %d frames, %d reports, %.3fs", name, frames, reports, seconds)


def cmd_eval(args: argparse.Namespace) -> int:
    gt_files = list_sequence_files(args.gt)
    result_files = list_sequence_files(args.results)
    if not gt_files:
        raise ValueError(f"no sequence files found in {args.gt}")
    if set(gt_files) != set(result_files):
        missing = sorted(set(gt_files) ^ set(result_files))
        raise ValueError(f"ground-truth and result sequence sets differ on: {', '.join(missing)}")

    gt_seqs = []
    pred_seqs = []
    for name in sorted(gt_files):
        gt_seqs.append(read_gt_labels(gt_files[name], args.category))
        pred_seqs.append(read_tracking_results(result_files[name], args.category))

    report = evaluate_tracking(gt_seqs, pred_seqs,
                               recall_points=args.recall_points,
                               min_iou=args.iou_gate)
    print(format_summary_table(report))
    if args.csv:
        write_recall_csv(report, args.csv)
        logger.info("wrote per-recall-point CSV to %s", args.csv)
    return 0


def make_bench_scenario(frames: int, objects: int, seed: int) -> dict[int, list[Detection]]:
    """Synthetic constant-velocity scene: exact detections, varying scores."""
    rng = np.random.default_rng(seed)
    starts = []
    for i in range(objects):
        starts.append((
            -20.0 + 8.0 * i + rng.uniform(-1.0, 1.0),   # x lane
            1.6,                                         # y (ground)
            5.0 + rng.uniform(0.0, 10.0),                # z start
            rng.uniform(0.2, 1.2),                       # z velocity per frame
            rng.uniform(-0.3, 0.3),                      # heading
        ))
    by_frame: dict[int, list[Detection]] = {f: [] for f in range(frames)}
    for f in range(frames):
        for x, y, z0, vz, theta in starts:
            box = Box3D(x=x, y=y, z=z0 + vz * f, l=4.0, w=1.8, h=1.5, theta=theta)
            by_frame[f].append(
                Detection(frame=f, box=box, score=float(rng.uniform(1.0, 9.0)))
            )
    return by_frame


def cmd_bench(args: argparse.Namespace) -> int:
    if args.frames < 1 or args.reps < 1 or args.objects < 0:
        raise ValueError("bench needs frames >= 1, reps >= 1, objects >= 0")
    scenario = make_bench_scenario(args.frames, args.objects, args.seed)
    fps_runs = []
    for _ in range(args.reps):
        tracker = Tracker(TrackerConfig())
        start = time.perf_counter()
        for f in range(args.frames):
            tracker.step(f, scenario[f])
        elapsed = time.perf_counter() - start
        fps_runs.append(args.frames / elapsed)
    print(f"frames={args.frames} objects/frame={args.objects} reps={args.reps}")
    print(f"fps mean={statistics.fmean(fps_runs):.1f} median={statistics.median(fps_runs):.1f} "
          f"min={min(fps_runs):.1f} max={max(fps_runs):.1f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mot3d",
        description="Real-time 3D multi-object tracking and 3D MOT evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"mot3d {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run the tracker over per-sequence detection files")
    p_track.add_argument("--detections", required=True, help="directory of NNNN.txt detection files")
    p_track.add_argument("--out", required=True, help="output directory for result files")
    p_track.add_argument("--category", default="Car", help="object category to track (default Car)")
    p_track.add_argument("--config", default=None, help="tracker config file (key = value lines)")
    p_track.add_argument("--jobs", type=int, default=1, help="sequences to process in parallel")
    p_track.set_defaults(func=cmd_track)

    p_eval = sub.add_parser("eval", help="score tracking results against ground-truth labels")
    p_eval.add_argument("--gt", required=True, help="directory of NNNN.txt label files")
    p_eval.add_argument("--results", required=True, help="directory of NNNN.txt result files")
    p_eval.add_argument("--category", default="Car", help="object category to evaluate (default Car)")
    p_eval.add_argument("--iou-gate", type=float, default=0.25,
                        help="minimum 3D IoU for a gt match (default 0.25)")
    p_eval.add_argument("--recall-points", type=int, default=40,
                        help="number of recall points in the sweep (default 40)")
    p_eval.add_argument("--csv", default=None, help="write the per-recall-point CSV here")
    p_eval.add_argument("--jobs", type=int, default=1, help=argparse.SUPPRESS)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="measure tracker throughput on a synthetic scene")
    p_bench.add_argument("--frames", type=int, default=1000)
    p_bench.add_argument("--objects", type=int, default=5, help="objects per frame")
    p_bench.add_argument("--reps", type=int, default=5)
    p_bench.add_argument("--seed", type=int, default=0, help="scenario generation seed")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("AB3DMOT_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
