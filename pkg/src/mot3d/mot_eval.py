"""3D MOT evaluation: CLEAR metrics over 3D IoU matching, plus integral metrics.

Per frame, predictions are matched to ground truth directly in 3D: the
previous frame's still-valid correspondences are kept first (both parties
present this frame with 3D IoU at or above the minimum), then the remaining
candidates are matched optimally on negated 3D IoU, and pairs below the
minimum IoU (0.25 by default) are discarded. From the accumulated counts the
usual single-threshold metrics follow:

    MOTA = 1 - (FP + FN + IDS) / num_gt        (can be negative)
    MOTP = mean 3D IoU over matched pairs      (higher is better)

The integral metrics sweep the prediction confidence threshold: every
distinct prediction score is a candidate, and for each target recall
r in {1/L, ..., 1} (L = 40 by default) the candidate whose achieved recall is
the smallest value >= r is selected (ties to the larger threshold). Each
selected point contributes

    MOTA_r  = max(0, MOTA at that threshold)
    sMOTA_r = clamp(1 - (FP + FN + IDS - (1 - r) * num_gt) / (r * num_gt), 0, 1)
    MOTP_r  = MOTP at that threshold

and unreachable targets contribute zeros. AMOTA, sAMOTA and AMOTP are the
means of these L values. The sMOTA rescaling removes the FN mass that is
unavoidable at recall r (FN >= (1 - r) * num_gt), so the attainable range
spans the full 0..1 regardless of the recall point.

Counts from multiple sequences are summed before any ratio is formed, and
the threshold sweep is global across sequences. Identity bookkeeping: IDS is
counted when a ground-truth id is matched to a different prediction id than
the last one it was ever matched to; FRAG each time a ground-truth id goes
matched -> unmatched -> matched (frames where the object is absent from the
ground truth do not break or extend a gap). DontCare rows and
truncation/occlusion flags are ignored: every ground-truth row of the target
category counts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .assignment import solve_min_cost
from .geometry3d import iou3d
from .kitti_io import GtObject
from .tracker import TrackReport

DEFAULT_MIN_IOU = 0.25
DEFAULT_RECALL_POINTS = 40

GtFrames = Mapping[int, Sequence[GtObject]]
PredFrames = Mapping[int, Sequence[TrackReport]]


@dataclass
class ClearCounts:
    """Accumulated CLEAR tallies; add instances to micro-average sequences."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    ids: int = 0
    frag: int = 0
    iou_sum: float = 0.0
    num_gt: int = 0

    def __add__(self, other: "ClearCounts") -> "ClearCounts":
        return ClearCounts(
            tp=self.tp + other.tp, fp=self.fp + other.fp, fn=self.fn + other.fn,
            ids=self.ids + other.ids, frag=self.frag + other.frag,
            iou_sum=self.iou_sum + other.iou_sum, num_gt=self.num_gt + other.num_gt,
        )

    @property
    def recall(self) -> float:
        return self.tp / self.num_gt if self.num_gt else 0.0


@dataclass(frozen=True)
class RecallPoint:
    """One point of the recall sweep; unreachable targets have achieved=False."""

    target_recall: float
    achieved: bool
    achieved_recall: float
    threshold: float
    mota: float
    mota_unfloored: float
    smota: float
    motp: float


@dataclass(frozen=True)
class IntegralMetrics:
    samota: float
    amota: float
    amotp: float
    curve: tuple[RecallPoint, ...]


@dataclass(frozen=True)
class EvalReport:
    """Integral metrics plus single-threshold CLEAR numbers.

    The single-threshold columns are computed at the sweep threshold that
    maximizes (unfloored) MOTA, ties to the higher threshold; with no
    achieved recall point the full prediction set is used.
    """

    integral: IntegralMetrics
    counts: ClearCounts
    mota: float
    motp: float
    threshold: float


def _check_unique_ids(objs, what: str) -> None:
    seen = set()
    for o in objs:
        if o.track_id in seen:
            raise ValueError(f"duplicate {what} id {o.track_id} in frame {o.frame}")
        seen.add(o.track_id)


def match_frame(gt: Sequence[GtObject], preds: Sequence[TrackReport],
                prev_correspondence: Mapping[int, int] | None = None,
                min_iou: float = DEFAULT_MIN_IOU,
                iou_matrix: Sequence[Sequence[float]] | None = None):
    """Match one frame's predictions to its ground truth, CLEAR style.

    Step 1 keeps last frame's gt-id -> pred-id pairs whose 3D IoU still
    clears min_iou this frame; step 2 matches the rest by optimal assignment
    on negated IoU, discarding below-gate pairs afterwards.

    Returns (matches, unmatched_gt, unmatched_pred, new_correspondence) where
    matches are (gt_index, pred_index, iou) sorted by gt index and the
    correspondence maps gt id to pred id for this frame's matches only.
    """
    gt = [g for g in gt if not g.dontcare]
    _check_unique_ids(gt, "ground-truth")
    _check_unique_ids(preds, "prediction")
    prev = prev_correspondence or {}

    if iou_matrix is None:
        iou_matrix = [[iou3d(g.box, p.box) for p in preds] for g in gt]

    matches: list[tuple[int, int, float]] = []
    used_g: set[int] = set()
    used_p: set[int] = set()

    pred_index = {p.track_id: j for j, p in enumerate(preds)}
    for gi, g in enumerate(gt):
        pid = prev.get(g.track_id)
        if pid is None:
            continue
        pj = pred_index.get(pid)
        if pj is None or pj in used_p:
            continue
        if iou_matrix[gi][pj] >= min_iou:
            matches.append((gi, pj, iou_matrix[gi][pj]))
            used_g.add(gi)
            used_p.add(pj)

    rest_g = [i for i in range(len(gt)) if i not in used_g]
    rest_p = [j for j in range(len(preds)) if j not in used_p]
    if rest_g and rest_p:
        cost = [[-iou_matrix[i][j] for j in rest_p] for i in rest_g]
        for a, b in solve_min_cost(cost):
            i, j = rest_g[a], rest_p[b]
            if iou_matrix[i][j] >= min_iou:
                matches.append((i, j, iou_matrix[i][j]))
                used_g.add(i)
                used_p.add(j)

    matches.sort()
    unmatched_gt = [i for i in range(len(gt)) if i not in used_g]
    unmatched_pred = [j for j in range(len(preds)) if j not in used_p]
    correspondence = {gt[i].track_id: preds[j].track_id for i, j, _ in matches}
    return matches, unmatched_gt, unmatched_pred, correspondence


class _TrajectoryState:
    """Per-sequence IDS/FRAG bookkeeping."""

    def __init__(self) -> None:
        self.last_pred: dict[int, int] = {}
        self.in_gap: dict[int, bool] = {}

    def on_match(self, gt_id: int, pred_id: int) -> tuple[int, int]:
        ids = 0
        frag = 0
        last = self.last_pred.get(gt_id)
        if last is not None and last != pred_id:
            ids = 1
        self.last_pred[gt_id] = pred_id
        if self.in_gap.get(gt_id, False):
            frag = 1
        self.in_gap[gt_id] = False
        return ids, frag

    def on_miss(self, gt_id: int) -> None:
        if gt_id in self.last_pred:
            self.in_gap[gt_id] = True


def _accumulate(gt_by_frame: GtFrames, preds_by_frame: PredFrames,
                min_iou: float,
                iou_for_frame: Callable | None = None) -> ClearCounts:
    counts = ClearCounts()
    corr: dict[int, int] = {}
    state = _TrajectoryState()
    keys = set(gt_by_frame) | set(preds_by_frame)
    last_frame = max(keys) if keys else -1
    for f in range(0, last_frame + 1):
        gt = [g for g in gt_by_frame.get(f, []) if not g.dontcare]
        preds = list(preds_by_frame.get(f, []))
        iou_matrix = iou_for_frame(f, gt, preds) if iou_for_frame is not None else None
        matches, unmatched_gt, unmatched_pred, corr = match_frame(
            gt, preds, corr, min_iou, iou_matrix
        )
        counts.num_gt += len(gt)
        counts.tp += len(matches)
        counts.fn += len(unmatched_gt)
        counts.fp += len(unmatched_pred)
        for gi, pj, iou in matches:
            counts.iou_sum += iou
            ids, frag = state.on_match(gt[gi].track_id, preds[pj].track_id)
            counts.ids += ids
            counts.frag += frag
        for gi in unmatched_gt:
            state.on_miss(gt[gi].track_id)
    return counts


def accumulate_clear(gt_by_frame: GtFrames, preds_by_frame: PredFrames,
                     min_iou: float = DEFAULT_MIN_IOU) -> ClearCounts:
    """Run the CLEAR protocol over one sequence and return the tallies.

    Every frame from 0 to the last populated one is visited, so the
    correspondence carryover resets across fully empty frames exactly as a
    frame-by-frame run would.
    """
    return _accumulate(gt_by_frame, preds_by_frame, min_iou)


def metrics_from_counts(counts: ClearCounts) -> tuple[float, float]:
    """(MOTA, MOTP) from accumulated counts; empty ground truth is misuse."""
    if counts.num_gt <= 0:
        raise ValueError("cannot compute MOTA with no ground-truth objects")
    mota = 1.0 - (counts.fp + counts.fn + counts.ids) / counts.num_gt
    motp = counts.iou_sum / counts.tp if counts.tp > 0 else 0.0
    return mota, motp


def smota_value(counts: ClearCounts, target_recall: float) -> float:
    """Recall-rescaled MOTA, clamped into [0, 1]."""
    errors = counts.fp + counts.fn + counts.ids
    raw = 1.0 - (errors - (1.0 - target_recall) * counts.num_gt) / (
        target_recall * counts.num_gt)
    return min(1.0, max(0.0, raw))


class _SweepCache:
    """Threshold-independent per-frame IoU matrices plus memoized counts."""

    def __init__(self, gt_seqs: Sequence[GtFrames], pred_seqs: Sequence[PredFrames],
                 min_iou: float):
        if len(gt_seqs) != len(pred_seqs):
            raise ValueError(
                f"{len(gt_seqs)} ground-truth sequences vs {len(pred_seqs)} prediction sequences"
            )
        self.min_iou = min_iou
        self.gt_seqs = [
            {f: [g for g in objs if not g.dontcare] for f, objs in seq.items()}
            for seq in gt_seqs
        ]
        self.pred_seqs = [dict(seq) for seq in pred_seqs]
        self.num_gt = sum(len(v) for seq in self.gt_seqs for v in seq.values())
        self._iou: list[dict[int, list[list[float]]]] = []
        for gt_seq, pred_seq in zip(self.gt_seqs, self.pred_seqs):
            per_frame = {}
            for f in set(gt_seq) | set(pred_seq):
                gt = gt_seq.get(f, [])
                preds = pred_seq.get(f, [])
                per_frame[f] = [[iou3d(g.box, p.box) for p in preds] for g in gt]
            self._iou.append(per_frame)
        self._memo: dict[float, ClearCounts] = {}

    def counts_at(self, threshold: float) -> ClearCounts:
        got = self._memo.get(threshold)
        if got is not None:
            return got
        total = ClearCounts()
        for si, (gt_seq, pred_seq) in enumerate(zip(self.gt_seqs, self.pred_seqs)):
            kept: dict[int, list[TrackReport]] = {}
            kept_cols: dict[int, list[int]] = {}
            for f, preds in pred_seq.items():
                cols = [j for j, p in enumerate(preds) if p.score >= threshold]
                kept[f] = [preds[j] for j in cols]
                kept_cols[f] = cols
            cache = self._iou[si]

            def iou_for_frame(f, gt, preds, _cache=cache, _cols=kept_cols):
                full = _cache.get(f)
                if full is None:
                    return [[] for _ in gt]
                cols = _cols.get(f, [])
                return [[row[j] for j in cols] for row in full]

            total = total + _accumulate(gt_seq, kept, self.min_iou, iou_for_frame)
        self._memo[threshold] = total
        return total


def _select_point(cache: _SweepCache, thresholds: list[float],
                  target: float) -> tuple[float, ClearCounts] | None:
    """Largest threshold with achieved recall >= target, assuming recall is
    non-increasing in the threshold. Returns None if no candidate reaches it."""
    if not thresholds or cache.counts_at(thresholds[0]).recall < target:
        return None
    lo, hi = 0, len(thresholds) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if cache.counts_at(thresholds[mid]).recall >= target:
            lo = mid
        else:
            hi = mid - 1
    return thresholds[lo], cache.counts_at(thresholds[lo])


def _select_point_exhaustive(cache: _SweepCache, thresholds: list[float],
                             target: float) -> tuple[float, ClearCounts] | None:
    best: tuple[float, ClearCounts] | None = None
    best_recall = None
    for t in thresholds:
        c = cache.counts_at(t)
        r = c.recall
        if r < target:
            continue
        # smallest achieved recall, then largest threshold
        if best_recall is None or r < best_recall or (r == best_recall and t > best[0]):
            best = (t, c)
            best_recall = r
    return best


def _memo_is_monotone(cache: _SweepCache, thresholds: list[float]) -> bool:
    evaluated = [(t, cache._memo[t].recall) for t in thresholds if t in cache._memo]
    return all(evaluated[i][1] >= evaluated[i + 1][1] for i in range(len(evaluated) - 1))


def _sweep(cache: _SweepCache, recall_points: int) -> IntegralMetrics:
    if recall_points < 1:
        raise ValueError(f"recall_points must be >= 1, got {recall_points}")
    if cache.num_gt == 0:
        raise ValueError("cannot evaluate with no ground-truth objects")

    thresholds = sorted({p.score for seq in cache.pred_seqs
                         for preds in seq.values() for p in preds})
    targets = [(k + 1) / recall_points for k in range(recall_points)]

    selected = [_select_point(cache, thresholds, r) for r in targets]
    if not _memo_is_monotone(cache, thresholds):
        for t in thresholds:
            cache.counts_at(t)
        selected = [_select_point_exhaustive(cache, thresholds, r) for r in targets]

    curve = []
    for target, pick in zip(targets, selected):
        if pick is None:
            curve.append(RecallPoint(
                target_recall=target, achieved=False, achieved_recall=0.0,
                threshold=math.nan, mota=0.0, mota_unfloored=0.0,
                smota=0.0, motp=0.0,
            ))
            continue
        threshold, counts = pick
        mota, motp = metrics_from_counts(counts)
        curve.append(RecallPoint(
            target_recall=target, achieved=True, achieved_recall=counts.recall,
            threshold=threshold, mota=max(0.0, mota), mota_unfloored=mota,
            smota=smota_value(counts, target), motp=motp,
        ))

    amota = sum(pt.mota for pt in curve) / recall_points
    samota = sum(pt.smota for pt in curve) / recall_points
    amotp = sum(pt.motp for pt in curve) / recall_points
    return IntegralMetrics(samota=samota, amota=amota, amotp=amotp, curve=tuple(curve))


def sweep_thresholds(gt_seqs: Sequence[GtFrames] | GtFrames,
                     pred_seqs: Sequence[PredFrames] | PredFrames,
                     recall_points: int = DEFAULT_RECALL_POINTS,
                     min_iou: float = DEFAULT_MIN_IOU) -> IntegralMetrics:
    """Integral metrics over the confidence-threshold sweep.

    Accepts a single sequence (frame map) or an aligned list of sequences;
    multi-sequence counts are summed before any ratio and the sweep is global.
    Candidate thresholds are the distinct prediction scores; they are probed
    lazily by binary search on achieved recall, which is re-checked for
    monotonicity afterwards with an exhaustive fallback, so the result always
    equals full enumeration.
    """
    gt_list, pred_list = _as_sequences(gt_seqs, pred_seqs)
    return _sweep(_SweepCache(gt_list, pred_list, min_iou), recall_points)


def _as_sequences(gt_seqs, pred_seqs):
    def listify(obj):
        if isinstance(obj, Mapping):
            return [obj]
        return list(obj)

    return listify(gt_seqs), listify(pred_seqs)


def evaluate_tracking(gt_seqs: Sequence[GtFrames] | GtFrames,
                      pred_seqs: Sequence[PredFrames] | PredFrames,
                      recall_points: int = DEFAULT_RECALL_POINTS,
                      min_iou: float = DEFAULT_MIN_IOU) -> EvalReport:
    """Full evaluation: the recall sweep plus the best-MOTA operating point."""
    gt_list, pred_list = _as_sequences(gt_seqs, pred_seqs)
    cache = _SweepCache(gt_list, pred_list, min_iou)
    integral = _sweep(cache, recall_points)

    best_threshold = -math.inf
    best_mota = None
    for pt in integral.curve:
        if not pt.achieved:
            continue
        if (best_mota is None or pt.mota_unfloored > best_mota
                or (pt.mota_unfloored == best_mota and pt.threshold > best_threshold)):
            best_mota = pt.mota_unfloored
            best_threshold = pt.threshold
    counts = cache.counts_at(best_threshold)
    if counts.num_gt == 0:
        raise ValueError("cannot evaluate with no ground-truth objects")
    mota, motp = metrics_from_counts(counts)
    return EvalReport(integral=integral, counts=counts, mota=mota, motp=motp,
                      threshold=best_threshold)


def format_summary_table(report: EvalReport) -> str:
    """Human-readable metrics table, percentages like the usual leaderboards."""
    m = report.integral
    c = report.counts
    header = f"{'sAMOTA':>8} {'AMOTA':>8} {'AMOTP':>8} {'MOTA':>8} {'MOTP':>8} {'IDS':>6} {'FRAG':>6}"
    row = (f"{m.samota * 100:8.2f} {m.amota * 100:8.2f} {m.amotp * 100:8.2f} "
           f"{report.mota * 100:8.2f} {report.motp * 100:8.2f} {c.ids:6d} {c.frag:6d}")
    lines = [
        header,
        row,
        f"(operating point: threshold {report.threshold:g}, "
        f"recall {c.recall * 100:.2f}, TP {c.tp}, FP {c.fp}, FN {c.fn}, gt {c.num_gt})",
    ]
    return "\n".join(lines)


def write_recall_csv(report: EvalReport, path: str | Path) -> None:
    """Per-recall-point CSV plus a summary row of the integral averages."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["recall_target", "threshold", "recall_achieved",
                         "mota", "smota", "motp", "mota_unfloored"])
        for pt in report.integral.curve:
            writer.writerow([
                f"{pt.target_recall:.6g}",
                "" if not pt.achieved else f"{pt.threshold:.17g}",
                f"{pt.achieved_recall:.6g}",
                f"{pt.mota:.6g}", f"{pt.smota:.6g}", f"{pt.motp:.6g}",
                f"{pt.mota_unfloored:.6g}",
            ])
        m = report.integral
        writer.writerow(["summary", f"{report.threshold:.17g}", "",
                         f"{m.amota:.6g}", f"{m.samota:.6g}", f"{m.amotp:.6g}", ""])
