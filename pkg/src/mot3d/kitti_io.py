"""Readers and writers for KITTI detection, tracking-label and result files.

Column contracts are locked in FORMATS.md at the repository root. All rows
are whitespace separated; sizes come in KITTI h, w, l order and are stored
as Box3D(l, w, h). Every line either yields an object or raises a
FormatError carrying the file path and line number; nothing is silently
dropped. Floats are written with Python's shortest round-trip repr so that
read(write(x)) reproduces frame, id, box and score exactly.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .geometry3d import Box3D
from .tracker import Detection, TrackReport

DETECTION_FIELDS = 17
LABEL_FIELDS = 17
RESULT_FIELDS = 18

# Sentinels for fields the tracker does not estimate.
PLACEHOLDER_ALPHA = -10
PLACEHOLDER_BBOX = (-1, -1, -1, -1)
PLACEHOLDER_TRUNCATED = -1
PLACEHOLDER_OCCLUDED = -1

DONTCARE = "dontcare"


class FormatError(ValueError):
    """A malformed row, located by file and 1-based line number."""

    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


@dataclass(frozen=True)
class GtObject:
    """One ground-truth row; DontCare rows are kept but flagged unmatchable."""

    frame: int
    track_id: int
    category: str
    truncated: int
    occluded: int
    alpha: float
    bbox2d: tuple[float, float, float, float]
    box: Box3D | None
    dontcare: bool = False


def _split_row(path, lineno: int, line: str, expected: int) -> list[str]:
    fields = line.split()
    if len(fields) != expected:
        raise FormatError(path, lineno, f"expected {expected} fields, got {len(fields)}")
    return fields


def _parse_float(path, lineno: int, name: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(path, lineno, f"non-numeric {name}: {text!r}") from None


def _parse_int(path, lineno: int, name: str, text: str) -> int:
    try:
        return int(float(text))
    except ValueError:
        raise FormatError(path, lineno, f"non-numeric {name}: {text!r}") from None


def _parse_box(path, lineno: int, fields: list[str], start: int) -> Box3D:
    h = _parse_float(path, lineno, "h", fields[start])
    w = _parse_float(path, lineno, "w", fields[start + 1])
    l = _parse_float(path, lineno, "l", fields[start + 2])
    x = _parse_float(path, lineno, "x", fields[start + 3])
    y = _parse_float(path, lineno, "y", fields[start + 4])
    z = _parse_float(path, lineno, "z", fields[start + 5])
    ry = _parse_float(path, lineno, "rotation_y", fields[start + 6])
    try:
        return Box3D(x=x, y=y, z=z, l=l, w=w, h=h, theta=ry)
    except ValueError as exc:
        raise FormatError(path, lineno, str(exc)) from None


def read_detections(path: str | Path, category: str = "Car") -> dict[int, list[Detection]]:
    """Read a KITTI detection file, keeping rows of one category.

    Returns detections grouped by frame, preserving within-frame row order.
    The category filter is case-insensitive.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"detection file not found: {path}")
    wanted = category.lower()
    grouped: dict[int, list[Detection]] = defaultdict(list)
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = _split_row(path, lineno, line, DETECTION_FIELDS)
            if fields[1].lower() != wanted:
                continue
            frame = _parse_int(path, lineno, "frame", fields[0])
            if frame < 0:
                raise FormatError(path, lineno, f"negative frame index: {frame}")
            box = _parse_box(path, lineno, fields, 9)
            score = _parse_float(path, lineno, "score", fields[16])
            grouped[frame].append(
                Detection(frame=frame, box=box, score=score, category=fields[1])
            )
    return dict(grouped)


def read_gt_labels(path: str | Path, category: str = "Car") -> dict[int, list[GtObject]]:
    """Read a KITTI tracking label file, grouped by frame.

    Rows of other categories are dropped by the case-insensitive filter;
    DontCare rows are always kept, flagged, with box=None.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"label file not found: {path}")
    wanted = category.lower()
    grouped: dict[int, list[GtObject]] = defaultdict(list)
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = _split_row(path, lineno, line, LABEL_FIELDS)
            cat = fields[2]
            dontcare = cat.lower() == DONTCARE
            if not dontcare and cat.lower() != wanted:
                continue
            frame = _parse_int(path, lineno, "frame", fields[0])
            track_id = _parse_int(path, lineno, "id", fields[1])
            if frame < 0:
                raise FormatError(path, lineno, f"negative frame index: {frame}")
            if not dontcare and track_id < 0:
                raise FormatError(path, lineno, f"negative track id: {track_id}")
            truncated = _parse_int(path, lineno, "truncated", fields[3])
            occluded = _parse_int(path, lineno, "occluded", fields[4])
            alpha = _parse_float(path, lineno, "alpha", fields[5])
            bbox2d = tuple(_parse_float(path, lineno, "bbox", f) for f in fields[6:10])
            box = None if dontcare else _parse_box(path, lineno, fields, 10)
            grouped[frame].append(
                GtObject(frame=frame, track_id=track_id, category=cat,
                         truncated=truncated, occluded=occluded, alpha=alpha,
                         bbox2d=bbox2d, box=box, dontcare=dontcare)
            )
    return dict(grouped)


def read_tracking_results(path: str | Path, category: str = "Car") -> dict[int, list[TrackReport]]:
    """Read a KITTI tracking result file back into reports grouped by frame."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"result file not found: {path}")
    wanted = category.lower()
    grouped: dict[int, list[TrackReport]] = defaultdict(list)
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = _split_row(path, lineno, line, RESULT_FIELDS)
            if fields[2].lower() != wanted:
                continue
            frame = _parse_int(path, lineno, "frame", fields[0])
            track_id = _parse_int(path, lineno, "id", fields[1])
            if frame < 0:
                raise FormatError(path, lineno, f"negative frame index: {frame}")
            box = _parse_box(path, lineno, fields, 10)
            score = _parse_float(path, lineno, "score", fields[17])
            grouped[frame].append(
                TrackReport(frame=frame, track_id=track_id, box=box, score=score)
            )
    return dict(grouped)


def write_tracking_results(reports: list[TrackReport], path: str | Path,
                           category: str = "Car") -> None:
    """Write reports as KITTI tracking result rows, sorted by (frame, id).

    An empty report list still produces a (zero-length) file.
    """
    path = Path(path)
    rows = []
    for r in sorted(reports, key=lambda r: (r.frame, r.track_id)):
        b = r.box
        rows.append(" ".join((
            str(r.frame), str(r.track_id), category,
            str(PLACEHOLDER_TRUNCATED), str(PLACEHOLDER_OCCLUDED),
            str(PLACEHOLDER_ALPHA),
            *(str(v) for v in PLACEHOLDER_BBOX),
            repr(b.h), repr(b.w), repr(b.l),
            repr(b.x), repr(b.y), repr(b.z), repr(b.theta),
            repr(float(r.score)),
        )))
    path.write_text("".join(row + "\n" for row in rows))


SEQUENCE_PATTERN = "[0-9][0-9][0-9][0-9].txt"


def list_sequence_files(directory: str | Path) -> dict[str, Path]:
    """Sequence files under a directory, keyed by the NNNN sequence name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    return {p.stem: p for p in sorted(directory.glob(SEQUENCE_PATTERN))}
