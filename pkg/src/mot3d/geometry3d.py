"""Oriented 3D bounding boxes and exact 3D IoU.

Boxes live in KITTI camera coordinates: x right, y down, z forward. The box
reference point (x, y, z) is the center of the bottom face, so the box spans
[y - h, y] vertically, and the heading ``theta`` is the rotation about the
y axis (KITTI ``rotation_y``). 3D IoU is computed exactly: the bird's-eye-view
footprints (rectangles in the x-z plane) are intersected by convex polygon
clipping, and the vertical extent by interval overlap.

All values here are immutable and all functions pure, so everything in this
module is safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle in radians into (-pi, pi]."""
    return angle - TWO_PI * math.ceil((angle - math.pi) / TWO_PI)


@dataclass(frozen=True)
class Box3D:
    """Oriented 3D box: bottom-face center (x, y, z), size (l, w, h), heading theta.

    l runs along the heading direction, w across it, h up (-y). The
    constructor normalizes theta into (-pi, pi] and rejects non-finite or
    non-positive-size boxes.
    """

    x: float
    y: float
    z: float
    l: float
    w: float
    h: float
    theta: float

    def __post_init__(self) -> None:
        # Coerce to builtin floats so equality, repr and sorting behave the
        # same whether fields came from parsing or from numpy state vectors.
        for name in ("x", "y", "z", "l", "w", "h", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        fields = (self.x, self.y, self.z, self.l, self.w, self.h, self.theta)
        if not all(math.isfinite(v) for v in fields):
            raise ValueError(f"Box3D fields must be finite, got {fields}")
        if self.l <= 0 or self.w <= 0 or self.h <= 0:
            raise ValueError(
                f"Box3D sizes must be positive, got l={self.l}, w={self.w}, h={self.h}"
            )
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def volume(self) -> float:
        return self.l * self.w * self.h

    def sort_key(self) -> tuple:
        return (self.x, self.y, self.z, self.theta, self.l, self.w, self.h)


@dataclass(frozen=True)
class Polygon2D:
    """Convex polygon in the ground plane, vertices counter-clockwise."""

    vertices: tuple[tuple[float, float], ...]

    def signed_area(self) -> float:
        verts = self.vertices
        n = len(verts)
        if n < 3:
            return 0.0
        acc = 0.0
        for i in range(n):
            u0, v0 = verts[i]
            u1, v1 = verts[(i + 1) % n]
            acc += u0 * v1 - u1 * v0
        return 0.5 * acc

    def area(self) -> float:
        return max(0.0, self.signed_area())


def bev_corners(b: Box3D) -> Polygon2D:
    """Footprint of a box in the (x, z) ground plane, counter-clockwise.

    The corners are the l-by-w rectangle centered at (b.x, b.z) rotated by
    b.theta about the y axis, in the KITTI devkit corner convention.
    """
    c = math.cos(b.theta)
    s = math.sin(b.theta)
    hl = 0.5 * b.l
    hw = 0.5 * b.w
    # CCW at theta = 0; the rotation [[c, s], [-s, c]] preserves orientation.
    return Polygon2D(
        (
            (c * hl + s * hw + b.x, -s * hl + c * hw + b.z),
            (-c * hl + s * hw + b.x, s * hl + c * hw + b.z),
            (-c * hl - s * hw + b.x, s * hl - c * hw + b.z),
            (c * hl - s * hw + b.x, -s * hl - c * hw + b.z),
        )
    )


def _clip(subject: tuple[tuple[float, float], ...],
          clip_poly: tuple[tuple[float, float], ...]) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clip of one convex CCW polygon by another."""
    output: list[tuple[float, float]] = list(subject)
    cx1, cy1 = clip_poly[-1]
    for cx2, cy2 in clip_poly:
        if not output:
            break
        ex = cx2 - cx1
        ey = cy2 - cy1
        points = output
        output = []
        sx, sy = points[-1]
        # signed distance from the directed clip edge; >= 0 is inside (left
        # of the edge, boundary inclusive) for a CCW clip polygon
        d_s = ex * (sy - cy1) - ey * (sx - cx1)
        for px, py in points:
            d_p = ex * (py - cy1) - ey * (px - cx1)
            if (d_p >= 0.0) != (d_s >= 0.0):
                t = d_s / (d_s - d_p)
                output.append((sx + t * (px - sx), sy + t * (py - sy)))
            if d_p >= 0.0:
                output.append((px, py))
            sx, sy, d_s = px, py, d_p
        cx1, cy1 = cx2, cy2
    return output


def convex_intersection_area(p: Polygon2D, q: Polygon2D) -> float:
    """Area of the intersection of two convex CCW polygons; 0 if disjoint."""
    if len(p.vertices) < 3 or len(q.vertices) < 3:
        return 0.0
    clipped = _clip(p.vertices, q.vertices)
    n = len(clipped)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        u0, v0 = clipped[i]
        u1, v1 = clipped[(i + 1) % n]
        acc += u0 * v1 - u1 * v0
    return max(0.0, 0.5 * acc)


def _vertical_overlap(a: Box3D, b: Box3D) -> float:
    # Boxes span [y - h, y]; y grows downward.
    top = max(a.y - a.h, b.y - b.h)
    bottom = min(a.y, b.y)
    return bottom - top


def iou3d(a: Box3D, b: Box3D) -> float:
    """3D IoU of two oriented boxes, in [0, 1].

    Touching boxes (zero-measure contact) score 0. The two boxes are put in a
    canonical order first, and the box volumes reuse the footprint shoelace
    area, so iou3d(a, b) == iou3d(b, a) and iou3d(a, a) == 1.0 hold exactly
    in floating point.
    """
    if b.sort_key() < a.sort_key():
        a, b = b, a
    dy = _vertical_overlap(a, b)
    if dy <= 0.0:
        return 0.0
    # Circumradius reject: disjoint footprints are the common case.
    dx = a.x - b.x
    dz = a.z - b.z
    ra = 0.5 * math.hypot(a.l, a.w)
    rb = 0.5 * math.hypot(b.l, b.w)
    if dx * dx + dz * dz > (ra + rb) * (ra + rb):
        return 0.0
    pa = bev_corners(a)
    pb = bev_corners(b)
    inter_area = convex_intersection_area(pa, pb)
    if inter_area <= 0.0:
        return 0.0
    # Per-box volumes reuse the shoelace footprint area and the same
    # subtraction shape as the overlap, so identical boxes divide to 1.0
    # exactly instead of 1 +- 1 ulp.
    ha = a.y - (a.y - a.h)
    hb = b.y - (b.y - b.h)
    inter = inter_area * dy
    union = pa.area() * ha + pb.area() * hb - inter
    if union <= 0.0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


def iou3d_matrix(rows: list[Box3D], cols: list[Box3D]) -> list[list[float]]:
    """Pairwise iou3d for two box lists, row-major; same values as iou3d."""
    return [[iou3d(a, b) for b in cols] for a in rows]
