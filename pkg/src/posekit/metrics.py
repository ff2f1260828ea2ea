"""Benchmark metrics: exact oriented-box IoU, pose errors, threshold accuracies."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidArgumentError
from .geometry import Pose9DoF, geodesic_deg
from .symmetry import CONTINUOUS, DISCRETE, NONE

PLANE_EPS = 1e-12

IOU_THRESHOLDS = (0.25, 0.50, 0.75)
POSE_THRESHOLDS = ((5.0, 2.0), (5.0, 5.0), (10.0, 5.0), (10.0, 10.0))


def iou_column(thr):
    return f"3D{int(round(thr * 100))}"


def pose_column(deg, cm):
    return f"{deg:g}deg{cm:g}cm"


# --- exact oriented box IoU --------------------------------------------------

def _box_faces(pose):
    """Six quads of the box, each wound counter-clockwise seen from outside."""
    c = pose.corners()
    quads = ((0, 4, 6, 2), (1, 3, 7, 5), (0, 1, 5, 4), (2, 6, 7, 3), (0, 2, 3, 1), (4, 5, 7, 6))
    return [c[list(q)] for q in quads]


def _box_planes(pose):
    """Outward normals n and offsets d; the box is {x : n.x <= d} for all 6."""
    R, t, half = pose.rotation, pose.translation, pose.size / 2.0
    planes = []
    for k in range(3):
        n = R[:, k]
        planes.append((n.copy(), float(n @ t + half[k])))
        planes.append((-n, float(-n @ t + half[k])))
    return planes


def _order_cap(points, normal):
    """Sort coplanar points counter-clockwise around ``normal``."""
    center = points.mean(axis=0)
    e1 = points[np.argmax(np.linalg.norm(points - center, axis=1))] - center
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    rel = points - center
    ang = np.arctan2(rel @ e2, rel @ e1)
    return points[np.argsort(ang, kind="stable")]


def _clip_polytope(faces, n, d):
    """Keep the part of a closed convex polytope with n.x <= d."""
    all_pts = np.concatenate(faces)
    s_all = all_pts @ n - d
    if np.all(s_all <= PLANE_EPS):
        return faces
    if np.all(s_all >= -PLANE_EPS):
        return []

    out = []
    cap = []
    for poly in faces:
        s = poly @ n - d
        if np.all(s <= PLANE_EPS):
            out.append(poly)
            cap.extend(poly[np.abs(s) <= PLANE_EPS])
            continue
        if np.all(s >= -PLANE_EPS):
            cap.extend(poly[np.abs(s) <= PLANE_EPS])
            continue
        clipped = []
        m = len(poly)
        for i in range(m):
            p, q = poly[i], poly[(i + 1) % m]
            sp, sq = s[i], s[(i + 1) % m]
            if sp <= PLANE_EPS:
                clipped.append(p)
                if abs(sp) <= PLANE_EPS:
                    cap.append(p)
            if (sp < -PLANE_EPS and sq > PLANE_EPS) or (sp > PLANE_EPS and sq < -PLANE_EPS):
                x = p + (sp / (sp - sq)) * (q - p)
                clipped.append(x)
                cap.append(x)
        if len(clipped) >= 3:
            out.append(np.array(clipped))
    if len(cap) >= 3:
        out.append(_order_cap(np.array(cap), n))
    return out


def _polytope_volume(faces, origin):
    # divergence theorem over a fan triangulation of every face
    tri = [(poly[0], poly[i], poly[i + 1]) for poly in faces for i in range(1, len(poly) - 1)]
    if not tri:
        return 0.0
    tri = np.array(tri) - origin
    return float(np.einsum("ij,ij->", tri[:, 0], np.cross(tri[:, 1], tri[:, 2]))) / 6.0


def intersection_volume(a, b):
    """Exact volume of the intersection of two oriented boxes (m^3)."""
    faces = _box_faces(a)
    for n, d in _box_planes(b):
        faces = _clip_polytope(faces, n, d)
        if not faces:
            return 0.0
    return max(_polytope_volume(faces, a.translation), 0.0)


def box_iou_3d(a, b):
    inter = intersection_volume(a, b)
    union = a.volume + b.volume - inter
    return float(min(max(inter / union, 0.0), 1.0))


def symmetric_box_iou(a, b, sym, steps=36):
    """Best IoU over re-orientations of ``a`` about ``b``'s symmetry axis.

    The axis is taken in ``b``'s (ground-truth) object frame and applied
    in world coordinates around ``a``'s center.
    """
    if sym.kind == NONE:
        return box_iou_3d(a, b)
    # the identity is scored on the untouched box so the result never falls below box_iou_3d
    best = box_iou_3d(a, b)
    Rb = b.rotation
    for S in sym.rotations(steps)[1:]:
        Ra = Rb @ S @ Rb.T @ a.rotation
        best = max(best, box_iou_3d(Pose9DoF(Ra, a.translation, a.size), b))
    return best


# --- pose errors -------------------------------------------------------------

@dataclass(frozen=True)
class PoseError:
    rotation_deg: float
    translation_cm: float


def _axis_angle_deg(u, v):
    return math.degrees(math.atan2(np.linalg.norm(np.cross(u, v)), float(u @ v)))


def pose_error(pred, gt, sym):
    t_cm = 100.0 * float(np.linalg.norm(pred.translation - gt.translation))
    if sym.kind == NONE:
        rot = geodesic_deg(pred.rotation, gt.rotation)
    elif sym.kind == CONTINUOUS:
        axis = np.asarray(sym.axis)
        rot = _axis_angle_deg(pred.rotation @ axis, gt.rotation @ axis)
    elif sym.kind == DISCRETE:
        rot = min(geodesic_deg(pred.rotation, gt.rotation @ S) for S in sym.rotations())
    else:
        raise InvalidArgumentError(f"unknown symmetry kind {sym.kind!r}")
    return PoseError(min(max(rot, 0.0), 180.0), t_cm)


# --- accuracies ----------------------------------------------------------------

def threshold_accuracy(errors, thresholds=POSE_THRESHOLDS):
    """Percent of errors with rotation <= deg AND translation <= cm, per threshold."""
    if len(errors) == 0:
        raise InvalidArgumentError("no pose errors to score")
    rot = np.array([e.rotation_deg for e in errors])
    trans = np.array([e.translation_cm for e in errors])
    return [100.0 * int(np.count_nonzero((rot <= d) & (trans <= c))) / len(errors)
            for d, c in thresholds]


def iou_accuracy(ious, thresholds=IOU_THRESHOLDS):
    if len(ious) == 0:
        raise InvalidArgumentError("no IoU values to score")
    v = np.asarray(ious, dtype=np.float64)
    if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
        raise InvalidArgumentError("IoU values must lie in [0, 1]")
    return [100.0 * int(np.count_nonzero(v >= t)) / v.size for t in thresholds]


@dataclass
class FrameResult:
    frame_id: str
    category: str
    iou: float
    rotation_deg: float
    translation_cm: float


@dataclass
class MetricReport:
    """Per-category and category-mean accuracies in percent.

    ``categories`` maps a category name to ``{column: value}``; ``mean``
    averages each column over the categories present.
    """

    columns: list
    categories: dict
    mean: dict
    frame_counts: dict
    iou_thresholds: tuple = IOU_THRESHOLDS
    pose_thresholds: tuple = POSE_THRESHOLDS
    frames_per_second: float = None
    frames: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        iou_cols = [iou_column(t) for t in sorted(self.iou_thresholds)]
        for name, row in list(self.categories.items()) + [("mean", self.mean)]:
            for col, val in row.items():
                if not (0.0 <= val <= 100.0):
                    raise InvalidArgumentError(f"{name}/{col} = {val} outside [0, 100]")
            ious = [row[c] for c in iou_cols]
            if any(x < y for x, y in zip(ious, ious[1:])):
                raise InvalidArgumentError(f"{name}: IoU accuracies not monotone in threshold")
            # a looser (deg, cm) pair can never score lower than a stricter one
            for d1, c1 in self.pose_thresholds:
                for d2, c2 in self.pose_thresholds:
                    if d1 <= d2 and c1 <= c2 and row[pose_column(d1, c1)] > row[pose_column(d2, c2)]:
                        raise InvalidArgumentError(f"{name}: pose accuracies not monotone in threshold")

    @property
    def total_frames(self):
        return sum(self.frame_counts.values())


def build_report(frames, iou_thresholds=IOU_THRESHOLDS, pose_thresholds=POSE_THRESHOLDS,
                 categories=None):
    """Aggregate per-frame results into a :class:`MetricReport`."""
    if not frames:
        raise InvalidArgumentError("no frames to aggregate")
    columns = [iou_column(t) for t in iou_thresholds] + [pose_column(d, c) for d, c in pose_thresholds]
    present = sorted({f.category for f in frames})
    if categories is not None:
        present = [c for c in categories if c in present]
    per_cat = {}
    counts = {}
    for cat in present:
        sub = [f for f in frames if f.category == cat]
        vals = iou_accuracy([f.iou for f in sub], iou_thresholds)
        vals += threshold_accuracy([PoseError(f.rotation_deg, f.translation_cm) for f in sub],
                                   pose_thresholds)
        per_cat[cat] = dict(zip(columns, vals))
        counts[cat] = len(sub)
    mean = {c: float(np.mean([per_cat[k][c] for k in present])) for c in columns}
    return MetricReport(columns, per_cat, mean, counts, tuple(iou_thresholds),
                        tuple(tuple(p) for p in pose_thresholds), frames=list(frames))
