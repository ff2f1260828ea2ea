"""File-driven evaluation: JSON-lines pose records in, metric reports out.

One record per line::

    {"frame_id": "scene_1/0000_0", "category": "mug",
     "rotation": [r00, r01, ..., r22], "translation": [x, y, z], "size": [sx, sy, sz]}

Rotation is row-major, translation and size are meters. Predictions and
ground truth are paired on (frame_id, category).
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import csv
import io
import json
import math
import time
from importlib import resources

import numpy as np

from .errors import (InvalidArgumentError, MatchingError, RecordParseError,
                     RecordValidationError)
from .geometry import Pose9DoF, orthonormalize
from .metrics import FrameResult, build_report, pose_error, symmetric_box_iou
from .symmetry import SymmetryClass

MAX_ROTATION_DEVIATION = 1e-3
REPORT_FORMATS = ("text", "csv", "json")
THROUGHPUT_SCOPE = "metric pipeline only (no network inference)"


def _default_config_dict():
    text = resources.files("posekit").joinpath("data/default_config.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass
class EvalConfig:
    categories: list = None
    symmetry: dict = None
    iou_thresholds: tuple = None
    pose_thresholds: tuple = None
    symmetry_steps: int = None
    rounding: int = None
    seed: int = None

    def __post_init__(self):
        defaults = _default_config_dict()
        if self.categories is None:
            self.categories = list(defaults["categories"])
        if self.symmetry is None:
            self.symmetry = defaults["symmetry"]
        self.symmetry = {k: v if isinstance(v, SymmetryClass) else SymmetryClass.from_dict(v)
                         for k, v in self.symmetry.items()}
        if self.iou_thresholds is None:
            self.iou_thresholds = defaults["iou_thresholds"]
        if self.pose_thresholds is None:
            self.pose_thresholds = defaults["pose_thresholds"]
        if self.symmetry_steps is None:
            self.symmetry_steps = defaults["symmetry_steps"]
        if self.rounding is None:
            self.rounding = defaults["rounding"]
        if self.seed is None:
            self.seed = defaults["seed"]
        self.iou_thresholds = tuple(float(t) for t in self.iou_thresholds)
        self.pose_thresholds = tuple((float(d), float(c)) for d, c in self.pose_thresholds)

        if not self.categories:
            raise InvalidArgumentError("at least one category is required")
        if any(not (0 < t <= 1) for t in self.iou_thresholds):
            raise InvalidArgumentError("IoU thresholds must lie in (0, 1]")
        if list(self.iou_thresholds) != sorted(self.iou_thresholds):
            raise InvalidArgumentError("IoU thresholds must be sorted ascending")
        if any(d <= 0 or c <= 0 for d, c in self.pose_thresholds):
            raise InvalidArgumentError("pose thresholds must be positive")
        if list(self.pose_thresholds) != sorted(self.pose_thresholds):
            raise InvalidArgumentError("pose thresholds must be sorted ascending")
        if self.symmetry_steps < 1:
            raise InvalidArgumentError("symmetry_steps must be >= 1")

    def symmetry_for(self, category):
        return self.symmetry.get(category, SymmetryClass.none())

    @classmethod
    def from_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        known = {"categories", "symmetry", "iou_thresholds", "pose_thresholds",
                 "symmetry_steps", "rounding", "seed"}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self):
        return {
            "categories": list(self.categories),
            "symmetry": {k: v.to_dict() for k, v in self.symmetry.items()},
            "iou_thresholds": list(self.iou_thresholds),
            "pose_thresholds": [list(p) for p in self.pose_thresholds],
            "symmetry_steps": self.symmetry_steps,
            "rounding": self.rounding,
            "seed": self.seed,
        }


@dataclass
class FrameRecord:
    frame_id: str
    category: str
    rotation: np.ndarray
    translation: np.ndarray
    size: np.ndarray

    @property
    def key(self):
        return (self.frame_id, self.category)

    def to_pose(self):
        return Pose9DoF(self.rotation, self.translation, self.size)

    def to_dict(self):
        return {
            "frame_id": self.frame_id,
            "category": self.category,
            "rotation": [float(x) for x in np.asarray(self.rotation).reshape(-1)],
            "translation": [float(x) for x in np.asarray(self.translation).reshape(-1)],
            "size": [float(x) for x in np.asarray(self.size).reshape(-1)],
        }


def _vector(obj, name, n, line):
    val = obj.get(name)
    if not isinstance(val, list) or len(val) != n:
        raise RecordValidationError(f"expected a list of {n} numbers", name, line)
    try:
        arr = np.array([float(x) for x in val])
    except (TypeError, ValueError):
        raise RecordValidationError("non-numeric entry", name, line) from None
    if not np.all(np.isfinite(arr)):
        raise RecordValidationError("non-finite entry", name, line)
    return arr


def record_from_dict(obj, categories=None, line=None):
    if not isinstance(obj, dict):
        raise RecordValidationError("record must be a JSON object", None, line)
    fid = obj.get("frame_id")
    if not isinstance(fid, str) or not fid:
        raise RecordValidationError("must be a non-empty string", "frame_id", line)
    cat = obj.get("category")
    if not isinstance(cat, str):
        raise RecordValidationError("must be a string", "category", line)
    if categories is not None and cat not in categories:
        raise RecordValidationError(f"unknown category {cat!r}", "category", line)
    R = _vector(obj, "rotation", 9, line).reshape(3, 3)
    try:
        R_fixed = orthonormalize(R)
    except InvalidArgumentError:
        raise RecordValidationError("rotation matrix is singular", "rotation", line) from None
    dev = float(np.max(np.abs(R_fixed - R)))
    if dev >= MAX_ROTATION_DEVIATION:
        raise RecordValidationError(
            f"deviates from a rotation by {dev:.3g} (limit {MAX_ROTATION_DEVIATION})", "rotation", line)
    t = _vector(obj, "translation", 3, line)
    s = _vector(obj, "size", 3, line)
    if np.any(s <= 0):
        raise RecordValidationError("all extents must be positive", "size", line)
    return FrameRecord(fid, cat, R_fixed, t, s)


def load_records(path, categories=None):
    """Parse and validate a JSON-lines record file. Blank lines are skipped."""
    if categories is None:
        categories = EvalConfig().categories
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(f"malformed JSON ({exc.msg})", lineno) from None
            records.append(record_from_dict(obj, categories, lineno))
    return records


def write_records(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")


# --- evaluation ----------------------------------------------------------------

def match_records(preds, gts):
    """Pair records on (frame_id, category); returns pairs sorted by key."""
    def index(records, what):
        out = {}
        dup = []
        for r in records:
            if r.key in out:
                dup.append(r.key)
            out[r.key] = r
        if dup:
            raise MatchingError(f"duplicate {what} keys", dup)
        return out

    p = index(preds, "prediction")
    g = index(gts, "ground-truth")
    unmatched = sorted(set(p) ^ set(g))
    if unmatched:
        raise MatchingError("records without a counterpart", unmatched)
    return [(p[k], g[k]) for k in sorted(g)]


def score_pair(pred, gt, sym, steps):
    a, b = pred.to_pose(), gt.to_pose()
    err = pose_error(a, b, sym)
    iou = symmetric_box_iou(a, b, sym, steps)
    return FrameResult(gt.frame_id, gt.category, iou, err.rotation_deg, err.translation_cm)


def _score_star(args):
    return score_pair(*args)


def evaluate(preds, gts, cfg=None, workers=1, timed=False):
    """Score matched prediction/ground-truth pairs into a MetricReport.

    With ``workers > 1`` frames are scored in a process pool; results are
    reduced in key order, so the report does not depend on worker count.
    """
    cfg = cfg or EvalConfig()
    pairs = match_records(preds, gts)
    if not pairs:
        raise InvalidArgumentError("nothing to evaluate")
    jobs = [(p, g, cfg.symmetry_for(g.category), cfg.symmetry_steps) for p, g in pairs]
    start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(_score_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        frames = [score_pair(*job) for job in jobs]
    elapsed = time.perf_counter() - start
    report = build_report(frames, cfg.iou_thresholds, cfg.pose_thresholds, cfg.categories)
    if timed:
        report.frames_per_second = len(frames) / elapsed if elapsed > 0 else math.inf
    return report


# --- rendering -------------------------------------------------------------------

def _pretty(col):
    return col.replace("deg", "°")


def _rows(report):
    for cat, row in report.categories.items():
        yield cat, report.frame_counts[cat], row
    yield "mean", report.total_frames, report.mean


def report_to_dict(report):
    return {
        "columns": list(report.columns),
        "categories": {k: dict(v) for k, v in report.categories.items()},
        "mean": dict(report.mean),
        "frame_counts": dict(report.frame_counts),
        "iou_thresholds": list(report.iou_thresholds),
        "pose_thresholds": [list(p) for p in report.pose_thresholds],
        "frames_per_second": report.frames_per_second,
        "throughput_scope": THROUGHPUT_SCOPE,
    }


def render_report(report, fmt="text", rounding=1):
    """Serialize a report. Text is rounded for display; csv/json are not."""
    if fmt == "json":
        return (json.dumps(report_to_dict(report), indent=2) + "\n").encode("utf-8")

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "frames"] + list(report.columns))
        for name, count, row in _rows(report):
            w.writerow([name, count] + [repr(float(row[c])) for c in report.columns])
        return buf.getvalue().encode("utf-8")

    if fmt == "text":
        headers = ["category"] + [_pretty(c) for c in report.columns] + ["frames"]
        body = []
        for name, count, row in _rows(report):
            body.append([name] + [f"{row[c]:.{rounding}f}" for c in report.columns] + [str(count)])
        widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(headers)]

        def fmt_row(cells):
            first = cells[0].ljust(widths[0])
            rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
            return "  ".join([first] + rest)

        lines = [fmt_row(headers), "  ".join("-" * w for w in widths)]
        lines += [fmt_row(r) for r in body[:-1]]
        lines.append("  ".join("-" * w for w in widths))
        lines.append(fmt_row(body[-1]))
        if report.frames_per_second is not None:
            lines.append(f"throughput: {report.frames_per_second:.2f} frames/s ({THROUGHPUT_SCOPE})")
        return ("\n".join(lines) + "\n").encode("utf-8")

    raise InvalidArgumentError(f"unknown report format {fmt!r}; choose from {', '.join(REPORT_FORMATS)}")


def parse_csv_report(data):
    """Read back ``render_report(..., 'csv')`` as {row name: {column: value}}."""
    rows = list(csv.reader(io.StringIO(data.decode("utf-8") if isinstance(data, bytes) else data)))
    header = rows[0]
    return {r[0]: {h: float(v) for h, v in zip(header[2:], r[2:])} for r in rows[1:]}
