import csv

import numpy as np

from posekit.metrics import FrameResult, build_report
from posekit.plotting import IOU_GRID, ROT_GRID, accuracy_curves, write_figures


def _report():
    frames = [FrameResult(f"f{i}", "mug" if i % 2 else "can", i / 10, 2.0 * i, 1.0 * i) for i in range(10)]
    return build_report(frames)


def test_curves_agree_with_report_columns():
    rep = _report()
    curves = accuracy_curves(rep)
    for cat in rep.categories:
        assert curves[cat]["iou"][np.searchsorted(IOU_GRID, 0.5)] == rep.categories[cat]["3D50"]
    assert set(curves) == {"can", "mug", "mean"}


def test_curves_are_monotone():
    curves = accuracy_curves(_report())
    for c in curves.values():
        assert np.all(np.diff(c["iou"]) <= 0)
        assert np.all(np.diff(c["rotation"]) >= 0)
        assert np.all(np.diff(c["translation"]) >= 0)
        assert c["rotation"][-1] == 100.0 and len(c["rotation"]) == len(ROT_GRID)


def test_write_figures(tmp_path):
    paths = write_figures(_report(), tmp_path)
    assert [p.name for p in paths] == ["report_curves.png", "report_bars.png", "report_curves.csv"]
    assert paths[0].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    rows = list(csv.reader(paths[2].open()))
    assert rows[0] == ["category", "axis", "threshold", "accuracy"]
    assert len(rows) > 1
