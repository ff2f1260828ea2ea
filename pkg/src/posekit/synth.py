"""Synthetic benchmark scenes with exactly controlled prediction noise.

Each frame holds one cuboid object. Ground-truth poses are random;
predictions are the ground truth rotated by exactly ``noise_deg`` about an
axis perpendicular to the category's symmetry axis, shifted by exactly
``noise_cm`` and scaled by ``1 + noise_scale/100``. Depth is ray-cast
against the ground-truth cuboid.
"""

from dataclasses import dataclass, field
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .evaluation import EvalConfig, FrameRecord, write_records
from .geometry import (BinaryMask, CameraIntrinsics, DepthImage, axis_angle_matrix, random_rotation,
                       write_depth_png, write_mask_png)
from .mesh import cuboid_mesh, save_obj
from .symmetry import NONE

# REAL275 test-camera intrinsics
DEFAULT_INTRINSICS = CameraIntrinsics(591.0125, 590.16775, 322.525, 244.11084, 640, 480)

# rough per-category extents (m); x, y (up), z
CATEGORY_SIZES = {
    "bottle": (0.08, 0.22, 0.08),
    "bowl": (0.16, 0.07, 0.16),
    "camera": (0.12, 0.10, 0.09),
    "can": (0.07, 0.12, 0.07),
    "laptop": (0.32, 0.22, 0.26),
    "mug": (0.12, 0.09, 0.09),
}


@dataclass
class SyntheticScene:
    intrinsics: CameraIntrinsics
    gts: list
    preds: list
    meshes: dict = field(default_factory=dict, repr=False)
    depths: dict = field(default_factory=dict, repr=False)
    masks: dict = field(default_factory=dict, repr=False)


def render_cuboid_depth(K, pose):
    """Ray-cast depth (fractional mm) and coverage mask of a posed cuboid."""
    vv, uu = np.mgrid[0:K.height, 0:K.width].astype(np.float64)
    dirs = np.stack([(uu - K.cx) / K.fx, (vv - K.cy) / K.fy, np.ones_like(uu)], axis=-1).reshape(-1, 3)
    R, t, half = pose.rotation, pose.translation, pose.size / 2.0
    o = -(R.T @ t)
    d = dirs @ R
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-half - o) / d
        t2 = (half - o) / d
    near = np.fmax.reduce(np.fmin(t1, t2), axis=1)
    far = np.fmin.reduce(np.fmax(t1, t2), axis=1)
    hit = (near <= far) & (near > 0)
    depth_mm = np.where(hit, near * 1000.0, 0.0).reshape(K.height, K.width)
    return DepthImage(depth_mm), BinaryMask(hit.reshape(K.height, K.width))


def _perpendicular_unit(axis, rng):
    v = rng.standard_normal(3)
    v -= (v @ axis) * axis
    return v / np.linalg.norm(v)


def perturb(gt, noise_deg, noise_cm, noise_scale, rng, sym):
    """A copy of ``gt`` moved by exactly the requested amounts."""
    if sym.kind == NONE:
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
    else:
        axis = _perpendicular_unit(np.asarray(sym.axis), rng)
    R = gt.rotation @ axis_angle_matrix(axis, math.radians(noise_deg))
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    t = gt.translation + (noise_cm / 100.0) * direction
    s = gt.size * (1.0 + noise_scale / 100.0)
    return FrameRecord(gt.frame_id, gt.category, R, t, s)


def generate_synthetic_scene(cfg=None, seed=0, noise=(0.0, 0.0, 0.0), frames_per_category=10,
                             perturbed_fraction=1.0, intrinsics=DEFAULT_INTRINSICS, render=True):
    """Deterministic scene set for ``seed``.

    ``noise`` is (degrees, centimeters, scale percent). Only the first
    ``round(perturbed_fraction * frames_per_category)`` frames of each
    category are perturbed; the rest are predicted exactly.
    """
    cfg = cfg or EvalConfig()
    noise_deg, noise_cm, noise_scale = (float(x) for x in noise)
    if min(noise_deg, noise_cm, noise_scale) < 0:
        raise InvalidArgumentError("noise levels must be >= 0")
    if not 0.0 <= perturbed_fraction <= 1.0:
        raise InvalidArgumentError("perturbed_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    K = intrinsics
    n_perturbed = int(round(perturbed_fraction * frames_per_category))
    scene = SyntheticScene(K, [], [])
    for cat in cfg.categories:
        base = np.asarray(CATEGORY_SIZES.get(cat, (0.1, 0.1, 0.1)))
        sym = cfg.symmetry_for(cat)
        for i in range(frames_per_category):
            fid = f"{cat}_{i:04d}"
            R = random_rotation(rng)
            t = np.array([rng.uniform(-0.12, 0.12), rng.uniform(-0.08, 0.08), rng.uniform(0.6, 1.2)])
            s = base * rng.uniform(0.8, 1.2, 3)
            gt = FrameRecord(fid, cat, R, t, s)
            if i < n_perturbed:
                pred = perturb(gt, noise_deg, noise_cm, noise_scale, rng, sym)
            else:
                pred = FrameRecord(fid, cat, R.copy(), t.copy(), s.copy())
            scene.gts.append(gt)
            scene.preds.append(pred)
            scene.meshes[fid] = cuboid_mesh(s, fid)
            if render:
                scene.depths[fid], scene.masks[fid] = render_cuboid_depth(K, gt.to_pose())
    return scene


def write_scene(scene, out_dir):
    """Write records, intrinsics, depth/mask PNGs and OBJ meshes under ``out_dir``."""
    out = Path(out_dir)
    for sub in ("depth", "mask", "meshes"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    write_records(out / "gt.jsonl", scene.gts)
    write_records(out / "pred.jsonl", scene.preds)
    (out / "intrinsics.json").write_text(json.dumps(scene.intrinsics.to_dict(), indent=2) + "\n")
    for fid, mesh in scene.meshes.items():
        save_obj(out / "meshes" / f"{fid}.obj", mesh)
    for fid, depth in scene.depths.items():
        write_depth_png(out / "depth" / f"{fid}.png", depth)
        write_mask_png(out / "mask" / f"{fid}.png", scene.masks[fid])
    return out
