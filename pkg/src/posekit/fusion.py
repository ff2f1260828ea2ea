"""Alignment of image features to sampled points, and RGB-D fusion operators.

The image branch produces an H x W x C1 feature map; the depth branch
produces N x C2 per-point features. Each 3D point is projected onto the
feature grid and the map is bilinearly sampled there, giving an N x C1
tensor row-aligned with the depth features. The two are then fused by
one of three operators:

``concat``     [mono | depth], N x (C1 + C2)
``mlp_skip``   depth + L2(relu(L1([mono | depth]))), N x C2
``attn_skip``  depth + softmax((depth Wq)(mono Wk)^T / sqrt(D)) (mono Wv), N x C2

Weights are always supplied by the caller.
"""

from dataclasses import dataclass, field
import math
import struct

import numpy as np

from .errors import BehindCameraError, InvalidArgumentError

STRATEGIES = ("concat", "mlp_skip", "attn_skip")
REQUIRED_WEIGHTS = {
    "concat": (),
    "mlp_skip": ("W1", "b1", "W2", "b2"),
    "attn_skip": ("Wq", "Wk", "Wv"),
}


def _finite_2d(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidArgumentError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return a


@dataclass(frozen=True)
class FeatureMap:
    values: np.ndarray  # H x W x C

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or min(v.shape) < 1:
            raise InvalidArgumentError(f"feature map must be H x W x C with all sizes >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("feature map contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def channels(self):
        return self.values.shape[2]


@dataclass(frozen=True)
class FusionConfig:
    strategy: str = "concat"
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidArgumentError(f"unknown fusion strategy {self.strategy!r}")
        missing = [k for k in REQUIRED_WEIGHTS[self.strategy] if k not in self.weights]
        if missing:
            raise InvalidArgumentError(f"{self.strategy} is missing weights: {', '.join(missing)}")
        object.__setattr__(self, "weights",
                           {k: np.asarray(v, dtype=np.float64) for k, v in self.weights.items()})


def project_cloud_to_pixels(cloud, K, grid_scale=1.0):
    """Feature-grid (u, v) for every point, shape (N, 2).

    ``grid_scale`` is feature cells per image pixel, e.g. 1/8 for a
    stride-8 map.
    """
    if not grid_scale > 0:
        raise InvalidArgumentError("grid_scale must be positive")
    P = cloud.points
    if np.any(P[:, 2] <= 0):
        raise BehindCameraError("point with z <= 0 cannot be projected")
    u = K.fx * P[:, 0] / P[:, 2] + K.cx
    v = K.fy * P[:, 1] / P[:, 2] + K.cy
    return np.stack([u, v], axis=1) * grid_scale


def bilinear_weights(coords, height, width):
    """Corner indices and weights of the clamp-to-edge bilinear stencil.

    Returns (u0, u1, v0, v1, fu, fv) where the sample equals
    (1-fu)(1-fv) f[v0,u0] + fu(1-fv) f[v0,u1] + (1-fu)fv f[v1,u0] + fu fv f[v1,u1].
    """
    coords = _finite_2d(coords, "coords")
    u = np.clip(coords[:, 0], 0.0, width - 1)
    v = np.clip(coords[:, 1], 0.0, height - 1)
    # the upper cell index is capped at W-2 so grid nodes on the last
    # column resolve to u0 = W-2, fu = 1 and stay exact
    u0 = np.minimum(np.floor(u).astype(np.int64), max(width - 2, 0))
    v0 = np.minimum(np.floor(v).astype(np.int64), max(height - 2, 0))
    u1 = np.minimum(u0 + 1, width - 1)
    v1 = np.minimum(v0 + 1, height - 1)
    return u0, u1, v0, v1, u - u0, v - v0


def sample_image_features(fmap, coords):
    f = fmap.values
    u0, u1, v0, v1, fu, fv = bilinear_weights(coords, fmap.height, fmap.width)
    fu = fu[:, None]
    fv = fv[:, None]
    top = (1.0 - fu) * f[v0, u0] + fu * f[v0, u1]
    bottom = (1.0 - fu) * f[v1, u0] + fu * f[v1, u1]
    return (1.0 - fv) * top + fv * bottom


def _softmax_rows(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _expect_shape(w, shape, name):
    if w.shape != shape:
        raise InvalidArgumentError(f"weight {name} has shape {w.shape}, expected {shape}")


def attention_weights(mono, depth, cfg):
    """Row-stochastic N x N attention matrix used by ``attn_skip``."""
    Wq, Wk = cfg.weights["Wq"], cfg.weights["Wk"]
    c1, c2 = mono.shape[1], depth.shape[1]
    if Wq.ndim != 2 or Wk.ndim != 2:
        raise InvalidArgumentError("Wq and Wk must be 2-D")
    D = Wq.shape[1]
    _expect_shape(Wq, (c2, D), "Wq")
    _expect_shape(Wk, (c1, D), "Wk")
    q = depth @ Wq
    k = mono @ Wk
    return _softmax_rows((q @ k.T) / math.sqrt(D))


def fuse(mono, depth, cfg):
    mono = _finite_2d(mono, "mono")
    depth = _finite_2d(depth, "depth")
    if mono.shape[0] != depth.shape[0]:
        raise InvalidArgumentError(f"point counts differ: mono {mono.shape[0]}, depth {depth.shape[0]}")
    c1, c2 = mono.shape[1], depth.shape[1]
    w = cfg.weights

    if cfg.strategy == "concat":
        return np.concatenate([mono, depth], axis=1)

    if cfg.strategy == "mlp_skip":
        _expect_shape(w["W1"], (c1 + c2, c2), "W1")
        _expect_shape(w["b1"].reshape(-1), (c2,), "b1")
        _expect_shape(w["W2"], (c2, c2), "W2")
        _expect_shape(w["b2"].reshape(-1), (c2,), "b2")
        x = np.concatenate([mono, depth], axis=1)
        h = np.maximum(x @ w["W1"] + w["b1"].reshape(-1), 0.0)
        return depth + (h @ w["W2"] + w["b2"].reshape(-1))

    A = attention_weights(mono, depth, cfg)
    _expect_shape(w["Wv"], (c1, c2), "Wv")
    return depth + A @ (mono @ w["Wv"])


# --- weight container ------------------------------------------------------
# Repeated records until EOF, all integers little-endian uint32:
#   name_len, name (UTF-8), ndim, dims[ndim], float32 data (row-major)

def save_weights(path, tensors):
    with open(path, "wb") as fh:
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype="<f4")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_weights(path):
    with open(path, "rb") as fh:
        data = fh.read()
    out = {}
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise InvalidArgumentError(f"{path}: truncated weight file at byte {pos}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    while pos < len(data):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(take(4 * count), dtype="<f4").reshape(shape)
        out[name] = arr.astype(np.float64)
    return out
