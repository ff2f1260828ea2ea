"""Camera model, 9-DoF poses, depth back-projection and point sampling.

Conventions used throughout the package:

* Camera frame: x right, y down, z forward (meters).
* Pixel (u, v) = (column, row); pixel centers sit at integer coordinates.
* Depth images store millimeters; 0 marks an invalid pixel.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from PIL import Image

from .errors import BehindCameraError, EmptyCloudError, InvalidArgumentError

DEFAULT_NUM_POINTS = 1028
BEHIND_CAMERA_EPS = 1e-9
ROTATION_TOL = 1e-6


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        vals = (self.fx, self.fy, self.cx, self.cy)
        if not all(math.isfinite(float(v)) for v in vals):
            raise InvalidArgumentError("intrinsics must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidArgumentError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.width < 1 or self.height < 1:
            raise InvalidArgumentError("image size must be at least 1x1")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidArgumentError(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} image")

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                   int(d["width"]), int(d["height"]))


def check_rotation(R, tol=ROTATION_TOL, name="rotation"):
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidArgumentError(f"{name} must be a finite 3x3 matrix")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
        raise InvalidArgumentError(f"{name} is not orthonormal within {tol}")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise InvalidArgumentError(f"{name} has determinant {np.linalg.det(R):.6g}, expected 1")
    return R


@dataclass(frozen=True)
class Pose9DoF:
    """Rotation, translation (m) and per-axis cuboid size (m)."""

    rotation: np.ndarray
    translation: np.ndarray
    size: np.ndarray

    def __post_init__(self):
        R = check_rotation(self.rotation)
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        s = np.asarray(self.size, dtype=np.float64).reshape(-1)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise InvalidArgumentError("translation must be a finite 3-vector")
        if s.shape != (3,) or not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise InvalidArgumentError("size must be a 3-vector of positive extents")
        object.__setattr__(self, "rotation", _frozen(R))
        object.__setattr__(self, "translation", _frozen(t))
        object.__setattr__(self, "size", _frozen(s))

    @property
    def volume(self):
        return float(np.prod(self.size))

    def corners(self):
        """World-frame cuboid corners in canonical bit order, shape (8, 3)."""
        return cuboid_corners(self.size) @ self.rotation.T + self.translation


@dataclass(frozen=True)
class DepthImage:
    """Per-pixel depth in millimeters, 0 = invalid.

    Files are 16-bit unsigned; in-memory renders may keep fractional
    millimeters so that render/back-project round trips stay exact.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise InvalidArgumentError("depth image must be 2-D")
        if v.dtype != np.uint16:
            v = v.astype(np.float64)
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise InvalidArgumentError("depth values must be finite and non-negative")
        object.__setattr__(self, "values", v)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise InvalidArgumentError("mask must be 2-D")
        object.__setattr__(self, "values", v.astype(bool))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3:
            raise InvalidArgumentError(f"points must have shape (N, 3), got {p.shape}")
        if p.shape[0] == 0:
            raise EmptyCloudError("point cloud is empty")
        if not np.all(np.isfinite(p)):
            raise InvalidArgumentError("point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(p))

    def __len__(self):
        return self.points.shape[0]


# --- rotations -------------------------------------------------------------

def skew(w):
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def axis_angle_matrix(axis, angle):
    """Rotation by ``angle`` radians about ``axis`` (Rodrigues)."""
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0:
        raise InvalidArgumentError("rotation axis must be non-zero")
    k = axis / n
    K = skew(k)
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def exp_so3(w):
    w = np.asarray(w, dtype=np.float64)
    theta = float(np.linalg.norm(w))
    if theta < 1e-12:
        return np.eye(3) + skew(w)
    return axis_angle_matrix(w / theta, theta)


def rot_x(deg):
    return axis_angle_matrix([1.0, 0.0, 0.0], math.radians(deg))


def rot_y(deg):
    return axis_angle_matrix([0.0, 1.0, 0.0], math.radians(deg))


def rot_z(deg):
    return axis_angle_matrix([0.0, 0.0, 1.0], math.radians(deg))


def random_rotation(rng):
    """Uniformly distributed rotation matrix drawn from ``rng``."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def geodesic_deg(R1, R2):
    """Angle of R1^T R2 in degrees.

    Uses atan2 of the sine and cosine parts; arccos of the trace loses
    about 1e-6 degrees of resolution near zero.
    """
    D = np.asarray(R1).T @ np.asarray(R2)
    c = (np.trace(D) - 1.0) / 2.0
    s = 0.5 * math.sqrt((D[2, 1] - D[1, 2]) ** 2 + (D[0, 2] - D[2, 0]) ** 2 + (D[1, 0] - D[0, 1]) ** 2)
    return math.degrees(math.atan2(s, c))


def orthonormalize(M):
    """Nearest rotation to ``M`` in Frobenius norm.

    Polar decomposition through the SVD, with the smallest singular
    direction flipped when needed so that det = +1.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (3, 3) or not np.all(np.isfinite(M)):
        raise InvalidArgumentError("expected a finite 3x3 matrix")
    U, S, Vt = np.linalg.svd(M)
    if S[0] == 0 or S[2] <= 1e-12 * S[0]:
        raise InvalidArgumentError("matrix is singular")
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


# --- camera geometry -------------------------------------------------------

def cuboid_corners(size):
    """The 8 corners of an origin-centered cuboid with extents ``size``.

    Corner ``i`` takes the sign pattern of the binary expansion of ``i``:
    bit 0 drives x, bit 1 drives y, bit 2 drives z, and a 0 bit means the
    negative half-extent.
    """
    size = np.asarray(size, dtype=np.float64).reshape(-1)
    if size.shape != (3,) or not np.all(np.isfinite(size)) or np.any(size <= 0):
        raise InvalidArgumentError(f"size must have 3 positive components, got {size}")
    bits = (np.arange(8)[:, None] >> np.arange(3)[None, :]) & 1
    return (2.0 * bits - 1.0) * (size / 2.0)


def project_points(K, R, t, X):
    """Vectorized ``project_point`` for an (N, 3) array, returns (N, 2)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    P = X @ np.asarray(R, dtype=np.float64).T + np.asarray(t, dtype=np.float64).reshape(3)
    z = P[:, 2]
    if np.any(z <= BEHIND_CAMERA_EPS):
        raise BehindCameraError(f"{int(np.sum(z <= BEHIND_CAMERA_EPS))} point(s) at or behind the camera")
    return np.stack([K.fx * P[:, 0] / z + K.cx, K.fy * P[:, 1] / z + K.cy], axis=1)


def project_point(K, R, t, X):
    return tuple(project_points(K, R, t, np.reshape(X, (1, 3)))[0])


def backproject(depth, K, mask):
    """Lift masked, valid depth pixels to a camera-frame point cloud.

    Points come out in row-major pixel order.
    """
    d = depth.values
    m = mask.values
    if d.shape != m.shape:
        raise InvalidArgumentError(f"depth {d.shape} and mask {m.shape} dimensions differ")
    rows, cols = np.nonzero(m & (d > 0))
    if rows.size == 0:
        raise EmptyCloudError("no pixel is both masked and has valid depth")
    z = d[rows, cols].astype(np.float64) / 1000.0
    x = (cols - K.cx) * z / K.fx
    y = (rows - K.cy) * z / K.fy
    return PointCloud(np.stack([x, y, z], axis=1))


def sample_points(cloud, n=DEFAULT_NUM_POINTS, seed=0):
    """Draw exactly ``n`` points uniformly from ``cloud``.

    Without replacement when the cloud is large enough, with replacement
    otherwise, so downstream tensors always have N = n rows.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    pts = cloud.points
    if pts.shape[0] == 0:
        raise EmptyCloudError("cannot sample from an empty cloud")
    idx = sample_indices(pts.shape[0], n, seed)
    return PointCloud(pts[idx])


def sample_indices(count, n, seed):
    rng = np.random.default_rng(seed)
    if count >= n:
        return rng.choice(count, size=n, replace=False)
    return rng.integers(0, count, size=n)


# --- PNG I/O ---------------------------------------------------------------

def read_depth_png(path):
    with Image.open(path) as im:
        arr = np.array(im)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{path}: depth PNG must be single-channel")
    return DepthImage(arr.astype(np.uint16))


def write_depth_png(path, depth):
    vals = depth.values if isinstance(depth, DepthImage) else np.asarray(depth)
    if vals.dtype != np.uint16:
        vals = np.clip(np.rint(vals), 0, 65535).astype(np.uint16)
    Image.fromarray(vals).save(path)


def read_mask_png(path):
    with Image.open(path) as im:
        arr = np.array(im.convert("L"))
    return BinaryMask(arr != 0)


def write_mask_png(path, mask):
    vals = mask.values if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    Image.fromarray(vals.astype(np.uint8) * 255).save(path)
