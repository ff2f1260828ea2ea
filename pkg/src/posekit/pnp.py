"""Pose recovery from the 8 projected cuboid corners.

The monocular head predicts the image positions of the cuboid corners and
the object's relative dimensions. Scaling the model and the translation by
the same factor leaves the image unchanged, so the translation recovered
here is in units of the normalized cuboid (largest side = 1). Metric scale
has to come from depth.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCameraError, DegenerateConfigurationError, InvalidArgumentError
from .geometry import BEHIND_CAMERA_EPS, cuboid_corners, exp_so3, orthonormalize, project_points, skew


@dataclass(frozen=True)
class PnPConfig:
    tol: float = 1e-10
    max_iters: int = 50
    max_halvings: int = 40


@dataclass
class PnPSolution:
    rotation: np.ndarray
    translation_dir: np.ndarray
    rmse: float
    iterations: int
    cost_history: list = field(default_factory=list, repr=False)


def normalize_dims(dims):
    """Scale relative dimensions so the largest component is exactly 1."""
    d = np.asarray(dims, dtype=np.float64).reshape(-1)
    if d.shape != (3,) or not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise InvalidArgumentError(f"relative dims must be 3 positive values, got {d}")
    return d / d.max()


def _check_keypoints(kps):
    kps = np.asarray(kps, dtype=np.float64)
    if kps.shape != (8, 2) or not np.all(np.isfinite(kps)):
        raise InvalidArgumentError("keypoints must be a finite 8x2 array")
    centered = kps - kps.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[0] == 0 or s[1] <= 1e-9 * s[0]:
        raise DegenerateConfigurationError("keypoints are collinear")
    return kps


def _dlt(X, xn):
    """Linear estimate of [R | t] from model points and normalized image points."""
    n = X.shape[0]
    A = np.zeros((2 * n, 12))
    Xh = np.hstack([X, np.ones((n, 1))])
    A[0::2, 0:4] = Xh
    A[0::2, 8:12] = -xn[:, :1] * Xh
    A[1::2, 4:8] = Xh
    A[1::2, 8:12] = -xn[:, 1:2] * Xh
    _, S, Vt = np.linalg.svd(A)
    if S[-2] <= 1e-12 * S[0]:
        raise DegenerateConfigurationError("DLT system is rank deficient")
    P = Vt[-1].reshape(3, 4)
    M = P[:, :3]
    det = np.linalg.det(M)
    if abs(det) <= 1e-300:
        raise DegenerateConfigurationError("DLT rotation block is singular")
    if det < 0:
        P = -P
        M = P[:, :3]
    scale = np.linalg.svd(M, compute_uv=False).mean()
    R = orthonormalize(M)
    t = P[:, 3] / scale
    return R, t


def _residuals(K, R, t, X, kps):
    P = X @ R.T + t
    z = P[:, 2]
    if np.any(z <= BEHIND_CAMERA_EPS):
        return None, P
    uv = np.stack([K.fx * P[:, 0] / z + K.cx, K.fy * P[:, 1] / z + K.cy], axis=1)
    return (uv - kps).reshape(-1), P


def _jacobian(K, R, P, X):
    n = X.shape[0]
    J = np.zeros((2 * n, 6))
    RX = X @ R.T
    for i in range(n):
        x, y, z = P[i]
        dproj = np.array([[K.fx / z, 0.0, -K.fx * x / z ** 2],
                          [0.0, K.fy / z, -K.fy * y / z ** 2]])
        # left perturbation R <- exp(w) R moves p by w x (R X)
        J[2 * i:2 * i + 2, :3] = dproj @ (-skew(RX[i]))
        J[2 * i:2 * i + 2, 3:] = dproj
    return J


def pnp_recover(kps, dims, K, cfg=PnPConfig()):
    """Rotation and scale-normalized translation from 8 cuboid keypoints.

    DLT on the 8 correspondences gives the starting point, which is
    projected onto SO(3) and refined by Gauss-Newton on the pixel
    reprojection error with step halving.
    """
    kps = _check_keypoints(kps)
    X = cuboid_corners(normalize_dims(dims))
    xn = np.stack([(kps[:, 0] - K.cx) / K.fx, (kps[:, 1] - K.cy) / K.fy], axis=1)
    R, t = _dlt(X, xn)

    r, P = _residuals(K, R, t, X, kps)
    if r is None:
        raise BehindCameraError("linear PnP estimate places the cuboid behind the camera")
    cost = float(r @ r)
    history = [cost]
    iters = 0
    while iters < cfg.max_iters and cost > 0.0:
        J = _jacobian(K, R, P, X)
        delta = np.linalg.lstsq(J, -r, rcond=None)[0]
        step = 1.0
        accepted = False
        for _ in range(cfg.max_halvings):
            R_new = exp_so3(step * delta[:3]) @ R
            t_new = t + step * delta[3:]
            r_new, P_new = _residuals(K, R_new, t_new, X, kps)
            if r_new is not None:
                cost_new = float(r_new @ r_new)
                if cost_new <= cost:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        iters += 1
        decrease = (cost - cost_new) / cost
        R, t, r, P, cost = R_new, t_new, r_new, P_new, cost_new
        history.append(cost)
        if decrease < cfg.tol:
            break

    if np.any(P[:, 2] <= BEHIND_CAMERA_EPS):
        raise BehindCameraError("PnP solution places the cuboid behind the camera")
    rmse = float(np.sqrt(cost / X.shape[0]))
    return PnPSolution(R, t, rmse, iters, history)


def reprojection_rmse(sol, kps, dims, K):
    X = cuboid_corners(normalize_dims(dims))
    uv = project_points(K, sol.rotation, sol.translation_dir, X)
    res = uv - np.asarray(kps, dtype=np.float64)
    return float(np.sqrt(np.mean(np.sum(res ** 2, axis=1))))
