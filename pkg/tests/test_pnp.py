import itertools

import numpy as np
import pytest

from posekit.errors import BehindCameraError, DegenerateConfigurationError, InvalidArgumentError
from posekit.geometry import CameraIntrinsics, cuboid_corners, geodesic_deg, project_points, random_rotation
from posekit.pnp import PnPConfig, PnPSolution, normalize_dims, pnp_recover, reprojection_rmse

from oracles import nls_pnp, rotation_angle_deg


def random_case(rng, K):
    R = random_rotation(rng)
    dims = normalize_dims(rng.uniform(0.2, 1.0, 3))
    t = np.array([rng.uniform(-0.8, 0.8), rng.uniform(-0.6, 0.6), rng.uniform(3.0, 8.0)])
    kps = project_points(K, R, t, cuboid_corners(dims))
    return R, t, dims, kps


def cube_group():
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((-1, 1), repeat=3):
            M = np.zeros((3, 3))
            for r, c in enumerate(perm):
                M[r, c] = signs[r]
            if np.linalg.det(M) > 0:
                mats.append(M)
    return mats


def test_normalize_dims():
    assert np.array_equal(normalize_dims([2, 4, 1]), [0.5, 1.0, 0.25])
    with pytest.raises(InvalidArgumentError):
        normalize_dims([1, 0, 1])


def test_noiseless_recovery(K, rng):
    for _ in range(50):
        R, t, dims, kps = random_case(rng, K)
        sol = pnp_recover(kps, dims, K)
        assert isinstance(sol, PnPSolution)
        assert geodesic_deg(sol.rotation, R) < 1e-6
        assert np.linalg.norm(sol.translation_dir - t) / np.linalg.norm(t) < 1e-6
        assert sol.rmse < 1e-6


def test_noisy_recovery_median(K, rng):
    errs = []
    for _ in range(100):
        R, t, dims, kps = random_case(rng, K)
        sol = pnp_recover(kps + rng.normal(0, 0.5, kps.shape), dims, K)
        errs.append(geodesic_deg(sol.rotation, R))
    assert np.median(errs) < 2.0


def test_agrees_with_multistart_nls(K, rng):
    for _ in range(3):
        R, t, dims, kps = random_case(rng, K)
        noisy = kps + rng.normal(0, 0.5, kps.shape)
        sol = pnp_recover(noisy, dims, K)
        R_ref, _, cost_ref = nls_pnp(cuboid_corners(dims), noisy, K.fx, K.fy, K.cx, K.cy)
        assert rotation_angle_deg(sol.rotation, R_ref) < 0.1
        assert sol.rmse ** 2 * 8 <= cost_ref * (1 + 1e-6) + 1e-12


def test_cube_identity_within_symmetry_group(K):
    dims = np.ones(3)
    kps = project_points(K, np.eye(3), [0, 0, 4], cuboid_corners(dims))
    sol = pnp_recover(kps, dims, K)
    assert min(geodesic_deg(sol.rotation, G) for G in cube_group()) < 1e-6
    assert len(cube_group()) == 24


def test_cost_never_increases(K, rng):
    for _ in range(30):
        R, t, dims, kps = random_case(rng, K)
        sol = pnp_recover(kps + rng.normal(0, 2.0, kps.shape), dims, K)
        h = sol.cost_history
        assert all(b <= a for a, b in zip(h, h[1:]))
        assert sol.iterations <= PnPConfig().max_iters


def test_scale_equivariance(K, rng):
    R, t, dims, kps = random_case(rng, K)
    noisy = kps + rng.normal(0, 0.5, kps.shape)
    base = pnp_recover(noisy, dims, K).rotation
    for lam in (1.0, 0.5, 0.123, 0.9999):
        assert geodesic_deg(pnp_recover(noisy, dims * lam, K).rotation, base) < 1e-9


def test_output_rotation_is_valid(K, rng):
    for _ in range(20):
        R, t, dims, kps = random_case(rng, K)
        Rs = pnp_recover(kps + rng.normal(0, 3.0, kps.shape), dims, K).rotation
        assert np.max(np.abs(Rs.T @ Rs - np.eye(3))) < 1e-6
        assert abs(np.linalg.det(Rs) - 1) < 1e-6


def test_collinear_keypoints_rejected(K):
    kps = np.stack([np.linspace(100, 500, 8), np.linspace(50, 300, 8)], axis=1)
    with pytest.raises(DegenerateConfigurationError):
        pnp_recover(kps, [1, 1, 1], K)


def test_behind_camera_solution(K):
    dims = normalize_dims([0.5, 0.8, 1.0])
    R = random_rotation(np.random.default_rng(4))
    P = cuboid_corners(dims) @ R.T + [0.1, -0.2, -4.0]
    kps = np.stack([K.fx * P[:, 0] / P[:, 2] + K.cx, K.fy * P[:, 1] / P[:, 2] + K.cy], axis=1)
    with pytest.raises(BehindCameraError):
        pnp_recover(kps, dims, K)


def test_bad_keypoint_shape(K):
    with pytest.raises(InvalidArgumentError):
        pnp_recover(np.zeros((7, 2)), [1, 1, 1], K)


def test_reprojection_rmse_examples(K, rng):
    R, t, dims, kps = random_case(rng, K)
    sol = pnp_recover(kps, dims, K)
    assert reprojection_rmse(sol, kps, dims, K) < 1e-6
    assert reprojection_rmse(sol, kps + [1.0, 0.0], dims, K) == pytest.approx(1.0, abs=1e-6)


def test_reprojection_rmse_recomputation(K, rng):
    R, t, dims, kps = random_case(rng, K)
    sol = pnp_recover(kps, dims, K)
    pert = kps + rng.normal(0, 1.5, kps.shape)
    X = cuboid_corners(dims)
    sq = 0.0
    for i in range(8):
        p = sol.rotation @ X[i] + sol.translation_dir
        u = K.fx * p[0] / p[2] + K.cx
        v = K.fy * p[1] / p[2] + K.cy
        sq += (u - pert[i, 0]) ** 2 + (v - pert[i, 1]) ** 2
    assert reprojection_rmse(sol, pert, dims, K) == pytest.approx(np.sqrt(sq / 8), rel=1e-12)


def test_reprojection_rmse_behind_camera(K, rng):
    R, t, dims, kps = random_case(rng, K)
    sol = pnp_recover(kps, dims, K)
    sol.translation_dir = -sol.translation_dir
    with pytest.raises(BehindCameraError):
        reprojection_rmse(sol, kps, dims, K)


def test_non_square_intrinsics(rng):
    K = CameraIntrinsics(591.0125, 590.16775, 322.525, 244.11084, 640, 480)
    R, t, dims, kps = random_case(rng, K)
    sol = pnp_recover(kps, dims, K)
    assert geodesic_deg(sol.rotation, R) < 1e-6
