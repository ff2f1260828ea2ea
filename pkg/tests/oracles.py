"""Independent reference computations used by the test-suite.

Nothing here imports the code path it checks: each oracle recomputes the
quantity by brute force, sampling, enumeration or finite differences.
"""

import math

import numba
import numpy as np
from scipy.optimize import least_squares, linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection
from scipy.spatial.transform import Rotation


# --- Monte-Carlo box intersection ---------------------------------------------

@numba.njit(cache=True, fastmath=True)
def _mc_counts(lo, ext, Ra, ta, ha, Rb, tb, hb, n, seed):
    # xorshift64* stream, 53-bit uniforms
    x = np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(0x632BE59BD9B4E019)
    mult = np.uint64(0x2545F4914F6CDD1D)
    s11, s12, s25, s27 = np.uint64(11), np.uint64(12), np.uint64(25), np.uint64(27)
    scale = 1.0 / 9007199254740992.0
    # box axes as local scalars: a_kj = R[j, k]
    a00, a01, a02 = Ra[0, 0], Ra[1, 0], Ra[2, 0]
    a10, a11, a12 = Ra[0, 1], Ra[1, 1], Ra[2, 1]
    a20, a21, a22 = Ra[0, 2], Ra[1, 2], Ra[2, 2]
    b00, b01, b02 = Rb[0, 0], Rb[1, 0], Rb[2, 0]
    b10, b11, b12 = Rb[0, 1], Rb[1, 1], Rb[2, 1]
    b20, b21, b22 = Rb[0, 2], Rb[1, 2], Rb[2, 2]
    ta0, ta1, ta2, tb0, tb1, tb2 = ta[0], ta[1], ta[2], tb[0], tb[1], tb[2]
    ha0, ha1, ha2, hb0, hb1, hb2 = ha[0], ha[1], ha[2], hb[0], hb[1], hb[2]
    lo0, lo1, lo2 = lo[0], lo[1], lo[2]
    e0, e1, e2 = ext[0] * scale, ext[1] * scale, ext[2] * scale
    in_a = 0
    in_b = 0
    both = 0
    for _ in range(n):
        x ^= x >> s12
        x ^= x << s25
        x ^= x >> s27
        p0 = lo0 + float((x * mult) >> s11) * e0
        x ^= x >> s12
        x ^= x << s25
        x ^= x >> s27
        p1 = lo1 + float((x * mult) >> s11) * e1
        x ^= x >> s12
        x ^= x << s25
        x ^= x >> s27
        p2 = lo2 + float((x * mult) >> s11) * e2
        d0, d1, d2 = p0 - ta0, p1 - ta1, p2 - ta2
        a = (int(abs(a00 * d0 + a01 * d1 + a02 * d2) <= ha0)
             & int(abs(a10 * d0 + a11 * d1 + a12 * d2) <= ha1)
             & int(abs(a20 * d0 + a21 * d1 + a22 * d2) <= ha2))
        d0, d1, d2 = p0 - tb0, p1 - tb1, p2 - tb2
        b = (int(abs(b00 * d0 + b01 * d1 + b02 * d2) <= hb0)
             & int(abs(b10 * d0 + b11 * d1 + b12 * d2) <= hb1)
             & int(abs(b20 * d0 + b21 * d1 + b22 * d2) <= hb2))
        # branch-free counting; inside/outside is unpredictable
        in_a += a
        in_b += b
        both += a & b
    return in_a, in_b, both


def _corners(R, t, size):
    signs = np.array([[sx, sy, sz] for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)], dtype=float)
    return (signs * (np.asarray(size) / 2.0)) @ np.asarray(R).T + np.asarray(t)


def mc_box_iou(Ra, ta, sa, Rb, tb, sb, n=10_000_000, seed=0):
    """Monte-Carlo IoU of two oriented boxes, sampling the union's bounding box.

    Returns (estimate, number of samples that fell in the union).
    """
    ca, cb = _corners(Ra, ta, sa), _corners(Rb, tb, sb)
    lo = np.minimum(ca.min(axis=0), cb.min(axis=0))
    hi = np.maximum(ca.max(axis=0), cb.max(axis=0))
    in_a, in_b, both = _mc_counts(lo, hi - lo, np.asarray(Ra, float), np.asarray(ta, float),
                                  np.asarray(sa, float) / 2, np.asarray(Rb, float),
                                  np.asarray(tb, float), np.asarray(sb, float) / 2, n, seed)
    union = in_a + in_b - both
    return (both / union if union else 0.0), union


def halfspace_box_iou(Ra, ta, sa, Rb, tb, sb):
    """IoU via a qhull half-space intersection and convex-hull volume."""
    def halfspaces(R, t, size):
        R, t, h = np.asarray(R, float), np.asarray(t, float), np.asarray(size, float) / 2
        rows = []
        for k in range(3):
            n = R[:, k]
            rows.append(np.append(n, -(n @ t) - h[k]))
            rows.append(np.append(-n, n @ t - h[k]))
        return np.array(rows)

    hs = np.vstack([halfspaces(Ra, ta, sa), halfspaces(Rb, tb, sb)])
    # Chebyshev centre: the deepest interior point, found by linear programming
    norms = np.linalg.norm(hs[:, :3], axis=1)
    res = linprog([0, 0, 0, -1], A_ub=np.hstack([hs[:, :3], norms[:, None]]), b_ub=-hs[:, 3],
                  bounds=[(None, None)] * 3 + [(0, None)])
    va, vb = float(np.prod(sa)), float(np.prod(sb))
    if res.status != 0 or res.x[3] < 1e-9:
        return 0.0
    inter = ConvexHull(HalfspaceIntersection(hs, res.x[:3]).intersections).volume
    return inter / (va + vb - inter)


# --- PnP -----------------------------------------------------------------------

def nls_pnp(model, kps, fx, fy, cx, cy, starts=12, seed=0):
    """Multi-start Levenberg-Marquardt over (rotation vector, translation)."""
    rng = np.random.default_rng(seed)

    def residual(x):
        R = Rotation.from_rotvec(x[:3]).as_matrix()
        P = model @ R.T + x[3:]
        u = fx * P[:, 0] / P[:, 2] + cx
        v = fy * P[:, 1] / P[:, 2] + cy
        return np.concatenate([u - kps[:, 0], v - kps[:, 1]])

    best = None
    for _ in range(starts):
        x0 = np.concatenate([Rotation.random(random_state=rng.integers(1 << 31)).as_rotvec(),
                             [rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(2.0, 10.0)]])
        try:
            sol = least_squares(residual, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
        except ValueError:
            continue
        P = model @ Rotation.from_rotvec(sol.x[:3]).as_matrix().T + sol.x[3:]
        if np.any(P[:, 2] <= 0):
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    return Rotation.from_rotvec(best.x[:3]).as_matrix(), best.x[3:], 2.0 * best.cost


def rotation_angle_deg(R1, R2):
    """Geodesic distance via the quaternion of R1^T R2."""
    q = Rotation.from_matrix(np.asarray(R1).T @ np.asarray(R2)).as_quat()
    return math.degrees(2.0 * math.atan2(np.linalg.norm(q[:3]), abs(q[3])))


# --- bilinear sampling --------------------------------------------------------

def bilinear_tent(fmap, u, v):
    """Sum over grid nodes of tent(u - i) * tent(v - j) * f[j, i], after clamping."""
    H, W, _ = fmap.shape
    u = min(max(u, 0.0), W - 1.0)
    v = min(max(v, 0.0), H - 1.0)
    out = np.zeros(fmap.shape[2])
    for j in range(max(0, math.floor(v) - 1), min(H, math.floor(v) + 3)):
        wv = max(0.0, 1.0 - abs(v - j))
        for i in range(max(0, math.floor(u) - 1), min(W, math.floor(u) + 3)):
            wu = max(0.0, 1.0 - abs(u - i))
            if wu * wv:
                out += (wu * wv) * fmap[j, i]
    return out


# --- mesh-point loss ------------------------------------------------------------

def mpl_scalar_loop(gt, pred, R):
    total = 0.0
    for i in range(len(gt)):
        for r in range(3):
            x = R[r][0] * gt[i][0] + R[r][1] * gt[i][1] + R[r][2] * gt[i][2] - pred[i][r]
            total += x * x
    return total / len(gt)


def central_difference(f, x, h=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


# --- sample elimination ---------------------------------------------------------

def greedy_elimination_replay(points, v, r_max):
    """Recompute every weight from scratch at each step; lowest index wins ties."""
    alive = list(range(len(points)))
    order = []
    r2 = 2.0 * r_max
    while len(alive) > v:
        best, best_w = None, -1.0
        for i in alive:
            w = 0.0
            for j in alive:
                if j == i:
                    continue
                d = math.dist(points[i], points[j])
                if d < r2:
                    w += (1.0 - d / r2) ** 8
            if w > best_w:
                best, best_w = i, w
        order.append(best)
        alive.remove(best)
    return sorted(alive), order


def min_pairwise_distance(points):
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    d[np.diag_indices(len(points))] = np.inf
    return d.min()
