"""Triangle meshes, Poisson-disk vertex sampling and the mesh-point loss.

The mesh-point loss compares V predicted object points against V points
sampled from the ground-truth mesh and rotated by the ground-truth
rotation R::

    L = (1/V) * sum_i || R @ gt_i - pred_i ||^2

It is added to the base pose-regression loss with weight ``lambda_mpl``.
Point correspondence is by index and must be supplied by the caller.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError, InvalidMeshError
from .geometry import check_rotation, cuboid_corners
from .symmetry import DEFAULT_CONTINUOUS_STEPS, NONE

DEGENERATE_AREA = 1e-12
DEFAULT_LAMBDA_MPL = 2000.0
CANDIDATE_FACTOR = 4
WEIGHT_EXPONENT = 8


@dataclass(frozen=True)
class TriangleMesh:
    """Vertices (m) and triangular faces; degenerate faces are dropped."""

    vertices: np.ndarray
    faces: np.ndarray
    name: str = "mesh"

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=np.float64)
        F = np.asarray(self.faces, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] != 3 or not np.all(np.isfinite(V)):
            raise InvalidMeshError("vertices must be a finite (V, 3) array")
        if F.size == 0:
            F = F.reshape(0, 3)
        if F.ndim != 2 or F.shape[1] != 3:
            raise InvalidMeshError("faces must be a (F, 3) index array")
        if F.size and (F.min() < 0 or F.max() >= V.shape[0]):
            raise InvalidMeshError("face index out of range")
        F = F[_triangle_areas(V, F) > DEGENERATE_AREA]
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "faces", F)

    @property
    def areas(self):
        return _triangle_areas(self.vertices, self.faces)

    @property
    def total_area(self):
        return float(self.areas.sum())


def _triangle_areas(V, F):
    if F.shape[0] == 0:
        return np.zeros(0)
    a, b, c = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True)
class SampledVertexSet:
    points: np.ndarray
    source: str = "mesh"
    face_index: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
            raise InvalidArgumentError("sampled vertex set must be a non-empty (V, 3) array")
        object.__setattr__(self, "points", p)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class LossConfig:
    lambda_mpl: float = DEFAULT_LAMBDA_MPL
    symmetry_steps: int = DEFAULT_CONTINUOUS_STEPS

    def __post_init__(self):
        if not (math.isfinite(self.lambda_mpl) and self.lambda_mpl >= 0):
            raise InvalidArgumentError("lambda_mpl must be finite and >= 0")
        if self.symmetry_steps < 1:
            raise InvalidArgumentError("symmetry_steps must be >= 1")


# --- mesh construction and I/O ---------------------------------------------

# two triangles per face, wound counter-clockwise seen from outside
_CUBOID_FACES = np.array([
    [0, 4, 6], [0, 6, 2],   # -x
    [1, 3, 7], [1, 7, 5],   # +x
    [0, 1, 5], [0, 5, 4],   # -y
    [2, 6, 7], [2, 7, 3],   # +y
    [0, 2, 3], [0, 3, 1],   # -z
    [4, 5, 7], [4, 7, 6],   # +z
])


def cuboid_mesh(size, name="cuboid"):
    return TriangleMesh(cuboid_corners(size), _CUBOID_FACES.copy(), name)


def unit_square_mesh():
    """The [0,1] x [0,1] square in the z = 0 plane as two triangles."""
    V = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
    return TriangleMesh(V, np.array([[0, 1, 2], [0, 2, 3]]), "unit_square")


def load_obj(path):
    """Read vertices and faces from an ASCII OBJ file.

    Only ``v`` and ``f`` records are used; polygon faces are fanned into
    triangles and ``v/vt/vn`` index forms are accepted.
    """
    verts, faces = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise InvalidMeshError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    verts.append([float(x) for x in parts[1:4]])
                except ValueError:
                    raise InvalidMeshError(f"{path}:{lineno}: bad vertex coordinate") from None
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise InvalidMeshError(f"{path}:{lineno}: face needs at least 3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    return TriangleMesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                        np.array(faces, dtype=np.int64).reshape(-1, 3), str(path))


def save_obj(path, mesh):
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write("v {!r} {!r} {!r}\n".format(*map(float, v)))
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def save_vertex_table(path, vs):
    np.savetxt(path, vs.points, fmt="%.17g", header="x y z")


def load_vertex_table(path, source=None):
    pts = np.loadtxt(path, ndmin=2)
    return SampledVertexSet(pts, source or str(path))


# --- Poisson-disk sampling by sample elimination ---------------------------

def sample_triangles(mesh, count, rng):
    """Area-weighted uniform points on the mesh surface.

    Returns (points, face_index).
    """
    areas = mesh.areas
    if areas.size == 0:
        raise InvalidMeshError("mesh has no non-degenerate faces")
    face = rng.choice(areas.size, size=count, p=areas / areas.sum())
    r1 = np.sqrt(rng.random(count))[:, None]
    r2 = rng.random(count)[:, None]
    tri = mesh.vertices[mesh.faces[face]]
    pts = (1.0 - r1) * tri[:, 0] + r1 * (1.0 - r2) * tri[:, 1] + r1 * r2 * tri[:, 2]
    return pts, face


def max_radius(total_area, v):
    """Densest-packing disk radius for ``v`` samples on a 2-manifold."""
    return math.sqrt(total_area / (2.0 * math.sqrt(3.0) * v))


def eliminate_samples(points, v, r_max):
    """Greedy weighted sample elimination.

    Every candidate carries the weight sum of (1 - d/(2 r_max))^8 over its
    neighbors closer than 2 r_max. The heaviest candidate (lowest index on
    ties) is removed and its neighbors' weights recomputed, until ``v``
    remain. Returns (kept indices in ascending order, elimination order).
    """
    n = points.shape[0]
    if v >= n:
        return np.arange(n), np.array([], dtype=np.int64)
    r2 = 2.0 * r_max
    tree = cKDTree(points)
    pairs = tree.query_pairs(r2, output_type="ndarray")
    neighbors = [[] for _ in range(n)]
    weights = np.zeros(n)
    if pairs.size:
        d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
        w = (1.0 - d / r2) ** WEIGHT_EXPONENT
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        for (i, j), wij in zip(pairs[order], w[order]):
            neighbors[i].append((j, wij))
            neighbors[j].append((i, wij))
        for i in range(n):
            neighbors[i].sort()
            weights[i] = sum(wij for _, wij in neighbors[i])

    alive = np.ones(n, dtype=bool)
    score = weights.copy()
    removed = []
    for _ in range(n - v):
        k = int(np.argmax(score))
        removed.append(k)
        alive[k] = False
        score[k] = -np.inf
        # re-summing rather than subtracting keeps exact ties exact, so the lowest index wins them
        for j, _ in neighbors[k]:
            if alive[j]:
                score[j] = sum(w for m, w in neighbors[j] if alive[m])
    return np.flatnonzero(alive), np.array(removed, dtype=np.int64)


def poisson_disk_sample(mesh, v, seed=0, candidate_factor=CANDIDATE_FACTOR):
    """``v`` well-spread surface points via sample elimination.

    ``candidate_factor * v`` area-weighted random candidates are drawn and
    then thinned by :func:`eliminate_samples`.
    """
    if v < 1:
        raise InvalidArgumentError("v must be >= 1")
    if mesh.faces.shape[0] == 0:
        raise InvalidMeshError("mesh has no non-degenerate faces")
    rng = np.random.default_rng(seed)
    cand, face = sample_triangles(mesh, candidate_factor * v, rng)
    keep, _ = eliminate_samples(cand, v, max_radius(mesh.total_area, v))
    return SampledVertexSet(cand[keep], mesh.name, face[keep])


def point_triangle_distance(p, a, b, c):
    """Euclidean distance from point p to triangle abc."""
    # Ericson, closest point on triangle, region tests
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return float(np.linalg.norm(p - a))
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return float(np.linalg.norm(p - b))
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        t = d1 / (d1 - d3)
        return float(np.linalg.norm(p - (a + t * ab)))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return float(np.linalg.norm(p - c))
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        t = d2 / (d2 - d6)
        return float(np.linalg.norm(p - (a + t * ac)))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(p - (b + t * (c - b))))
    denom = 1.0 / (va + vb + vc)
    closest = a + ab * (vb * denom) + ac * (vc * denom)
    return float(np.linalg.norm(p - closest))


def distance_to_mesh(p, mesh):
    tri = mesh.vertices[mesh.faces]
    return min(point_triangle_distance(p, t[0], t[1], t[2]) for t in tri)


# --- mesh-point loss -------------------------------------------------------

def _operands(m_gt, m_pred, r_gt):
    gt = m_gt.points if isinstance(m_gt, SampledVertexSet) else np.asarray(m_gt, dtype=np.float64)
    pred = np.asarray(m_pred, dtype=np.float64)
    if gt.ndim != 2 or gt.shape[1] != 3:
        raise InvalidArgumentError("ground-truth vertices must be (V, 3)")
    if pred.shape != gt.shape:
        raise InvalidArgumentError(f"vertex count mismatch: gt {gt.shape}, pred {pred.shape}")
    R = check_rotation(r_gt, name="r_gt")
    return gt, pred, R


def mpl_loss(m_gt, m_pred, r_gt):
    gt, pred, R = _operands(m_gt, m_pred, r_gt)
    diff = gt @ R.T - pred
    return float(np.sum(diff * diff) / gt.shape[0])


def mpl_gradient(m_gt, m_pred, r_gt):
    """Derivative of :func:`mpl_loss` with respect to the predicted points."""
    gt, pred, R = _operands(m_gt, m_pred, r_gt)
    return (2.0 / gt.shape[0]) * (pred - gt @ R.T)


def symmetric_mpl_loss(m_gt, m_pred, r_gt, sym, cfg=LossConfig()):
    """Minimum of :func:`mpl_loss` over R @ S for sampled symmetry rotations S."""
    if sym.kind == NONE:
        return mpl_loss(m_gt, m_pred, r_gt)
    gt, pred, R = _operands(m_gt, m_pred, r_gt)
    best = mpl_loss(gt, pred, R)
    others = sym.rotations(cfg.symmetry_steps)[1:]
    if not others:
        return best
    diff = np.einsum("gij,vj->gvi", R @ np.array(others), gt) - pred
    return min(best, float(np.min(np.einsum("gvi,gvi->g", diff, diff))) / gt.shape[0])


def total_loss(l_base, l_mpl, cfg=LossConfig()):
    for name, val in (("l_base", l_base), ("l_mpl", l_mpl)):
        if not math.isfinite(val) or val < 0:
            raise InvalidArgumentError(f"{name} must be finite and >= 0, got {val}")
    return l_base + cfg.lambda_mpl * l_mpl
