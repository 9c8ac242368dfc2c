"""
Lattice inside/outside classification and exact point-to-mesh distances.

Inside tests cast axis-aligned rays through every lattice column and
accumulate signed face crossings (a per-ray winding number). Three axes are
evaluated and a node is inside when at least two of them report a non-zero
winding, which tolerates rays grazing edges or vertices.
"""

import itertools

import numpy as np
from scipy.spatial import cKDTree

from .mesh import TriMesh

# (u, v) axes spanning the plane orthogonal to each ray axis, right-handed
_PLANE_AXES = {0: (1, 2), 1: (2, 0), 2: (0, 1)}
_BARY_EPS = 1e-12


def _enumerate_columns(lo: np.ndarray, hi: np.ndarray, origin, spacing, dims):
    """Yield (triangle index, column i, column j) for columns inside each 2D bbox."""
    i_lo = np.clip(np.ceil((lo[:, 0] - origin[0]) / spacing - 1e-9), 0, dims[0] - 1).astype(np.int64)
    i_hi = np.clip(np.floor((hi[:, 0] - origin[0]) / spacing + 1e-9), -1, dims[0] - 1).astype(np.int64)
    j_lo = np.clip(np.ceil((lo[:, 1] - origin[1]) / spacing - 1e-9), 0, dims[1] - 1).astype(np.int64)
    j_hi = np.clip(np.floor((hi[:, 1] - origin[1]) / spacing + 1e-9), -1, dims[1] - 1).astype(np.int64)

    ni = np.maximum(i_hi - i_lo + 1, 0)
    nj = np.maximum(j_hi - j_lo + 1, 0)
    counts = ni * nj
    total = int(counts.sum())
    if total == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty

    tri = np.repeat(np.arange(len(counts)), counts)
    local = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    cols = nj[tri]
    return tri, i_lo[tri] + local // cols, j_lo[tri] + local % cols


def lattice_winding(
    mesh: TriMesh,
    origin: np.ndarray,
    spacing: float,
    dims: tuple[int, int, int],
    axis: int,
) -> np.ndarray:
    """Winding number of every lattice node along rays parallel to ``axis``."""
    u, v = _PLANE_AXES[axis]
    tris = mesh.vertices[mesh.faces]  # (F, 3, 3)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]

    normal_axis = np.cross(b - a, c - a)[:, axis]
    keep = np.abs(normal_axis) > 1e-18
    a, b, c, normal_axis = a[keep], b[keep], c[keep], normal_axis[keep]

    plane = np.stack([tris[keep][:, :, u], tris[keep][:, :, v]], axis=-1)  # (F, 3, 2)
    tri, ii, jj = _enumerate_columns(
        plane.min(axis=1),
        plane.max(axis=1),
        (origin[u], origin[v]),
        spacing,
        (dims[u], dims[v]),
    )

    shape = list(dims)
    shape[axis] += 1
    crossings = np.zeros(shape, dtype=np.int32)
    if len(tri):
        qu = origin[u] + ii * spacing
        qv = origin[v] + jj * spacing
        e0 = plane[tri, 1] - plane[tri, 0]
        e1 = plane[tri, 2] - plane[tri, 0]
        du = qu - plane[tri, 0, 0]
        dv = qv - plane[tri, 0, 1]
        det = e0[:, 0] * e1[:, 1] - e1[:, 0] * e0[:, 1]
        w1 = (du * e1[:, 1] - e1[:, 0] * dv) / det
        w2 = (e0[:, 0] * dv - du * e0[:, 1]) / det
        w0 = 1.0 - w1 - w2
        hit = (w0 >= -_BARY_EPS) & (w1 >= -_BARY_EPS) & (w2 >= -_BARY_EPS)

        tri, ii, jj = tri[hit], ii[hit], jj[hit]
        w0, w1, w2 = w0[hit], w1[hit], w2[hit]
        s = w0 * a[tri, axis] + w1 * b[tri, axis] + w2 * c[tri, axis]
        k0 = np.floor((s - origin[axis]) / spacing).astype(np.int64) + 1
        k0 = np.clip(k0, 0, dims[axis])
        contribution = -np.sign(normal_axis[tri]).astype(np.int32)

        index = [None, None, None]
        index[axis], index[u], index[v] = k0, ii, jj
        np.add.at(crossings, tuple(index), contribution)

    winding = np.cumsum(crossings, axis=axis)
    return np.take(winding, np.arange(dims[axis]), axis=axis)


def lattice_inside(
    mesh: TriMesh,
    origin: np.ndarray,
    spacing: float,
    dims: tuple[int, int, int],
) -> np.ndarray:
    """Boolean inside mask of lattice nodes, majority vote over the three ray axes."""
    origin = np.asarray(origin, dtype=np.float64)
    votes = np.zeros(tuple(dims), dtype=np.int8)
    for axis in range(3):
        votes += lattice_winding(mesh, origin, spacing, dims, axis) != 0
    return votes >= 2


# ============================================================================
# Exact point-triangle distance
# ============================================================================


def _dot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", x, y)


def closest_points_on_triangles(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """Closest point on triangle (a, b, c) to p, row-wise (Voronoi-region walk)."""
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = _dot(ab, ap), _dot(ac, ap)
    bp = p - b
    d3, d4 = _dot(ab, bp), _dot(ac, bp)
    cp = p - c
    d5, d6 = _dot(ab, cp), _dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    out = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    with np.errstate(divide="ignore", invalid="ignore"):
        m = (d1 <= 0) & (d2 <= 0)
        out[m] = a[m]
        done |= m

        m = ~done & (d3 >= 0) & (d4 <= d3)
        out[m] = b[m]
        done |= m

        m = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t = d1[m] / (d1[m] - d3[m])
        out[m] = a[m] + t[:, None] * ab[m]
        done |= m

        m = ~done & (d6 >= 0) & (d5 <= d6)
        out[m] = c[m]
        done |= m

        m = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        t = d2[m] / (d2[m] - d6[m])
        out[m] = a[m] + t[:, None] * ac[m]
        done |= m

        m = ~done & (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        t = (d4[m] - d3[m]) / ((d4[m] - d3[m]) + (d5[m] - d6[m]))
        out[m] = b[m] + t[:, None] * (c[m] - b[m])
        done |= m

        m = ~done
        denom = 1.0 / (va[m] + vb[m] + vc[m])
        out[m] = a[m] + ab[m] * (vb[m] * denom)[:, None] + ac[m] * (vc[m] * denom)[:, None]

    return out


def point_mesh_distance(points: np.ndarray, mesh: TriMesh, chunk: int = 8192) -> np.ndarray:
    """Exact unsigned distance from each point to the mesh surface.

    The nearest vertex bounds the answer from above; only triangles whose
    bounding sphere can beat that bound are evaluated exactly.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    tris = mesh.vertices[mesh.faces]
    centroids = tris.mean(axis=1)
    radii = np.linalg.norm(tris - centroids[:, None, :], axis=2).max(axis=1)
    r_max = float(radii.max())

    used = np.unique(mesh.faces)
    vertex_tree = cKDTree(mesh.vertices[used])
    centroid_tree = cKDTree(centroids)

    out = np.empty(len(points), dtype=np.float64)
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        upper, _ = vertex_tree.query(block)
        candidates = centroid_tree.query_ball_point(block, r=upper + r_max + 1e-12)

        counts = np.fromiter((len(c) for c in candidates), dtype=np.int64, count=len(block))
        tri_idx = np.fromiter(
            itertools.chain.from_iterable(candidates), dtype=np.int64, count=int(counts.sum())
        )
        pt_idx = np.repeat(np.arange(len(block)), counts)

        near = np.linalg.norm(block[pt_idx] - centroids[tri_idx], axis=1) <= upper[pt_idx] + radii[tri_idx] + 1e-12
        pt_idx, tri_idx = pt_idx[near], tri_idx[near]

        closest = closest_points_on_triangles(
            block[pt_idx], tris[tri_idx, 0], tris[tri_idx, 1], tris[tri_idx, 2]
        )
        dist = np.linalg.norm(block[pt_idx] - closest, axis=1)

        best = upper.copy()
        np.minimum.at(best, pt_idx, dist)
        out[start : start + len(block)] = best
    return out
