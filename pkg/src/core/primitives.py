"""
Closed primitive meshes and analytic signed distances used by fixtures,
the procedural hand template and tests.
"""

import numpy as np
import trimesh

from .mesh import TriMesh


def icosphere(radius: float = 1.0, subdivisions: int = 3, center=(0.0, 0.0, 0.0)) -> TriMesh:
    mesh = trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius)
    return TriMesh.from_trimesh(mesh).translated(center)


def box(extents=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriMesh:
    mesh = trimesh.creation.box(extents=extents)
    return TriMesh.from_trimesh(mesh).translated(center)


def superellipsoid(
    axes=(0.04, 0.04, 0.05),
    exponent: float = 4.0,
    subdivisions: int = 3,
    center=(0.0, 0.0, 0.0),
) -> TriMesh:
    """Star-shaped superellipsoid ``sum |x_i / a_i|^p = 1`` built by radially
    projecting a unit icosphere onto the surface."""
    unit = trimesh.creation.icosphere(subdivisions=subdivisions, radius=1.0)
    d = np.asarray(unit.vertices, dtype=np.float64)
    axes = np.asarray(axes, dtype=np.float64)
    scale = np.sum(np.abs(d / axes) ** exponent, axis=1) ** (-1.0 / exponent)
    return TriMesh(d * scale[:, None] + np.asarray(center), np.asarray(unit.faces))


def capsule(
    start,
    end,
    radius: float,
    n_around: int = 8,
    n_body: int = 3,
    n_cap: int = 1,
) -> tuple[TriMesh, np.ndarray, np.ndarray]:
    """Closed capsule around the segment start -> end.

    Returns:
        (mesh, t, offset): ``t`` is each vertex's fraction along the segment
        (clamped to [0, 1]) and ``offset`` its displacement from the point
        ``start + t * (end - start)``, so vertices = start + t*(end-start) + offset.
    """
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    axis = end - start
    length = float(np.linalg.norm(axis))
    w = axis / length
    helper = np.array([0.0, 0.0, 1.0]) if abs(w[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(w, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(w, e1)

    # rings: (t along segment, axial offset beyond the segment, ring radius)
    rings = []
    for k in range(n_cap, 0, -1):
        phi = np.pi / 2 * k / (n_cap + 1)
        rings.append((0.0, -radius * np.sin(phi), radius * np.cos(phi)))
    for k in range(n_body):
        rings.append((k / (n_body - 1), 0.0, radius))
    for k in range(1, n_cap + 1):
        phi = np.pi / 2 * k / (n_cap + 1)
        rings.append((1.0, radius * np.sin(phi), radius * np.cos(phi)))

    angles = 2 * np.pi * np.arange(n_around) / n_around
    ring_dirs = np.cos(angles)[:, None] * e1 + np.sin(angles)[:, None] * e2

    ts, offsets = [0.0], [-radius * w]
    for t, axial, r in rings:
        for d in ring_dirs:
            ts.append(t)
            offsets.append(axial * w + r * d)
    ts.append(1.0)
    offsets.append(radius * w)

    ts = np.asarray(ts)
    offsets = np.asarray(offsets)
    vertices = start + ts[:, None] * axis + offsets

    faces = []
    n_rings = len(rings)
    tip = len(ts) - 1

    def ring_index(r: int, k: int) -> int:
        return 1 + r * n_around + (k % n_around)

    for k in range(n_around):
        faces.append((0, ring_index(0, k + 1), ring_index(0, k)))
    for r in range(n_rings - 1):
        for k in range(n_around):
            a, b = ring_index(r, k), ring_index(r, k + 1)
            c, d = ring_index(r + 1, k), ring_index(r + 1, k + 1)
            faces.append((a, b, d))
            faces.append((a, d, c))
    for k in range(n_around):
        faces.append((tip, ring_index(n_rings - 1, k), ring_index(n_rings - 1, k + 1)))

    return TriMesh(vertices, np.asarray(faces)), ts, offsets


def ellipsoid(radii, center=(0.0, 0.0, 0.0), subdivisions: int = 2) -> TriMesh:
    unit = trimesh.creation.icosphere(subdivisions=subdivisions, radius=1.0)
    v = np.asarray(unit.vertices) * np.asarray(radii, dtype=np.float64) + np.asarray(center)
    return TriMesh(v, np.asarray(unit.faces))


# ============================================================================
# Analytic signed distances
# ============================================================================


def sphere_sdf(points, radius: float, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return np.linalg.norm(points - np.asarray(center), axis=-1) - radius


def box_sdf(points, half_extents, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    q = np.abs(np.asarray(points, dtype=np.float64) - np.asarray(center)) - np.asarray(half_extents)
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(q.max(axis=-1), 0.0)
    return outside + inside
