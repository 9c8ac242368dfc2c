"""
Procedural low-poly right hand.

Palm is an ellipsoid, every phalanx a capsule; the pieces overlap and are
kept as separate closed shells (inside tests use a non-zero winding rule, so
the union behaves as one solid). Rest frame: fingers along +y, palm facing
-z, thumb on the -x side, wrist joint at the origin.
"""

import logging
from functools import lru_cache

import numpy as np

from ..core.mesh import concatenate
from ..core.primitives import capsule, ellipsoid
from .rig import (
    BETA_SCALE,
    N_BETA,
    N_JOINTS,
    N_PARTS,
    N_TIPS,
    PARENTS,
    HandRig,
)

logger = logging.getLogger(__name__)

PALM_CENTER = np.array([0.0, 0.045, 0.0])
PALM_RADII = np.array([0.045, 0.05, 0.014])
# palm vertices with x below this belong to the radial (thumb-side) palm part
PALM_SPLIT_X = -0.004
RADIAL_PALM_PART = 16
ULNAR_PALM_PART = 17
# capsule vertices closer than this fraction to their proximal joint blend with the parent bone
SKIN_BLEND = 0.2

# name, MCP position, bone direction, phalanx lengths, phalanx radii, palmar direction
FINGERS = (
    ("index", (-0.026, 0.088, 0.0), (-0.08, 1.0, 0.0), (0.040, 0.025, 0.021), (0.0095, 0.0085, 0.0078), (0.0, 0.0, -1.0)),
    ("middle", (-0.008, 0.092, 0.0), (0.0, 1.0, 0.0), (0.044, 0.028, 0.023), (0.0098, 0.0088, 0.0080), (0.0, 0.0, -1.0)),
    ("pinky", (0.030, 0.080, 0.0), (0.15, 1.0, 0.0), (0.032, 0.020, 0.019), (0.0080, 0.0072, 0.0068), (0.0, 0.0, -1.0)),
    ("ring", (0.011, 0.088, 0.0), (0.06, 1.0, 0.0), (0.041, 0.027, 0.022), (0.0090, 0.0082, 0.0075), (0.0, 0.0, -1.0)),
    ("thumb", (-0.030, 0.022, -0.008), (-0.75, 0.6, -0.28), (0.038, 0.032, 0.027), (0.0115, 0.0105, 0.0095), (0.6, 0.3, -0.75)),
)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _nearest_face(vertices, faces, parts, part: int, target) -> int:
    members = np.all(parts[faces] == part, axis=1)
    candidates = np.nonzero(members)[0]
    centroids = vertices[faces[candidates]].mean(axis=1)
    return int(candidates[np.argmin(np.linalg.norm(centroids - target, axis=1))])


def build_default_rig() -> HandRig:
    """Generate the default rig (deterministic, no randomness)."""
    joints_rest = np.zeros((N_JOINTS, 3))
    joints_beta = np.zeros((N_JOINTS, 3, N_BETA))
    tips_rest = np.zeros((N_TIPS, 3))
    tips_beta = np.zeros((N_TIPS, 3, N_BETA))
    twist = np.zeros((N_JOINTS, 3))
    splay = np.zeros((N_JOINTS, 3))
    twist[0] = (0.0, 1.0, 0.0)
    splay[0] = (0.0, 0.0, 1.0)

    palm = ellipsoid(PALM_RADII, PALM_CENTER, subdivisions=2)
    meshes = [palm]
    vertex_beta = [np.zeros((palm.n_vertices, 3, N_BETA))]
    weights = [np.zeros((palm.n_vertices, N_JOINTS))]
    weights[0][:, 0] = 1.0
    parts = [np.where(palm.vertices[:, 0] < PALM_SPLIT_X, RADIAL_PALM_PART, ULNAR_PALM_PART)]
    anchor_targets = {
        RADIAL_PALM_PART: PALM_CENTER + (-0.022, 0.005, -PALM_RADII[2]),
        ULNAR_PALM_PART: PALM_CENTER + (0.022, 0.005, -PALM_RADII[2]),
    }

    for f, (_, mcp, direction, lengths, radii, palmar) in enumerate(FINGERS):
        d = _unit(direction)
        pad = np.asarray(palmar, dtype=np.float64)
        pad = _unit(pad - pad.dot(d) * d)
        length_col, width_col = f, N_TIPS + f
        cumulative = np.concatenate([[0.0], np.cumsum(lengths)])

        for i in range(3):
            k = 1 + 3 * f + i
            start = np.asarray(mcp) + cumulative[i] * d
            end = np.asarray(mcp) + cumulative[i + 1] * d
            joints_rest[k] = start
            joints_beta[k, :, length_col] = BETA_SCALE * cumulative[i] * d
            twist[k] = d
            splay[k] = pad

            shell, t, offset = capsule(start, end, radii[i])
            meshes.append(shell)
            dv = np.zeros((shell.n_vertices, 3, N_BETA))
            dv[:, :, length_col] = BETA_SCALE * (cumulative[i] + t[:, None] * lengths[i]) * d
            dv[:, :, width_col] = BETA_SCALE * offset
            vertex_beta.append(dv)

            w = np.zeros((shell.n_vertices, N_JOINTS))
            to_parent = np.where(t < SKIN_BLEND, 0.5 * (1.0 - t / SKIN_BLEND), 0.0)
            w[:, PARENTS[k]] = to_parent
            w[:, k] = 1.0 - to_parent
            weights.append(w)
            parts.append(np.full(shell.n_vertices, k))

            along = 0.6 if i == 2 else 0.5
            anchor_targets[k] = start + along * lengths[i] * d + radii[i] * pad

        tips_rest[f] = np.asarray(mcp) + cumulative[3] * d
        tips_beta[f, :, length_col] = BETA_SCALE * cumulative[3] * d

    template = concatenate(meshes)
    vertices, faces = template.vertices, template.faces
    parts = np.concatenate(parts)

    anchor_faces = np.array(
        [_nearest_face(vertices, faces, parts, part, anchor_targets[part]) for part in range(1, N_PARTS + 1)]
    )
    rig = HandRig(
        parents=PARENTS,
        joints_rest=joints_rest,
        joints_beta=joints_beta,
        tips_rest=tips_rest,
        tips_beta=tips_beta,
        template_vertices=vertices,
        template_beta=np.concatenate(vertex_beta),
        faces=faces,
        parts=parts,
        skin_weights=np.concatenate(weights),
        anchor_faces=anchor_faces,
        anchor_bary=np.full((N_PARTS, 3), 1.0 / 3.0),
        twist_axes=twist,
        splay_axes=splay,
    )
    logger.debug(f"Built default rig: {rig.n_vertices} vertices, {len(faces)} faces")
    return rig


@lru_cache(maxsize=1)
def default_rig() -> HandRig:
    """Shared immutable default rig."""
    return build_default_rig()
