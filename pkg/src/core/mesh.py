"""
Triangle mesh value type and mesh utilities.
"""

from dataclasses import dataclass

import numpy as np
import trimesh
from scipy.spatial import cKDTree

from ..exceptions import ValidationError


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangle mesh in meters.

    ``labels`` holds one integer per vertex; 0 means "no part".
    """

    vertices: np.ndarray
    faces: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)

        if not np.all(np.isfinite(vertices)):
            raise ValidationError("Mesh has non-finite vertex coordinates")
        if faces.size:
            if faces.min() < 0 or faces.max() >= len(vertices):
                raise ValidationError(
                    f"Face index out of range for {len(vertices)} vertices"
                )
            repeated = (
                (faces[:, 0] == faces[:, 1])
                | (faces[:, 1] == faces[:, 2])
                | (faces[:, 0] == faces[:, 2])
            )
            if repeated.any():
                raise ValidationError(
                    f"{int(repeated.sum())} faces reference the same vertex twice"
                )

        object.__setattr__(self, "vertices", _readonly(vertices))
        object.__setattr__(self, "faces", _readonly(faces))

        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64).reshape(-1)
            if len(labels) != len(vertices):
                raise ValidationError(
                    f"Label count {len(labels)} != vertex count {len(vertices)}"
                )
            object.__setattr__(self, "labels", _readonly(labels))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def centroid(self) -> np.ndarray:
        """Vertex centroid."""
        return self.vertices.mean(axis=0)

    def transformed(self, rotation: np.ndarray | None = None, translation=None) -> "TriMesh":
        vertices = self.vertices
        if rotation is not None:
            vertices = vertices @ np.asarray(rotation, dtype=np.float64).T
        if translation is not None:
            vertices = vertices + np.asarray(translation, dtype=np.float64)
        return TriMesh(vertices, self.faces, self.labels)

    def translated(self, offset) -> "TriMesh":
        return self.transformed(translation=offset)

    def with_labels(self, labels: np.ndarray | None) -> "TriMesh":
        return TriMesh(self.vertices, self.faces, labels)

    def to_trimesh(self) -> trimesh.Trimesh:
        return trimesh.Trimesh(
            vertices=np.array(self.vertices),
            faces=np.array(self.faces),
            process=False,
        )

    @classmethod
    def from_trimesh(cls, mesh: trimesh.Trimesh, labels=None) -> "TriMesh":
        return cls(np.asarray(mesh.vertices), np.asarray(mesh.faces), labels)


def concatenate(meshes: list[TriMesh]) -> TriMesh:
    """Stack meshes into one (faces re-indexed, labels kept if all have them)."""
    vertices, faces, labels = [], [], []
    offset = 0
    for mesh in meshes:
        vertices.append(mesh.vertices)
        faces.append(mesh.faces + offset)
        labels.append(mesh.labels)
        offset += mesh.n_vertices
    merged_labels = None
    if all(lab is not None for lab in labels):
        merged_labels = np.concatenate(labels)
    return TriMesh(np.concatenate(vertices), np.concatenate(faces), merged_labels)


def edge_manifold_defects(faces: np.ndarray) -> list[tuple[int, int]]:
    """Undirected edges not shared by exactly two faces."""
    faces = np.asarray(faces, dtype=np.int64)
    if len(faces) == 0:
        return []
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges.sort(axis=1)
    unique, counts = np.unique(edges, axis=0, return_counts=True)
    bad = unique[counts != 2]
    return [(int(a), int(b)) for a, b in bad]


def is_watertight(mesh: TriMesh) -> bool:
    return mesh.n_faces > 0 and not edge_manifold_defects(mesh.faces)


def euler_characteristic(mesh: TriMesh) -> int:
    edges = np.concatenate(
        [mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]]
    )
    edges.sort(axis=1)
    n_edges = len(np.unique(edges, axis=0))
    referenced = len(np.unique(mesh.faces))
    return referenced - n_edges + mesh.n_faces


def mean_edge_length(mesh: TriMesh) -> float:
    v = mesh.vertices
    f = mesh.faces
    lengths = np.concatenate(
        [
            np.linalg.norm(v[f[:, 1]] - v[f[:, 0]], axis=1),
            np.linalg.norm(v[f[:, 2]] - v[f[:, 1]], axis=1),
            np.linalg.norm(v[f[:, 0]] - v[f[:, 2]], axis=1),
        ]
    )
    return float(lengths.mean())


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point sets."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d_ab, _ = cKDTree(b).query(a)
    d_ba, _ = cKDTree(a).query(b)
    return float(max(d_ab.max(), d_ba.max()))


def drop_unreferenced(vertices: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    used = np.unique(faces)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return vertices[used], remap[faces]


def mass_properties(mesh: TriMesh, density: float) -> tuple[float, np.ndarray, np.ndarray]:
    """(mass kg, center of mass, inertia tensor about the center of mass) of a closed mesh."""
    tm = mesh.to_trimesh()
    if tm.volume < 0:
        tm.invert()
    tm.density = density
    return (
        float(tm.mass),
        np.asarray(tm.center_mass, dtype=np.float64),
        np.asarray(tm.moment_inertia, dtype=np.float64),
    )
