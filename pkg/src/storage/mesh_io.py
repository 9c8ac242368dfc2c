"""
Mesh I/O

OBJ (ASCII) and PLY (binary little-endian) through trimesh. Per-vertex part
labels travel in a ``<mesh>.labels.json`` sidecar since neither format has a
portable slot for them.
"""

import json
import logging
from pathlib import Path

import numpy as np
import trimesh

from ..core.mesh import TriMesh
from ..exceptions import ValidationError

logger = logging.getLogger(__name__)

SUPPORTED = {".obj": "obj", ".ply": "ply"}


def _labels_path(path: Path) -> Path:
    return path.with_name(path.name + ".labels.json")


def load_mesh(path: str | Path) -> TriMesh:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Mesh file not found: {path}")
    if path.suffix.lower() not in SUPPORTED:
        raise ValidationError(f"Unsupported mesh format '{path.suffix}', expected .obj or .ply")

    try:
        loaded = trimesh.load(path, process=False, force="mesh")
    except Exception as e:
        raise ValidationError(f"Cannot parse mesh {path}: {e}") from e
    if not isinstance(loaded, trimesh.Trimesh) or len(loaded.faces) == 0:
        raise ValidationError(f"Mesh {path} has no triangles")

    labels = None
    sidecar = _labels_path(path)
    if sidecar.is_file():
        labels = np.asarray(json.loads(sidecar.read_text()), dtype=np.int64)
    mesh = TriMesh.from_trimesh(loaded, labels)
    logger.debug(f"Loaded {path.name}: {mesh.n_vertices} vertices, {mesh.n_faces} faces")
    return mesh


def save_mesh(mesh: TriMesh, path: str | Path) -> Path:
    path = Path(path)
    file_type = SUPPORTED.get(path.suffix.lower())
    if file_type is None:
        raise ValidationError(f"Unsupported mesh format '{path.suffix}', expected .obj or .ply")
    path.parent.mkdir(parents=True, exist_ok=True)

    tm = mesh.to_trimesh()
    if file_type == "ply":
        data = tm.export(file_type="ply", encoding="binary")
    else:
        data = tm.export(file_type="obj", include_normals=False, include_texture=False)
    mode = "wb" if isinstance(data, bytes) else "w"
    with path.open(mode) as fh:
        fh.write(data)

    if mesh.labels is not None:
        _labels_path(path).write_text(json.dumps(mesh.labels.tolist()))
    return path


def save_colored_ply(mesh: TriMesh, colors: np.ndarray, path: str | Path) -> Path:
    """Binary PLY with per-vertex RGBA (uint8) colors."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tm = mesh.to_trimesh()
    tm.visual.vertex_colors = np.asarray(colors, dtype=np.uint8)
    path.write_bytes(tm.export(file_type="ply", encoding="binary"))
    return path
