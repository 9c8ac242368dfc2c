"""
Run artifacts: JSON documents (pydantic models) and CSV tables.
"""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, TypeVar

import numpy as np
from pydantic import BaseModel, TypeAdapter
from pydantic import ValidationError as PydanticValidationError

from ..exceptions import ValidationError
from ..hand.rig import JOINT_NAMES, KEYPOINT_NAMES, N_PARTS, TIP_JOINTS, HandParams, HandRig
from ..schemas import (
    AuditRecordSpec,
    ContactEntry,
    ContactFieldModel,
    HandParamsModel,
    PathManifest,
    RigModel,
    SequenceModel,
    TransferJobSpec,
)
from ..schemas.rig import AnchorModel, AxesModel, BoneModel, TemplateModel, TipModel
from ..services.contact import ContactnessField
from ..services.mokap import CameraView, FrameSequence, MultiViewObservation
from . import mesh_io

if TYPE_CHECKING:
    from ..services.pipeline import TransferJob, TransferResult
    from ..services.shape_path import LandmarkPath

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)

TRACE_HEADER = ["iteration", "E_consis", "E_anat", "E_intp", "total"]
QUALITY_FIELDS = ["penet_depth", "intersect_volume", "sim_disp_mean", "sim_disp_std"]


# ============================================================================
# Generic JSON / CSV
# ============================================================================


def read_model(path: str | Path, model: type[M]) -> M:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"File not found: {path}")
    try:
        return model.model_validate_json(path.read_text())
    except PydanticValidationError as e:
        raise ValidationError(f"Invalid {model.__name__} in {path}: {e}") from e


def write_model(model: BaseModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2))
    return path


def write_csv(rows: list[dict[str, Any]], path: str | Path, fieldnames: list[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fieldnames is None:
        fieldnames = []
        for row in rows:
            fieldnames.extend(k for k in row if k not in fieldnames)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, restval="")
        writer.writeheader()
        writer.writerows(rows)
    return path


# ============================================================================
# Hand parameters and contacts
# ============================================================================


def read_hand_params(path: str | Path) -> HandParams:
    return read_model(path, HandParamsModel).to_params()


def write_hand_params(params: HandParams, path: str | Path) -> Path:
    return write_model(HandParamsModel.from_params(params), path)


def contacts_to_model(field: ContactnessField) -> ContactFieldModel:
    return ContactFieldModel(
        vertex_count=field.vertex_count,
        entries=[ContactEntry(v=v, part=p, gamma=g, anchor=a) for v, p, g, a in field.entries()],
    )


def contacts_from_model(model: ContactFieldModel) -> ContactnessField:
    n = model.vertex_count
    part = np.zeros(n, dtype=np.int64)
    gamma = np.zeros(n)
    anchor = np.zeros(n, dtype=np.int64)
    for entry in model.entries:
        if entry.v >= n:
            raise ValidationError(f"Contact entry vertex {entry.v} out of range for {n} vertices")
        part[entry.v], gamma[entry.v], anchor[entry.v] = entry.part, entry.gamma, entry.anchor
    return ContactnessField(part, gamma, anchor)


def read_contacts(path: str | Path) -> ContactnessField:
    return contacts_from_model(read_model(path, ContactFieldModel))


def write_contacts(field: ContactnessField, path: str | Path) -> Path:
    return write_model(contacts_to_model(field), path)


def contact_colors(field: ContactnessField) -> np.ndarray:
    """RGBA per vertex: one hue per part, brightness by contactness, grey when unlabeled."""
    colors = np.tile(np.array([160, 160, 160, 255], dtype=np.float64), (field.vertex_count, 1))
    labeled = field.labeled
    if len(labeled):
        hue = (field.part[labeled] - 1) / N_PARTS
        phase = 2 * np.pi * (hue[:, None] + np.array([0.0, 1.0 / 3.0, 2.0 / 3.0]))
        rgb = 0.5 + 0.5 * np.cos(phase)
        shade = 0.3 + 0.7 * field.gamma[labeled][:, None]
        colors[labeled, :3] = 255.0 * rgb * shade
    return colors.round().astype(np.uint8)


# ============================================================================
# Rig
# ============================================================================


def rig_to_model(rig: HandRig) -> RigModel:
    return RigModel(
        bones=[
            BoneModel(
                joint=j,
                name=JOINT_NAMES[j],
                parent=int(rig.parents[j]),
                rest=rig.joints_rest[j].tolist(),
                rest_beta=rig.joints_beta[j].tolist(),
            )
            for j in range(len(rig.parents))
        ],
        tips=[
            TipModel(
                joint=TIP_JOINTS[f],
                name=KEYPOINT_NAMES[len(JOINT_NAMES) + f],
                rest=rig.tips_rest[f].tolist(),
                rest_beta=rig.tips_beta[f].tolist(),
            )
            for f in range(len(TIP_JOINTS))
        ],
        template=TemplateModel(
            vertices=rig.template_vertices.tolist(),
            vertices_beta=rig.template_beta.tolist(),
            faces=rig.faces.tolist(),
            parts=rig.parts.tolist(),
        ),
        skin_weights=rig.skin_weights.tolist(),
        anchors=[
            AnchorModel(part=i + 1, face=int(rig.anchor_faces[i]), bary=rig.anchor_bary[i].tolist())
            for i in range(N_PARTS)
        ],
        axes=[
            AxesModel(joint=j, twist=rig.twist_axes[j].tolist(), splay=rig.splay_axes[j].tolist())
            for j in range(len(rig.parents))
        ],
    )


def rig_from_model(model: RigModel) -> HandRig:
    anchors = sorted(model.anchors, key=lambda a: a.part)
    return HandRig(
        parents=np.array([b.parent for b in model.bones]),
        joints_rest=np.array([b.rest for b in model.bones]),
        joints_beta=np.array([b.rest_beta for b in model.bones]),
        tips_rest=np.array([t.rest for t in model.tips]),
        tips_beta=np.array([t.rest_beta for t in model.tips]),
        template_vertices=np.array(model.template.vertices),
        template_beta=np.array(model.template.vertices_beta),
        faces=np.array(model.template.faces),
        parts=np.array(model.template.parts),
        skin_weights=np.array(model.skin_weights),
        anchor_faces=np.array([a.face for a in anchors]),
        anchor_bary=np.array([a.bary for a in anchors]),
        twist_axes=np.array([a.twist for a in model.axes]),
        splay_axes=np.array([a.splay for a in model.axes]),
    )


def rig_checksum(rig: HandRig) -> str:
    """SHA-256 of the canonical (sorted-key) rig JSON."""
    canonical = json.dumps(rig_to_model(rig).model_dump(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_rig(rig: HandRig, path: str | Path) -> str:
    write_model(rig_to_model(rig), path)
    return rig_checksum(rig)


def read_rig(path: str | Path) -> HandRig:
    return rig_from_model(read_model(path, RigModel))


# ============================================================================
# Manifests and observations
# ============================================================================


def _read_list(path: str | Path, item: type[M]) -> list[M]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Manifest not found: {path}")
    try:
        return TypeAdapter(list[item]).validate_json(path.read_text())
    except PydanticValidationError as e:
        raise ValidationError(f"Invalid manifest {path}: {e}") from e


def read_manifest(path: str | Path) -> list[TransferJobSpec]:
    return _read_list(path, TransferJobSpec)


def read_audit_manifest(path: str | Path) -> list[AuditRecordSpec]:
    return _read_list(path, AuditRecordSpec)


def sequence_from_model(model: SequenceModel) -> FrameSequence:
    views = tuple(CameraView(np.array(c.K), np.array(c.R), np.array(c.t), c.w, c.h) for c in model.cameras)
    frames = [MultiViewObservation(views, np.array(f.kp), np.array(f.w)) for f in model.frames]
    return FrameSequence(frames, np.array([f.t for f in model.frames]))


def read_sequence(path: str | Path) -> FrameSequence:
    return sequence_from_model(read_model(path, SequenceModel))


def write_fits(fits: list[HandParams], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    adapter = TypeAdapter(list[HandParamsModel])
    path.write_bytes(adapter.dump_json([HandParamsModel.from_params(p) for p in fits], indent=2))
    return path


def write_residuals_csv(residuals: list[np.ndarray], path: str | Path) -> Path:
    rows = [
        {"frame": k, "joint": j, "view": v, "pixels": float(res[v, j])}
        for k, res in enumerate(residuals)
        for v in range(res.shape[0])
        for j in range(res.shape[1])
    ]
    return write_csv(rows, path, ["frame", "joint", "view", "pixels"])


# ============================================================================
# Pipeline artifacts
# ============================================================================


def write_trace_csv(trace: np.ndarray, path: str | Path) -> Path:
    rows = [dict(zip(TRACE_HEADER, [i, *map(float, row)])) for i, row in enumerate(trace)]
    return write_csv(rows, path, TRACE_HEADER)


def write_path_artifacts(path: "LandmarkPath", out_dir: str | Path) -> Path:
    """Numbered landmark OBJ files plus ``path.json``."""
    out_dir = Path(out_dir)
    files = []
    for k, landmark in enumerate(path.landmarks):
        name = f"landmark_{k:02d}.obj"
        mesh_io.save_mesh(landmark.mesh, out_dir / name)
        files.append(name)
    manifest = PathManifest(n_itpl=path.n_itpl, t_values=path.t_values, files=files)
    return write_model(manifest, out_dir / "path.json")


def write_summary_csv(rows: list[dict[str, Any]], path: str | Path) -> Path:
    return write_csv(rows, path)


def write_transfer_artifacts(job: "TransferJob", result: "TransferResult") -> Path:
    """Job directory: inputs.json, landmarks/, contacts.json, refine/, metrics.csv."""
    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    inputs = {
        "id": job.job_id,
        "target_mesh": job.target_mesh_path,
        "seed": job.seed,
        "source_params": HandParamsModel.from_params(job.source_params).model_dump(),
        "config": job.config.model_dump(),
    }
    (out / "inputs.json").write_text(json.dumps(inputs, indent=2))
    write_path_artifacts(result.path, out / "landmarks")
    write_contacts(result.contacts, out / "contacts.json")

    refine_dir = out / "refine"
    write_hand_params(result.refined_params, refine_dir / "final_params.json")
    write_trace_csv(result.refine_report.trace, refine_dir / "trace.csv")
    mesh_io.save_mesh(result.refined.hand_mesh, refine_dir / "hand_mesh.obj")

    rows = []
    for variant, quality, consis in (
        ("refined", result.refined_quality, result.refined_consis),
        ("direct_copy", result.baseline_quality, result.baseline_consis),
    ):
        rows.append({"variant": variant, **quality.as_dict(), "E_consis": consis})
    write_csv(rows, out / "metrics.csv", ["variant", *QUALITY_FIELDS, "E_consis"])
    logger.info(f"Wrote artifacts for {job.job_id} to {out}")
    return out


def write_audit_csv(rows, mean, path: str | Path) -> Path:
    """One dataset-mean row (metric means over grasps) followed by one row per grasp."""
    fields = ["row", "source_id", "intent", "category", *QUALITY_FIELDS]
    table = []
    if mean is not None:
        table.append({"row": "dataset_mean", "source_id": "", "intent": "", "category": "", **mean.as_dict()})
    for spec, quality in rows:
        table.append(
            {
                "row": "grasp",
                "source_id": spec.source_id,
                "intent": spec.intent,
                "category": spec.category,
                **quality.as_dict(),
            }
        )
    return write_csv(table, path, fields)
