"""
Transfer Pipeline Service

Runs one source-target transfer (contacts -> shape path -> contact mapping ->
refinement -> audit, plus the direct-copy baseline) and batches of them on a
bounded process pool.
"""

import logging
from collections.abc import Iterator
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..config import TinkConfig
from ..core.mesh import TriMesh
from ..core.sdf import mesh_to_sdf
from ..exceptions import AppException, StageError, ValidationError
from ..hand.rig import HandParams, HandRig, forward, hand_mesh
from ..hand.template import default_rig
from ..observability import stage_span
from ..schemas import AuditRecordSpec, HandParamsModel, TransferJobSpec
from ..storage import mesh_io, records
from .contact import ContactnessField, derive_contact, map_contacts
from .energies import consis_terms
from .fixtures import is_fixture, resolve_fixture, synthesize_grasp
from .metrics import GraspRecord, QualityReport, evaluate_grasp, mean_report
from .refiner import RefineProblem, RefineReport, refine
from .shape_path import LandmarkPath, build_path

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


@dataclass(frozen=True, eq=False)
class TransferJob:
    job_id: str
    source: GraspRecord
    source_params: HandParams
    target_mesh_path: str
    config: TinkConfig = TinkConfig()
    out_dir: Path | None = None
    seed: int = 0


@dataclass(frozen=True, eq=False)
class TransferResult:
    job_id: str
    refined_params: HandParams
    refined: GraspRecord
    refined_quality: QualityReport
    refined_consis: float
    refine_report: RefineReport
    baseline_params: HandParams
    baseline: GraspRecord
    baseline_quality: QualityReport
    baseline_consis: float
    contacts: ContactnessField
    path: LandmarkPath = field(repr=False)


def direct_copy(params: HandParams, source: TriMesh, target: TriMesh) -> HandParams:
    """Copy a grasp to the target frame: centroid alignment plus bounding-box scale of the wrist offset."""
    lo_s, hi_s = source.bounds
    lo_t, hi_t = target.bounds
    scale = float(np.linalg.norm(hi_t - lo_t) / np.linalg.norm(hi_s - lo_s))
    wrist = target.centroid + scale * (params.wrist - source.centroid)
    return params.with_wrist(wrist)


def load_object(reference: str) -> TriMesh:
    """Mesh from a file path or a fixture name."""
    if is_fixture(reference):
        return resolve_fixture(reference)
    return mesh_io.load_mesh(reference)


@contextmanager
def _stage(job_id: str, name: str) -> Iterator[None]:
    """Span plus error tagging for one pipeline stage."""
    with stage_span(name, job_id=job_id):
        logger.debug(f"[{job_id}] stage {name}")
        try:
            yield
        except StageError:
            raise
        except Exception as e:
            raise StageError(name, e) from e


def run_transfer(job: TransferJob, rig: HandRig | None = None) -> TransferResult:
    rig = rig or default_rig()
    config = job.config
    source_mesh = job.source.object_mesh

    with _stage(job.job_id, "load"):
        target_mesh = load_object(job.target_mesh_path)

    with _stage(job.job_id, "sdf"):
        source_sdf = job.source.object_sdf
        target_sdf = mesh_to_sdf(target_mesh, config.sdf.padding, config.sdf.resolution)

    with _stage(job.job_id, "contact"):
        source_state = forward(rig, job.source_params, jacobians=False)
        field_source = derive_contact(source_state, source_mesh, config.contact.threshold, config.contact.decay)

    with _stage(job.job_id, "path"):
        path = build_path(
            source_sdf,
            target_sdf,
            config.shape_path.n_itpl,
            source_mesh=source_mesh,
            target_mesh=target_mesh,
            max_resolution=config.shape_path.max_resolution,
            workers=config.shape_path.mesh_workers,
        )

    with _stage(job.job_id, "map"):
        contacts = map_contacts(field_source, path, config.icp)

    with _stage(job.job_id, "refine"):
        baseline_params = direct_copy(job.source_params, source_mesh, target_mesh)
        problem = RefineProblem(rig, baseline_params, target_mesh, target_sdf, contacts, config.refine)
        report = refine(problem)

    with _stage(job.job_id, "metrics"):
        meta = {"source_id": job.job_id, "intent": job.source.intent, "category": job.source.category}
        refined_state = forward(rig, report.params, jacobians=False)
        baseline_state = forward(rig, baseline_params, jacobians=False)
        refined = GraspRecord(hand_mesh(rig, refined_state), target_mesh, target_sdf, **meta)
        baseline = GraspRecord(hand_mesh(rig, baseline_state), target_mesh, target_sdf, **meta)
        refined_quality = evaluate_grasp(refined, config.metrics, config.simulation, job.seed)
        baseline_quality = evaluate_grasp(baseline, config.metrics, config.simulation, job.seed)
        refined_consis = consis_terms(refined_state.anchors, contacts, target_mesh.vertices)[0]
        baseline_consis = consis_terms(baseline_state.anchors, contacts, target_mesh.vertices)[0]

    result = TransferResult(
        job_id=job.job_id,
        refined_params=report.params,
        refined=refined,
        refined_quality=refined_quality,
        refined_consis=refined_consis,
        refine_report=report,
        baseline_params=baseline_params,
        baseline=baseline,
        baseline_quality=baseline_quality,
        baseline_consis=baseline_consis,
        contacts=contacts,
        path=path,
    )

    if job.out_dir is not None:
        with _stage(job.job_id, "write"):
            records.write_transfer_artifacts(job, result)

    logger.info(
        f"✅ [{job.job_id}] penetration {baseline_quality.penet_depth:.3f} -> {refined_quality.penet_depth:.3f} cm, "
        f"consis {baseline_consis:.3e} -> {refined_consis:.3e} m2"
    )
    return result


# ============================================================================
# Job construction
# ============================================================================


def job_from_spec(
    spec: TransferJobSpec,
    config: TinkConfig,
    out_root: Path | None = None,
    seed: int | None = None,
    rig: HandRig | None = None,
) -> TransferJob:
    """Resolve a manifest entry into a runnable job (loads the source side)."""
    rig = rig or default_rig()
    job_config = config.with_overrides(spec.overrides)

    with _stage(spec.id, "load"):
        source_mesh = load_object(spec.source_mesh)
        source_sdf = mesh_to_sdf(source_mesh, job_config.sdf.padding, job_config.sdf.resolution)
        if isinstance(spec.source_params, HandParamsModel):
            params = spec.source_params.to_params()
        elif isinstance(spec.source_params, str):
            params = records.read_hand_params(spec.source_params)
        else:
            params = synthesize_grasp(rig, source_mesh, job_config, source_sdf)

    source_hand = hand_mesh(rig, forward(rig, params, jacobians=False))
    source = GraspRecord(
        source_hand, source_mesh, source_sdf, source_id=spec.id, intent=spec.intent, category=spec.category
    )
    job_seed = spec.seed if spec.seed is not None else (seed if seed is not None else job_config.pipeline.seed)
    return TransferJob(
        job_id=spec.id,
        source=source,
        source_params=params,
        target_mesh_path=spec.target_mesh,
        config=job_config,
        out_dir=(out_root / spec.id) if out_root is not None else None,
        seed=job_seed,
    )


# ============================================================================
# Batches
# ============================================================================


@dataclass
class BatchSummary:
    rows: list[dict[str, Any]] = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(1 for row in self.rows if row["status"] != "ok")

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failures else EXIT_OK


def summary_row(job_id: str, result: TransferResult | None = None, error: str = "") -> dict[str, Any]:
    row: dict[str, Any] = {"job": job_id, "status": "ok" if result is not None else "error", "error": error}
    if result is not None:
        for prefix, quality, consis in (
            ("refined", result.refined_quality, result.refined_consis),
            ("baseline", result.baseline_quality, result.baseline_consis),
        ):
            for key, value in quality.as_dict().items():
                row[f"{prefix}_{key}"] = value
            row[f"{prefix}_consis"] = consis
        row["iterations"] = result.refine_report.iterations
    return row


def _run_one(spec_data: dict[str, Any], config_data: dict[str, Any], out_root: str | None, seed: int | None) -> dict[str, Any]:
    """Worker entry point (module-level so the process pool can pickle it)."""
    spec = TransferJobSpec.model_validate(spec_data)
    try:
        config = TinkConfig.model_validate(config_data)
        job = job_from_spec(spec, config, Path(out_root) if out_root else None, seed)
        return summary_row(spec.id, run_transfer(job))
    except AppException as e:
        logger.error(f"❌ Job {spec.id} failed: {e.message}")
        return summary_row(spec.id, error=f"{e.error_type}: {e.message}")
    except Exception as e:
        logger.exception(f"❌ Job {spec.id} failed unexpectedly")
        return summary_row(spec.id, error=f"{type(e).__name__}: {e}")


def run_batch(
    manifest_path: str | Path,
    parallelism: int = 1,
    config: TinkConfig | None = None,
    out_root: str | Path | None = None,
    seed: int | None = None,
) -> BatchSummary:
    """Run every job of a manifest; failures become error rows."""
    if parallelism < 1:
        raise ValidationError(f"parallelism must be >= 1, got {parallelism}")
    config = config or TinkConfig()
    specs = records.read_manifest(manifest_path)
    out = str(out_root) if out_root is not None else None
    payload = [(spec.model_dump(), config.model_dump(), out, seed) for spec in specs]

    if parallelism == 1 or len(payload) <= 1:
        rows = [_run_one(*args) for args in payload]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_run_one, *args) for args in payload]
            rows = [future.result() for future in futures]

    summary = BatchSummary(rows)
    if out_root is not None:
        records.write_summary_csv(summary.rows, Path(out_root) / "summary.csv")
    logger.info(f"Batch finished: {len(rows)} jobs, {summary.failures} failed")
    return summary


# ============================================================================
# Audit
# ============================================================================


@dataclass(frozen=True)
class AuditResult:
    rows: list[tuple[AuditRecordSpec, QualityReport]]
    mean: QualityReport | None


def run_audit(specs: list[AuditRecordSpec], config: TinkConfig | None = None, seed: int = 0) -> AuditResult:
    """Quality metrics for a list of stored grasps, plus their dataset mean."""
    config = config or TinkConfig()
    rows = []
    for spec in specs:
        with _stage(spec.source_id or spec.hand_mesh, "audit"):
            record = GraspRecord.from_meshes(
                load_object(spec.hand_mesh),
                load_object(spec.object_mesh),
                config.sdf,
                source_id=spec.source_id,
                intent=spec.intent,
                category=spec.category,
            )
            rows.append((spec, evaluate_grasp(record, config.metrics, config.simulation, seed)))
    return AuditResult(rows, mean_report([quality for _, quality in rows]))
