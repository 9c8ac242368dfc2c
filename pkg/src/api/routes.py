"""
HTTP routes for single transfers and grasp audits.

Handlers are plain ``def`` so FastAPI runs the CPU-bound work in its
thread pool instead of blocking the event loop.
"""

import logging

from fastapi import APIRouter

from ..config import TinkConfig, load_config
from ..schemas import (
    AuditRequest,
    AuditResponse,
    AuditRow,
    HandParamsModel,
    QualityReportModel,
    RefineSummary,
    TransferJobSpec,
    TransferResultModel,
)
from ..services.metrics import QualityReport
from ..services.pipeline import TransferResult, job_from_spec, run_audit, run_transfer

logger = logging.getLogger(__name__)

router = APIRouter()


def _quality(report: QualityReport) -> QualityReportModel:
    return QualityReportModel(**report.as_dict())


def to_result_model(result: TransferResult) -> TransferResultModel:
    report = result.refine_report
    return TransferResultModel(
        job_id=result.job_id,
        refined_params=HandParamsModel.from_params(result.refined_params),
        refined_quality=_quality(result.refined_quality),
        refined_consis=result.refined_consis,
        baseline_params=HandParamsModel.from_params(result.baseline_params),
        baseline_quality=_quality(result.baseline_quality),
        baseline_consis=result.baseline_consis,
        refine=RefineSummary(
            iterations=report.iterations,
            converged=report.converged,
            initial_total=report.initial.total,
            final_total=report.final.total,
        ),
        mapped_contacts=result.contacts.n_labeled,
    )


def get_config() -> TinkConfig:
    return load_config()


@router.post("/transfer", response_model=TransferResultModel)
def transfer(spec: TransferJobSpec) -> TransferResultModel:
    """Run one transfer job and return its refined and baseline grasps."""
    config = get_config()
    job = job_from_spec(spec, config)
    logger.info(f"Transfer request {spec.id}: {spec.source_mesh} -> {spec.target_mesh}")
    return to_result_model(run_transfer(job))


@router.post("/audit", response_model=AuditResponse)
def audit(request: AuditRequest) -> AuditResponse:
    config = get_config()
    result = run_audit(request.records, config, request.seed)
    rows = [
        AuditRow(source_id=spec.source_id, intent=spec.intent, category=spec.category, quality=_quality(quality))
        for spec, quality in result.rows
    ]
    return AuditResponse(rows=rows, mean=_quality(result.mean) if result.mean is not None else None)
