from pydantic import BaseModel, Field

from .hand import HandParamsModel
from .manifest import AuditRecordSpec


class QualityReportModel(BaseModel):
    penet_depth: float = Field(ge=0, description="cm")
    intersect_volume: float = Field(ge=0, description="cm^3")
    sim_disp_mean: float = Field(ge=0, description="cm")
    sim_disp_std: float = Field(ge=0, description="cm")


class RefineSummary(BaseModel):
    iterations: int
    converged: bool
    initial_total: float
    final_total: float


class TransferResultModel(BaseModel):
    """Response body of a completed transfer."""

    job_id: str
    refined_params: HandParamsModel
    refined_quality: QualityReportModel
    refined_consis: float
    baseline_params: HandParamsModel
    baseline_quality: QualityReportModel
    baseline_consis: float
    refine: RefineSummary
    mapped_contacts: int = Field(description="Labeled target vertices")


class AuditRequest(BaseModel):
    records: list[AuditRecordSpec]
    seed: int = Field(default=0, ge=0)


class AuditRow(BaseModel):
    source_id: str
    intent: str
    category: str
    quality: QualityReportModel


class AuditResponse(BaseModel):
    rows: list[AuditRow]
    mean: QualityReportModel | None = None
