from .contact import ContactEntry, ContactFieldModel
from .hand import HandParamsModel
from .manifest import AuditRecordSpec, PathManifest, RefineManifest, TransferJobSpec
from .observation import CameraModel, FrameModel, SequenceModel
from .report import (
    AuditRequest,
    AuditResponse,
    AuditRow,
    QualityReportModel,
    RefineSummary,
    TransferResultModel,
)
from .rig import RigModel

__all__ = [
    "AuditRecordSpec",
    "AuditRequest",
    "AuditResponse",
    "AuditRow",
    "CameraModel",
    "ContactEntry",
    "ContactFieldModel",
    "FrameModel",
    "HandParamsModel",
    "PathManifest",
    "QualityReportModel",
    "RefineManifest",
    "RefineSummary",
    "RigModel",
    "SequenceModel",
    "TransferJobSpec",
    "TransferResultModel",
]
