from typing import Any

from pydantic import BaseModel, Field

from .hand import HandParamsModel


class TransferJobSpec(BaseModel):
    """One source-target transfer job.

    Mesh references are file paths or ``fixture:<family>:<size>`` names.
    """

    id: str = Field(description="Job id, also the output subdirectory name")
    source_mesh: str
    target_mesh: str
    source_params: HandParamsModel | str | None = Field(
        default=None,
        description="Inline params, a params JSON path, or null to synthesize a grasp",
    )
    category: str = ""
    intent: str = ""
    seed: int | None = Field(default=None, ge=0)
    overrides: dict[str, Any] = Field(default_factory=dict)


class RefineManifest(BaseModel):
    """Input of the ``refine`` subcommand."""

    source_params: HandParamsModel | str
    target_mesh: str
    contacts: str = Field(description="Contact field JSON on the target mesh")
    overrides: dict[str, Any] = Field(default_factory=dict)


class AuditRecordSpec(BaseModel):
    hand_mesh: str
    object_mesh: str
    source_id: str = ""
    intent: str = ""
    category: str = ""


class PathManifest(BaseModel):
    n_itpl: int
    t_values: list[float]
    files: list[str]
