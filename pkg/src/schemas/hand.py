import numpy as np
from pydantic import BaseModel, Field

from ..hand.rig import N_BETA, N_JOINTS, HandParams


class HandParamsModel(BaseModel):
    """Serialized hand parameters (radians, unitless shape, meters)."""

    theta: list[list[float]] = Field(
        description="16 per-joint axis-angle rotations", min_length=N_JOINTS, max_length=N_JOINTS
    )
    beta: list[float] = Field(
        default_factory=lambda: [0.0] * N_BETA,
        description="10 shape scalars (0-4 finger lengths, 5-9 finger widths)",
        min_length=N_BETA,
        max_length=N_BETA,
    )
    wrist: list[float] = Field(description="Wrist position in meters", min_length=3, max_length=3)

    def to_params(self) -> HandParams:
        return HandParams(np.asarray(self.theta), np.asarray(self.beta), np.asarray(self.wrist))

    @classmethod
    def from_params(cls, params: HandParams) -> "HandParamsModel":
        return cls(
            theta=params.theta.tolist(),
            beta=params.beta.tolist(),
            wrist=params.wrist.tolist(),
        )
