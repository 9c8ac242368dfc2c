from pydantic import BaseModel, Field


class CameraModel(BaseModel):
    K: list[float] = Field(description="Intrinsics, row-major 3x3", min_length=9, max_length=9)
    R: list[float] = Field(description="World-to-camera rotation, row-major 3x3", min_length=9, max_length=9)
    t: list[float] = Field(description="World-to-camera translation (m)", min_length=3, max_length=3)
    w: int = Field(gt=0, description="Image width (px)")
    h: int = Field(gt=0, description="Image height (px)")


class FrameModel(BaseModel):
    t: float = Field(description="Timestamp (s)")
    kp: list[list[list[float]]] = Field(description="views x 21 x 2 pixel keypoints")
    w: list[list[float]] = Field(description="views x 21 visibility weights")


class SequenceModel(BaseModel):
    """Multi-view keypoint annotations of one sequence."""

    cameras: list[CameraModel] = Field(min_length=1)
    frames: list[FrameModel] = Field(default_factory=list)
