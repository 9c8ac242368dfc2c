from pydantic import BaseModel, Field


class BoneModel(BaseModel):
    joint: int
    name: str
    parent: int
    rest: list[float] = Field(description="Rest joint position at zero shape (m)")
    rest_beta: list[list[float]] = Field(description="3 x 10 shape derivative of the rest position")


class TipModel(BaseModel):
    joint: int = Field(description="Joint the fingertip rides on")
    name: str
    rest: list[float]
    rest_beta: list[list[float]]


class TemplateModel(BaseModel):
    vertices: list[list[float]]
    vertices_beta: list[list[list[float]]] = Field(description="N x 3 x 10 shape derivatives")
    faces: list[list[int]]
    parts: list[int]


class AnchorModel(BaseModel):
    part: int = Field(ge=1, le=17)
    face: int = Field(ge=0)
    bary: list[float] = Field(min_length=3, max_length=3)


class AxesModel(BaseModel):
    joint: int
    twist: list[float]
    splay: list[float]


class RigModel(BaseModel):
    """JSON form of a hand rig."""

    bones: list[BoneModel]
    tips: list[TipModel]
    template: TemplateModel
    skin_weights: list[list[float]]
    anchors: list[AnchorModel]
    axes: list[AxesModel]
