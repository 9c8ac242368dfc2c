from pydantic import BaseModel, Field


class ContactEntry(BaseModel):
    v: int = Field(ge=0, description="Object vertex index")
    part: int = Field(ge=1, le=17, description="Hand part id")
    gamma: float = Field(gt=0, le=1, description="Contactness")
    anchor: int = Field(ge=1, le=17, description="Source anchor id")


class ContactFieldModel(BaseModel):
    """Contactness field on an object mesh, labeled vertices only."""

    vertex_count: int = Field(ge=0)
    entries: list[ContactEntry] = Field(default_factory=list)
