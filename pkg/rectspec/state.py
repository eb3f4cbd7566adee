from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Tuple, TypedDict

from pydantic import BaseModel, Field


# Angles are radians; r and arc endpoints are in normalized units (full turn = 1).
class ThetaSample(TypedDict):
    theta: float
    witnessed: bool
    residual: Optional[float]
    witness: Optional[Any]  # RectangleWitness
    on_grid: bool


class SpectrumState(TypedDict, total=False):
    # Core inputs
    curve: Any  # JordanCurve
    curve_id: str
    config: Any  # RunConfig
    mirrored: bool

    # Validator / Epsilon
    validation: Any  # ValidationVerdict
    error: Optional[str]
    epsilon: float

    # Sweep / Refine
    samples: List[ThetaSample]
    refined: List[ThetaSample]

    # Assemble / Check
    report: Any  # SpectrumReport
    next_node: Optional[str]


class CurveFile(BaseModel):
    type: Literal["fourier"] = "fourier"
    K: int
    coeffs: List[Tuple[float, float]]


class WitnessDump(BaseModel):
    theta: float
    r: float
    aspect: float
    params: List[float]
    vertices: List[Tuple[float, float]]
    residual: float


class EndpointDump(BaseModel):
    t: Optional[float] = None


class FiberSectionDump(BaseModel):
    phi: float
    polylines: List[List[Tuple[float, float, float]]]
    endpoints: List[EndpointDump]


class MeshFile(BaseModel):
    vertices: List[Tuple[float, float, float, float]]
    triangles: List[Tuple[int, int, int]]
    boundary: List[int] = Field(default_factory=list)


class ArcSetDump(BaseModel):
    arcs: List[Tuple[float, float]]


class SpectrumReportFile(BaseModel):
    curve_id: str
    arcs: List[Tuple[float, float]]
    measure: float
    grid: int
    epsilon: float
    witnesses: List[WitnessDump]
    verdict: bool
    unresolved: List[Tuple[float, float]]
    config: Dict[str, Any]
    timestamp: str = ""
