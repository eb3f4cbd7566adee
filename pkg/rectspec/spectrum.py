from __future__ import annotations

"""
Spectrum: the set of realized aspect ratios r ∈ [0, 1]

A rectangle found at rotation angle θ ∈ [0, π] has r = θ/π and side ratio
tan(rπ/4). The reported measure is an inner estimate: only runs of θ with a
confirmed witness count, and the bands between a witnessed and an
unwitnessed sample are listed as unresolved.
"""

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .circle_sets import ArcSet
from .curve_model import JordanCurve
from .errors import ArcDomainError, CurveValidationError
from .rect_solver import RectangleWitness
from .settings import RunConfig
from .state import SpectrumReportFile, ThetaSample

ONE_THIRD = 1.0 / 3.0


@dataclass
class SpectrumReport:
    curve_id: str
    arcs: ArcSet
    measure: float
    grid: int
    epsilon: float
    witnesses: List[RectangleWitness]
    verdict: bool
    unresolved: List[Tuple[float, float]]
    config: RunConfig
    samples: List[ThetaSample] = field(default_factory=list)

    @property
    def arc_count(self) -> int:
        return len(self.arcs.arcs)

    def to_file(self, timestamp: Optional[str] = None) -> SpectrumReportFile:
        return SpectrumReportFile(
            curve_id=self.curve_id,
            arcs=[(float(a), float(b)) for a, b in self.arcs.arcs],
            measure=float(self.measure),
            grid=self.grid,
            epsilon=float(self.epsilon),
            witnesses=[w.to_dump() for w in self.witnesses],
            verdict=self.verdict,
            unresolved=[(float(a), float(b)) for a, b in self.unresolved],
            config=self.config.model_dump(),
            timestamp=timestamp if timestamp is not None else datetime.now(timezone.utc).isoformat(),
        )


def to_aspect_ratio(r: float) -> float:
    if not 0.0 <= r <= 1.0:
        raise ArcDomainError(f"r must lie in [0, 1], got {r}")
    return math.tan(r * math.pi / 4.0)


def to_r(ratio: float) -> float:
    if not 0.0 <= ratio <= 1.0:
        raise ArcDomainError(f"aspect ratio must lie in [0, 1], got {ratio}")
    return 4.0 / math.pi * math.atan(ratio)


class CorollaryVerdict(BaseModel):
    measure: float
    threshold: float
    arc_count: int
    passed: bool
    message: str


def corollary_check(report: SpectrumReport, delta_r: Optional[float] = None) -> CorollaryVerdict:
    """measure >= 1/3 − δ_r · (arc count); a failure points at solver coverage, not the bound."""
    delta_r = report.config.delta_r if delta_r is None else delta_r
    threshold = ONE_THIRD - delta_r * report.arc_count
    passed = report.measure >= threshold
    message = (
        f"measure {report.measure:.6f} >= {threshold:.6f}"
        if passed
        else f"measure {report.measure:.6f} < {threshold:.6f}: solver coverage bug (the 1/3 bound is a theorem)"
    )
    return CorollaryVerdict(
        measure=float(report.measure), threshold=float(threshold),
        arc_count=report.arc_count, passed=bool(passed), message=message,
    )


def assemble(samples: Sequence[ThetaSample]) -> Tuple[ArcSet, List[RectangleWitness], List[Tuple[float, float]]]:
    """Arcs from maximal runs of witnessed samples (sorted by θ)."""
    ordered = sorted(samples, key=lambda s: s["theta"])
    arcs: List[Tuple[float, float]] = []
    witnesses: List[RectangleWitness] = []
    unresolved: List[Tuple[float, float]] = []

    k = 0
    n = len(ordered)
    while k < n:
        if not ordered[k]["witnessed"]:
            k += 1
            continue
        start = k
        while k + 1 < n and ordered[k + 1]["witnessed"]:
            k += 1
        lo, hi = ordered[start]["theta"] / math.pi, ordered[k]["theta"] / math.pi
        if start > 0:
            unresolved.append((ordered[start - 1]["theta"] / math.pi, lo))
        if k + 1 < n:
            unresolved.append((hi, ordered[k + 1]["theta"] / math.pi))
        if hi > lo:
            arcs.append((lo, hi))
            run = ordered[start: k + 1]
            best = min(run, key=lambda s: s["residual"] if s["residual"] is not None else math.inf)
            witnesses.append(best["witness"])
        else:
            unresolved.append((lo, hi))
        k += 1
    return ArcSet.from_intervals(arcs, exact=False), witnesses, _merge(unresolved)


def _merge(intervals: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out: List[List[float]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def witnessed_fraction(report: SpectrumReport) -> float:
    grid = [s for s in report.samples if s.get("on_grid", True)]
    return float(np.mean([s["witnessed"] for s in grid])) if grid else 0.0


def compute_spectrum(
    curve: JordanCurve,
    config: Optional[RunConfig] = None,
    curve_id: Optional[str] = None,
    mirrored: bool = False,
) -> SpectrumReport:
    """Run the Validator → Epsilon → Sweep → Refine → Assemble → Check graph.

    With mirrored=True the sweep solves at 2π − θ instead of θ.
    """
    from .orchestrator import build_spectrum_graph

    config = config or RunConfig()
    app = build_spectrum_graph().compile()
    state = app.invoke({
        "curve": curve,
        "curve_id": curve_id or curve.name,
        "config": config,
        "mirrored": mirrored,
    })
    if state.get("report") is None:
        raise CurveValidationError(state.get("error") or "curve validation failed", state.get("validation"))
    return state["report"]


def write_plot_csv(report: SpectrumReport, path: str) -> str:
    rows = sorted(report.samples, key=lambda s: s["theta"])
    frame = pd.DataFrame({
        "r": [s["theta"] / math.pi for s in rows],
        "witnessed": [int(s["witnessed"]) for s in rows],
        "residual": [s["residual"] if s["residual"] is not None else np.nan for s in rows],
    })
    frame.to_csv(path, index=False)
    return path


def write_report_json(report: SpectrumReport, path: str, timestamp: Optional[str] = None) -> str:
    with open(path, "w") as f:
        f.write(report.to_file(timestamp).model_dump_json(indent=2))
    return path


def read_report_json(path: str) -> SpectrumReportFile:
    with open(path, "r") as f:
        return SpectrumReportFile.model_validate(json.load(f))
