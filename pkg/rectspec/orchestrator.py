from __future__ import annotations

"""
Spectrum pipeline as a LangGraph graph

Validator → Epsilon → Sweep → Refine → Assemble → Check

Validator routes to END for invalid curves; compute_spectrum turns that into
a CurveValidationError. Sweep and Refine fan the per-θ solves out over a
thread pool and reduce them in θ order.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Dict, List, Tuple

import numpy as np
from langgraph.graph import END, StateGraph

from . import curve_model as cm
from .chord_space import choose_epsilon
from .curve_model import TWO_PI
from .errors import EpsilonSelectionError, RectSpecError
from .rect_solver import solve_at_theta
from .settings import RunConfig, worker_count
from .spectrum import SpectrumReport, assemble, corollary_check
from .state import SpectrumState, ThetaSample


def _log(state: Dict[str, Any], message: str) -> None:
    config = state.get("config")
    if config is not None and config.verbose:
        print(message)


def _solve(curve: cm.JordanCurve, theta: float, config: RunConfig, mirrored: bool, on_grid: bool) -> ThetaSample:
    """One existence query; θ = 0 is the degenerate end and never witnessed."""
    if theta <= 0.0:
        return ThetaSample(theta=0.0, witnessed=False, residual=None, witness=None, on_grid=on_grid)
    target = TWO_PI - theta if mirrored else theta
    try:
        found = solve_at_theta(curve, target, config)
    except RectSpecError as e:
        if config.verbose:
            print(f"   ⚠️ solve failed at θ={theta:.6f}: {e}")
        found = []
    if not found:
        return ThetaSample(theta=float(theta), witnessed=False, residual=None, witness=None, on_grid=on_grid)
    best = min(found, key=lambda w: w.residual)
    return ThetaSample(theta=float(theta), witnessed=True, residual=float(best.residual), witness=best, on_grid=on_grid)


def run_validator(state: SpectrumState) -> SpectrumState:
    _log(state, "🔧 VALIDATOR NODE:")
    curve = state["curve"]
    verdict = cm.validate(curve)
    state["validation"] = verdict
    if verdict.valid:
        _log(state, f"   ✅ {state.get('curve_id')}: valid (min speed {verdict.min_speed:.3e})")
        state["next_node"] = "Epsilon"
    else:
        _log(state, f"   ❌ {state.get('curve_id')}: {verdict.summary()}")
        state["error"] = f"invalid curve: {verdict.summary()}"
        state["next_node"] = "END"
    return state


def run_epsilon(state: SpectrumState) -> SpectrumState:
    _log(state, "🔧 EPSILON NODE:")
    curve, config = state["curve"], state["config"]
    try:
        eps = choose_epsilon(curve, config.eps_rel)
    except EpsilonSelectionError as e:
        # fall back to a quarter of the squared feature scale
        eps = 0.25 / cm.max_curvature(curve) ** 2
        _log(state, f"   ⚠️ {e}; using ε = {eps:.3e}")
    state["epsilon"] = float(eps)
    _log(state, f"   📊 ε = {eps:.3e}")
    return state


def run_sweep(state: SpectrumState) -> SpectrumState:
    curve, config = state["curve"], state["config"]
    mirrored = bool(state.get("mirrored", False))
    thetas = np.linspace(0.0, math.pi, config.grid)
    _log(state, f"🔧 SWEEP NODE: {config.grid} angles on [0, π], {worker_count()} workers")

    samples: List[ThetaSample] = []
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = [pool.submit(_solve, curve, float(t), config, mirrored, True) for t in thetas]
        for future in as_completed(futures):
            samples.append(future.result())
    samples.sort(key=lambda s: s["theta"])
    state["samples"] = samples
    _log(state, f"   📊 witnessed {sum(s['witnessed'] for s in samples)}/{len(samples)}")
    return state


def _bisect(
    curve: cm.JordanCurve,
    lo: ThetaSample,
    hi: ThetaSample,
    config: RunConfig,
    mirrored: bool,
) -> List[ThetaSample]:
    """Shrink [lo, hi] around the status change to width δ_θ."""
    added: List[ThetaSample] = []
    while hi["theta"] - lo["theta"] > config.dtheta:
        mid = _solve(curve, 0.5 * (lo["theta"] + hi["theta"]), config, mirrored, False)
        added.append(mid)
        if mid["witnessed"] == lo["witnessed"]:
            lo = mid
        else:
            hi = mid
    return added


def run_refine(state: SpectrumState) -> SpectrumState:
    curve, config = state["curve"], state["config"]
    mirrored = bool(state.get("mirrored", False))
    samples = state.get("samples", [])
    pairs: List[Tuple[ThetaSample, ThetaSample]] = [
        (a, b) for a, b in zip(samples, samples[1:]) if a["witnessed"] != b["witnessed"]
    ]
    _log(state, f"🔧 REFINE NODE: {len(pairs)} status changes, δ_θ = {config.dtheta:.3e}")

    refined = list(samples)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = [pool.submit(_bisect, curve, a, b, config, mirrored) for a, b in pairs]
        for future in as_completed(futures):
            refined.extend(future.result())
    refined.sort(key=lambda s: s["theta"])
    state["refined"] = refined
    _log(state, f"   📊 {len(refined) - len(samples)} bisection solves")
    return state


def run_assemble(state: SpectrumState) -> SpectrumState:
    _log(state, "🔧 ASSEMBLE NODE:")
    config = state["config"]
    samples = state.get("refined") or state.get("samples", [])
    arcs, witnesses, unresolved = assemble(samples)
    state["report"] = SpectrumReport(
        curve_id=str(state.get("curve_id") or state["curve"].name),
        arcs=arcs,
        measure=float(arcs.measure),
        grid=config.grid,
        epsilon=float(state.get("epsilon", 0.0)),
        witnesses=witnesses,
        verdict=False,
        unresolved=unresolved,
        config=config,
        samples=samples,
    )
    _log(state, f"   📊 {len(arcs.arcs)} arcs, measure {arcs.measure:.6f}, {len(unresolved)} unresolved bands")
    return state


def run_check(state: SpectrumState) -> SpectrumState:
    _log(state, "🔧 CHECK NODE:")
    report = state["report"]
    verdict = corollary_check(report)
    report.verdict = verdict.passed
    _log(state, f"   {'✅' if verdict.passed else '❌'} {verdict.message}")
    return state


def build_spectrum_graph() -> StateGraph:
    graph = StateGraph(SpectrumState)
    graph.add_node("Validator", run_validator)
    graph.add_node("Epsilon", run_epsilon)
    graph.add_node("Sweep", run_sweep)
    graph.add_node("Refine", run_refine)
    graph.add_node("Assemble", run_assemble)
    graph.add_node("Check", run_check)

    graph.set_entry_point("Validator")

    def route_from_validator(state: SpectrumState) -> str:
        nxt = str(state.get("next_node") or "").strip()
        return "Epsilon" if nxt == "Epsilon" else "END"

    graph.add_conditional_edges("Validator", route_from_validator, {"Epsilon": "Epsilon", "END": END})
    graph.add_edge("Epsilon", "Sweep")
    graph.add_edge("Sweep", "Refine")
    graph.add_edge("Refine", "Assemble")
    graph.add_edge("Assemble", "Check")
    graph.add_edge("Check", END)
    return graph
