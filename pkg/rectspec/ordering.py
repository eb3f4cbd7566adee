from __future__ import annotations

"""
Ordering: the ≺ relation between disjoint Möbius strips

At a regular fiber each strip contributes an arc L with both ends on the
rho = 0 plane. Closing L with the straight segment P between its ends and
coning the loop off to a point high above gives a chain Σ with ∂Σ = L ∪ P.
a ≺ b iff the number of times L_b pierces Σ_a is even.

Strips may be StripMesh, DomeStrip or CurveStrip; anything else must expose
section(phi) -> FiberSection.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from shapely.geometry import LineString

from .chord_space import CurveStrip, FiberSection
from .curve_model import TWO_PI
from .errors import (
    DegeneratePosition,
    DisjointnessViolated,
    ExcessBoundaryPoints,
    NonRegularFiber,
    PreconditionError,
)
from .settings import worker_count
from .strip_mesh import DomeStrip, StripMesh, mesh_from_curve, mesh_from_dome, meshes_disjoint, rotate_strip, slice_at

Strip = Union[StripMesh, DomeStrip, CurveStrip]

GUARD_BAND = 1e-3


@dataclass
class SectionPair:
    phi: float
    L1: FiberSection
    L2: FiberSection
    P1: np.ndarray  # (2, 3)
    P2: np.ndarray


@dataclass
class ConeChain:
    apex: np.ndarray        # (3,)
    triangles: np.ndarray   # (k, 3, 3)

    @classmethod
    def over(cls, loop: np.ndarray, apex: np.ndarray) -> "ConeChain":
        """Fan from apex over a closed loop given as (m, 3) with loop[0] == loop[-1]."""
        a = np.broadcast_to(apex, (len(loop) - 1, 3))
        return cls(np.asarray(apex, dtype=float), np.stack([a, loop[:-1], loop[1:]], axis=1))


def section_of(strip: Strip, phi: float) -> FiberSection:
    if isinstance(strip, StripMesh):
        return slice_at(strip, phi)
    return strip.section(phi)


def _open_arc(section: FiberSection) -> np.ndarray:
    arcs = list(section.open_polylines())
    if len(section.endpoints) > 2 or len(arcs) > 1:
        raise ExcessBoundaryPoints(f"fiber phi={section.phi:.6f} has more than two boundary points")
    if len(arcs) != 1 or len(arcs[0]) < 2:
        raise NonRegularFiber(f"fiber phi={section.phi:.6f} has no section arc with two endpoints")
    return arcs[0]


def closing_segment(section: FiberSection) -> np.ndarray:
    arc = _open_arc(section)
    return np.array([arc[-1], arc[0]])


def closed_loops(section: FiberSection) -> List[np.ndarray]:
    """L ∪ P as a closed loop, plus any closed components of the section."""
    arc = _open_arc(section)
    loops = [np.vstack([arc, arc[:1]])]
    loops.extend(section.closed_polylines())
    return loops


def section_pair(a: Strip, b: Strip, phi: float) -> SectionPair:
    L1, L2 = section_of(a, phi), section_of(b, phi)
    return SectionPair(phi=float(phi) % TWO_PI, L1=L1, L2=L2, P1=closing_segment(L1), P2=closing_segment(L2))


def _point_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    denom = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / denom, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * d), axis=1)


def segment_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Distances between paired segments A[i], B[i], each (n, 2, 3)."""
    a0, a1, b0, b1 = A[:, 0], A[:, 1], B[:, 0], B[:, 1]
    best = np.minimum.reduce([
        _point_segment(a0, b0, b1), _point_segment(a1, b0, b1),
        _point_segment(b0, a0, a1), _point_segment(b1, a0, a1),
    ])
    M = np.stack([a1 - a0, b0 - b1], axis=2)
    x = -np.einsum("nij,nj->ni", np.linalg.pinv(M), a0 - b0)
    inside = np.all((x >= 0) & (x <= 1), axis=1)
    gap = np.linalg.norm(a0 - b0 + np.einsum("nij,nj->ni", M, x), axis=1)
    return np.where(inside, np.minimum(best, gap), best)


def section_distance(s1: FiberSection, s2: FiberSection) -> float:
    A, B = s1.segments(), s2.segments()
    if not len(A) or not len(B):
        return math.inf
    ia, ib = np.meshgrid(np.arange(len(A)), np.arange(len(B)), indexing="ij")
    return float(segment_distances(A[ia.ravel()], B[ib.ravel()]).min())


def random_apex(sections: Sequence[FiberSection], rng: np.random.Generator) -> np.ndarray:
    pts = np.vstack([p for s in sections for p in s.polylines])
    lo, hi = pts[:, :2].min(axis=0), pts[:, :2].max(axis=0)
    top = max(float(pts[:, 2].max()), 1e-3)
    m = rng.uniform(lo, hi)
    return np.array([m[0], m[1], top * (1.5 + rng.uniform())])


def cone_parity(
    loops: Union[np.ndarray, Sequence[np.ndarray]],
    target: np.ndarray,
    apex: np.ndarray,
    edge_tol: float = 1e-9,
    chunk: int = 256,
) -> int:
    """Transversal crossings of target segments (m, 2, 3) with the cone fan, mod 2.

    Raises DegeneratePosition when a crossing is within edge_tol of a fan edge
    or a target vertex, or when a target segment lies in a fan plane.
    """
    if isinstance(loops, np.ndarray) and loops.ndim == 2:
        loops = [loops]
    tris = np.concatenate([ConeChain.over(loop, apex).triangles for loop in loops])
    v0, e1, e2 = tris[:, 0], tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]
    scale = max(float(np.abs(tris).max()), float(np.abs(target).max()) if len(target) else 0.0, 1.0)
    eps = 1e-14 * scale ** 2

    count = 0
    for start in range(0, len(target), chunk):
        seg = target[start: start + chunk]
        O = seg[:, 0][:, None, :]
        D = (seg[:, 1] - seg[:, 0])[:, None, :]
        h = np.cross(D, e2[None])
        a = np.sum(e1[None] * h, axis=-1)
        s = O - v0[None]
        q = np.cross(s, e1[None])
        normal = np.cross(e1, e2)
        plane_dist = np.abs(np.einsum("stk,tk->st", s, normal)) / np.maximum(np.linalg.norm(normal, axis=1), 1e-300)
        parallel = np.abs(a) < eps
        if np.any(parallel & (plane_dist < edge_tol * scale)):
            raise DegeneratePosition("target segment lies in a fan triangle plane")
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(parallel, 0.0, 1.0 / np.where(parallel, 1.0, a))
            u = f * np.sum(s * h, axis=-1)
            v = f * np.sum(D * q, axis=-1)
            t = f * np.einsum("tk,stk->st", e2, q)
        w = 1.0 - u - v
        hit = ~parallel & (u >= 0) & (v >= 0) & (w >= 0) & (t >= 0) & (t <= 1)
        near = ~parallel & (u >= -edge_tol) & (v >= -edge_tol) & (w >= -edge_tol) & (t >= -edge_tol) & (t <= 1 + edge_tol)
        close = near & (
            (np.abs(u) < edge_tol) | (np.abs(v) < edge_tol) | (np.abs(w) < edge_tol)
            | (np.abs(t) < edge_tol) | (np.abs(t - 1) < edge_tol)
        )
        if np.any(close):
            raise DegeneratePosition("crossing within tolerance of a fan edge or target vertex")
        count += int(np.count_nonzero(hit))
    return count % 2


def sections_parity(source: FiberSection, target: FiberSection, apex: np.ndarray) -> int:
    return cone_parity(closed_loops(source), target.segments(), apex)


def precedes_sections(
    source: FiberSection,
    target: FiberSection,
    rng: Optional[np.random.Generator] = None,
    attempts: int = 10,
) -> bool:
    """source ≺ target at this fiber: even parity of target through the cone over source."""
    rng = rng or np.random.default_rng(0)
    for _ in range(attempts):
        apex = random_apex([source, target], rng)
        try:
            return sections_parity(source, target, apex) == 0
        except DegeneratePosition:
            continue
    raise DegeneratePosition(f"no general-position apex after {attempts} attempts")


def _as_mesh(strip: Strip, resolution: int = 32) -> StripMesh:
    if isinstance(strip, StripMesh):
        return strip
    if isinstance(strip, DomeStrip):
        return mesh_from_dome(strip, resolution)
    if isinstance(strip, CurveStrip):
        return rotate_strip(mesh_from_curve(strip.curve, strip.eps, resolution), np.exp(1j * strip.theta))
    raise TypeError(f"cannot mesh {type(strip).__name__}")


def strips_disjoint(a: Strip, b: Strip, resolution: int = 32) -> bool:
    """Disjointness of two strips; meshes go through meshes_disjoint.

    Two domes are decided exactly. In every fiber each dome is a diameter of
    the unit disk lifted by h(1 − s²), with direction set by its rotation.
    Distinct rotations give distinct diameters, which meet only over m = 0 at
    the two apex heights. Equal rotations give one diameter, and both lifts
    reach rho = 0 at its ends.
    """
    if isinstance(a, DomeStrip) and isinstance(b, DomeStrip):
        return a.apex_height != b.apex_height and abs(a.rotation - b.rotation) > 1e-12
    return meshes_disjoint(_as_mesh(a, resolution), _as_mesh(b, resolution)).disjoint


def _regular_fiber(a: Strip, b: Strip, phi: float, tries: int = 8) -> Tuple[float, SectionPair]:
    """Sections at phi, nudged by the guard band past non-regular fibers."""
    last: Exception = NonRegularFiber(f"fiber phi={phi:.6f}")
    for k in range(tries):
        candidate = (phi + k * GUARD_BAND) % TWO_PI
        try:
            return candidate, section_pair(a, b, candidate)
        except NonRegularFiber as e:
            last = e
    raise last


def precedes(
    a: Strip,
    b: Strip,
    phi: float = 0.5,
    seed: int = 0,
    check_disjoint: bool = True,
) -> bool:
    if check_disjoint and not strips_disjoint(a, b):
        raise DisjointnessViolated("strips intersect; ≺ is only defined for disjoint strips")
    _, pair = _regular_fiber(a, b, phi)
    return precedes_sections(pair.L1, pair.L2, np.random.default_rng(seed))


def segments_cross_count(Pa: np.ndarray, Pb: np.ndarray) -> int:
    """Crossings of two segments in the rho = 0 plane (0 or 1)."""
    return int(LineString(np.asarray(Pa)[:, :2]).crosses(LineString(np.asarray(Pb)[:, :2])))


class FiberParity(BaseModel):
    phi: float
    parity_ab: int
    parity_ba: int
    crossings: int
    consistent: bool
    apex_seed: List[int]


class SkippedFiber(BaseModel):
    phi: float
    reason: str


class AntisymmetryReport(BaseModel):
    fibers_tested: int
    results: List[FiberParity] = Field(default_factory=list)
    skipped: List[SkippedFiber] = Field(default_factory=list)
    discrepancies: List[float] = Field(default_factory=list)
    passed: bool


def _fiber_parities(a: Strip, b: Strip, phi: float, seed: int, index: int) -> FiberParity:
    phi, pair = _regular_fiber(a, b, phi)
    rng = np.random.default_rng([seed, index])
    ab = 0 if precedes_sections(pair.L1, pair.L2, rng) else 1
    ba = 0 if precedes_sections(pair.L2, pair.L1, rng) else 1
    crossings = segments_cross_count(pair.P1, pair.P2)
    consistent = (ab + ba) % 2 == crossings % 2
    return FiberParity(phi=phi, parity_ab=ab, parity_ba=ba, crossings=crossings, consistent=consistent, apex_seed=[seed, index])


def antisymmetry_suite(
    a: Strip,
    b: Strip,
    fibers: Union[int, Sequence[float]] = 100,
    seed: int = 0,
    verbose: bool = False,
) -> AntisymmetryReport:
    """Both parities at each fiber; exactly one may be even when P_a and P_b cross oddly."""
    if not strips_disjoint(a, b):
        raise PreconditionError("antisymmetry suite needs disjoint strips")
    if isinstance(fibers, int):
        fibers = list(np.random.default_rng(seed).uniform(0.0, TWO_PI, fibers))
    if verbose:
        print(f"🔧 ANTISYMMETRY SUITE: {len(fibers)} fibers")

    results: List[FiberParity] = []
    skipped: List[SkippedFiber] = []
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = {pool.submit(_fiber_parities, a, b, phi, seed, k): phi for k, phi in enumerate(fibers)}
        for future in as_completed(futures):
            phi = futures[future]
            try:
                results.append(future.result())
            except (NonRegularFiber, ExcessBoundaryPoints, DegeneratePosition) as e:
                skipped.append(SkippedFiber(phi=float(phi), reason=f"{type(e).__name__}: {e}"))
                if verbose:
                    print(f"   ⚠️ skipped fiber {phi:.6f}: {e}")
    results.sort(key=lambda r: r.phi)
    skipped.sort(key=lambda s: s.phi)

    bad = [r.phi for r in results if not r.consistent or (r.crossings % 2 == 1 and r.parity_ab == r.parity_ba)]
    report = AntisymmetryReport(
        fibers_tested=len(results), results=results, skipped=skipped,
        discrepancies=bad, passed=not bad and bool(results),
    )
    if verbose:
        mark = "✅" if report.passed else "❌"
        print(f"   {mark} {len(results)} fibers, {len(bad)} discrepancies, {len(skipped)} skipped")
    return report


class CycleReport(BaseModel):
    size: int
    phi: float
    relation: List[List[bool]]
    order: List[int]
    cycles: List[Tuple[int, int, int]] = Field(default_factory=list)
    antisymmetric: bool
    transitive: bool
    passed: bool


def relation_matrix(strips: Sequence[Strip], phi: float = 0.5, seed: int = 0) -> Tuple[float, List[List[bool]]]:
    n = len(strips)
    rel = [[False] * n for _ in range(n)]
    # one shared regular fiber for every pair
    for k in range(8):
        candidate = (phi + k * GUARD_BAND) % TWO_PI
        try:
            sections = [section_of(s, candidate) for s in strips]
            for s in sections:
                _open_arc(s)
            break
        except NonRegularFiber:
            continue
    else:
        raise NonRegularFiber(f"no regular fiber near phi={phi:.6f}")

    def job(i: int, j: int) -> Tuple[int, int, bool]:
        rng = np.random.default_rng([seed, i, j])
        return i, j, precedes_sections(sections[i], sections[j], rng)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = [pool.submit(job, i, j) for i in range(n) for j in range(n) if i != j]
        for future in as_completed(futures):
            i, j, bit = future.result()
            rel[i][j] = bit
    return candidate, rel


def _require_disjoint_family(strips: Sequence[Strip], minimum: int, what: str) -> None:
    n = len(strips)
    if n < minimum:
        raise PreconditionError(f"{what} needs at least {minimum} strips, got {n}")
    for i in range(n):
        for j in range(i + 1, n):
            if not strips_disjoint(strips[i], strips[j]):
                raise PreconditionError(f"strips {i} and {j} intersect")


def cycle_suite(strips: Sequence[Strip], phi: float = 0.5, seed: int = 0, verbose: bool = False) -> CycleReport:
    """Relation matrix of a pairwise-disjoint family of at least three strips; checks it is a strict total order."""
    _require_disjoint_family(strips, 3, "cycle suite")
    if verbose:
        print(f"🔧 CYCLE SUITE: {len(strips)} strips")
    report = _family_report(strips, phi, seed)
    if verbose:
        mark = "✅" if report.passed else "❌"
        print(f"   {mark} order {report.order}, {len(report.cycles)} cycles")
    return report


def _family_report(strips: Sequence[Strip], phi: float, seed: int) -> CycleReport:
    n = len(strips)
    phi, rel = relation_matrix(strips, phi, seed)
    antisymmetric = all(rel[i][j] != rel[j][i] for i in range(n) for j in range(n) if i != j)
    transitive = all(
        rel[i][k]
        for i in range(n) for j in range(n) for k in range(n)
        if len({i, j, k}) == 3 and rel[i][j] and rel[j][k]
    )
    cycles = [
        (i, j, k)
        for i in range(n) for j in range(n) for k in range(n)
        if i < j and i < k and len({i, j, k}) == 3 and rel[i][j] and rel[j][k] and rel[k][i]
    ]
    order = sorted(range(n), key=lambda i: -sum(rel[i]))
    return CycleReport(
        size=n, phi=phi, relation=rel, order=order, cycles=cycles,
        antisymmetric=antisymmetric, transitive=transitive,
        passed=antisymmetric and transitive and not cycles,
    )


def total_order(strips: Sequence[Strip], phi: float = 0.5, seed: int = 0) -> List[int]:
    """Indices of the strips from lowest to highest under ≺; any family of two or more."""
    _require_disjoint_family(strips, 2, "total order")
    report = _family_report(strips, phi, seed)
    if not report.passed:
        raise PreconditionError(f"relation is not a strict total order (cycles: {report.cycles})")
    return report.order


class JumpScanReport(BaseModel):
    applicable: bool
    reason: str = ""
    fibers: List[float] = Field(default_factory=list)
    parities: List[int] = Field(default_factory=list)
    jumps: List[float] = Field(default_factory=list)
    nearest_phi: Optional[float] = None


def parity_jump_scan(
    a: Strip,
    b: Strip,
    fibers: Union[int, Sequence[float]] = 64,
    seed: int = 0,
    section_tol: float = 1e-9,
) -> JumpScanReport:
    """Fibers where the parity of L_b through the cone over L_a flips."""
    if isinstance(fibers, int):
        fibers = list(TWO_PI * (np.arange(fibers) + 0.5) / fibers)
    used: List[float] = []
    parities: List[int] = []
    for k, phi in enumerate(fibers):
        try:
            phi, pair = _regular_fiber(a, b, phi)
        except (NonRegularFiber, ExcessBoundaryPoints) as e:
            return JumpScanReport(applicable=False, reason=f"{type(e).__name__}: {e}")
        if section_distance(pair.L1, pair.L2) <= section_tol:
            return JumpScanReport(applicable=False, reason=f"sections meet at fiber {phi:.6f}")
        rng = np.random.default_rng([seed, k])
        used.append(phi)
        parities.append(0 if precedes_sections(pair.L1, pair.L2, rng) else 1)

    jumps = []
    for k in range(len(used)):
        nxt = (k + 1) % len(used)
        if parities[k] != parities[nxt]:
            gap = (used[nxt] - used[k]) % TWO_PI
            jumps.append(float((used[k] + gap / 2.0) % TWO_PI))

    nearest = None
    if isinstance(a, StripMesh) and isinstance(b, StripMesh):
        nearest = meshes_disjoint(a, b).nearest_phi
    return JumpScanReport(applicable=True, fibers=used, parities=parities, jumps=jumps, nearest_phi=nearest)


def apex_parities(source: FiberSection, target: FiberSection, apexes: int = 10, seed: int = 0) -> List[int]:
    """Parity for several random apexes; all entries agree for a well-posed pair."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < apexes:
        try:
            out.append(sections_parity(source, target, random_apex([source, target], rng)))
        except DegeneratePosition:
            continue
    return out
