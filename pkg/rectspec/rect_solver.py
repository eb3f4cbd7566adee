from __future__ import annotations

"""
Rectangle Solver: intersections of the chord strip with its rotation by e^{iθ}

A state (x, y, z, w) at angle θ is an inscribed rectangle when the chords
{x, y} and {z, w} share a midpoint and (γ(x) − γ(y))² = e^{iθ} (γ(z) − γ(w))².
The diagonals then meet at angle θ/2 and the side ratio is tan(θ/4).

Pipeline per θ:
1. seed_search: pair sampled chords with nearby midpoints, score them
2. newton_refine: damped Newton with the analytic Jacobian
3. solve_at_theta: dedup modulo the chord symmetries

brute_force_existence answers the same question on a dense sample grid
without Newton, as a cross-check.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from . import curve_model as cm
from .curve_model import JordanCurve, TWO_PI
from .errors import DegenerateSolution, NoConvergence, PreconditionError, StepFailure
from .settings import RunConfig
from .state import WitnessDump


@dataclass
class RectangleWitness:
    x: float
    y: float
    z: float
    w: float
    theta: float
    residual: float
    vertices: Tuple[complex, complex, complex, complex]
    aspect_ratio: float

    @property
    def params(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.w])

    @property
    def r(self) -> float:
        return self.theta / math.pi

    def to_dump(self) -> WitnessDump:
        return WitnessDump(
            theta=float(self.theta),
            r=float(self.r),
            aspect=float(self.aspect_ratio),
            params=[float(p) for p in self.params],
            vertices=[(float(v.real), float(v.imag)) for v in self.vertices],
            residual=float(self.residual),
        )


@dataclass(frozen=True)
class SeedCandidate:
    x: float
    y: float
    z: float
    w: float
    score: float

    @property
    def params(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.w])


@dataclass
class Branch:
    points: List[Tuple[float, RectangleWitness]] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def interval(self) -> Tuple[float, float]:
        thetas = [p[0] for p in self.points]
        return (min(thetas), max(thetas)) if thetas else (math.nan, math.nan)


def residual_system(curve: JordanCurve, x: float, y: float, z: float, w: float, theta: float) -> np.ndarray:
    g = cm.evaluate(curve, np.array([x, y, z, w]))
    mid = g[0] + g[1] - g[2] - g[3]
    quad = (g[0] - g[1]) ** 2 - np.exp(1j * theta) * (g[2] - g[3]) ** 2
    return np.array([mid.real, mid.imag, quad.real, quad.imag])


def jacobian(curve: JordanCurve, x: float, y: float, z: float, w: float, theta: float) -> np.ndarray:
    """∂F/∂(x, y, z, w), rows (Re, Im) of the midpoint and squared-chord equations."""
    params = np.array([x, y, z, w])
    g = cm.evaluate(curve, params)
    d = cm.derivative(curve, params)
    rot = np.exp(1j * theta)
    d1 = g[0] - g[1]
    d2 = g[2] - g[3]
    mid = np.array([d[0], d[1], -d[2], -d[3]])
    quad = np.array([2 * d1 * d[0], -2 * d1 * d[1], -2 * rot * d2 * d[2], 2 * rot * d2 * d[3]])
    return np.vstack([mid.real, mid.imag, quad.real, quad.imag])


def theta_derivative(curve: JordanCurve, x: float, y: float, z: float, w: float, theta: float) -> np.ndarray:
    g = cm.evaluate(curve, np.array([z, w]))
    dq = -1j * np.exp(1j * theta) * (g[0] - g[1]) ** 2
    return np.array([0.0, 0.0, dq.real, dq.imag])


def fold_theta(theta: float) -> float:
    theta = float(theta) % TWO_PI
    return theta if theta <= math.pi else TWO_PI - theta


def _circ(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _chords_coincide(p: np.ndarray, tol: float) -> bool:
    x, y, z, w = p
    return max(_circ(x, z), _circ(y, w)) < tol or max(_circ(x, w), _circ(y, z)) < tol


def make_witness(curve: JordanCurve, params: Sequence[float], theta: float) -> RectangleWitness:
    """Witness in canonical form: parameters mod 2π and θ folded into [0, π]."""
    x, y, z, w = (float(p) % TWO_PI for p in params)
    theta = float(theta) % TWO_PI
    if theta > math.pi:
        x, y, z, w = z, w, x, y
        theta = TWO_PI - theta
    res = float(np.max(np.abs(residual_system(curve, x, y, z, w, theta))))
    gx, gy, gz, gw = cm.evaluate(curve, np.array([x, y, z, w]))
    return RectangleWitness(
        x=x, y=y, z=z, w=w,
        theta=theta,
        residual=res,
        vertices=(complex(gx), complex(gz), complex(gy), complex(gw)),
        aspect_ratio=math.tan(theta / 4.0),
    )


@dataclass(frozen=True)
class ChordTable:
    """Sampled chords of a curve and the chord pairs with nearby midpoints."""

    t: np.ndarray
    i: np.ndarray
    j: np.ndarray
    mids: np.ndarray
    deltas: np.ndarray
    diameter: float
    edge: float  # max |γ'| · 2π/N, the largest step between neighbouring samples
    first: np.ndarray
    second: np.ndarray


def _index_gap(p: np.ndarray, q: np.ndarray, n: int) -> np.ndarray:
    d = np.abs(p - q) % n
    return np.minimum(d, n - d)


def _sampled_chords(curve: JordanCurve, N: int, min_chord_rel: float):
    t = cm.parameter_grid(N)
    pts = cm.evaluate(curve, t)
    diam = cm.diameter(curve)
    speed = float(np.max(np.abs(cm.derivative(curve, cm.parameter_grid(4 * N)))))
    i, j = np.triu_indices(N, k=1)
    delta = pts[i] - pts[j]
    keep = np.abs(delta) >= min_chord_rel * diam
    i, j, delta = i[keep], j[keep], delta[keep]
    return t, i, j, (pts[i] + pts[j]) / 2.0, delta, diam, speed * TWO_PI / N


def _usable_pairs(i: np.ndarray, j: np.ndarray, a: np.ndarray, b: np.ndarray, N: int, near: int):
    """Drop pairs sharing a sample and nested pairs within `near` samples at both ends.

    Two chords that rotate about a common midpoint interleave along the curve
    (x < z < y < w); nested neighbours only shrink onto a degenerate chord.
    """
    shared = (i[a] == i[b]) | (i[a] == j[b]) | (j[a] == i[b]) | (j[a] == j[b])
    interleaved = ((i[a] < i[b]) & (i[b] < j[a])) ^ ((i[a] < j[b]) & (j[b] < j[a]))
    close = (_index_gap(i[a], i[b], N) <= near) & (_index_gap(j[a], j[b], N) <= near)
    close |= (_index_gap(i[a], j[b], N) <= near) & (_index_gap(j[a], i[b], N) <= near)
    keep = ~shared & ~(close & ~interleaved)
    return a[keep], b[keep]


@lru_cache(maxsize=32)
def chord_table(curve: JordanCurve, N: int = 64, min_chord_rel: float = 0.05) -> ChordTable:
    """Midpoints are bucketed with a KD-tree at the cell size diameter/√N.

    Chords shorter than min_chord_rel · diameter are left out.
    """
    if N < 32:
        raise PreconditionError(f"seed_search needs N >= 32, got {N}")
    t, i, j, mids, delta, diam, edge = _sampled_chords(curve, N, min_chord_rel)
    cell = diam / math.sqrt(N)
    tree = cKDTree(np.column_stack([mids.real, mids.imag]))
    pairs = tree.query_pairs(r=cell, output_type="ndarray").reshape(-1, 2)
    a, b = _usable_pairs(i, j, pairs[:, 0], pairs[:, 1], N, near=2)
    return ChordTable(
        t=t, i=i, j=j, mids=mids, deltas=delta, diameter=diam, edge=edge,
        first=np.concatenate([a, b]), second=np.concatenate([b, a]),
    )


def pair_scores(table: ChordTable, first: np.ndarray, second: np.ndarray, theta: float) -> np.ndarray:
    """Residual of each chord pair in units of the sample edge.

    The midpoint gap |γx + γy − γz − γw| and the squared-chord mismatch divided
    by |Δ₁| + |Δ₂| are both lengths; rounding a true rectangle to the sample
    grid moves each by at most about two edges.
    """
    mid_gap = 2.0 * np.abs(table.mids[first] - table.mids[second])
    d1, d2 = table.deltas[first], table.deltas[second]
    mismatch = np.abs(d1 * d1 - np.exp(1j * theta) * d2 * d2) / (np.abs(d1) + np.abs(d2))
    return np.maximum(mid_gap, mismatch) / table.edge


def seed_search(
    curve: JordanCurve,
    theta: float,
    N: int = 64,
    score_scale: float = 4.0,
    min_chord_rel: float = 0.05,
    limit: Optional[int] = None,
) -> List[SeedCandidate]:
    """Coarse chord pairs with nearby midpoints whose squared chords nearly match under e^{iθ}.

    Both orientations of every pair are scored; results are sorted by score.
    """
    table = chord_table(curve, N, min_chord_rel)
    first, second = table.first, table.second
    if not len(first):
        return []
    score = pair_scores(table, first, second, theta)

    sel = np.nonzero(score < score_scale)[0]
    order = sel[np.lexsort((second[sel], first[sel], score[sel]))]
    if limit is not None:
        order = order[:limit]
    t, i, j = table.t, table.i, table.j
    return [
        SeedCandidate(
            x=float(t[i[first[k]]]), y=float(t[j[first[k]]]),
            z=float(t[i[second[k]]]), w=float(t[j[second[k]]]),
            score=float(score[k]),
        )
        for k in order
    ]


def brute_force_existence(
    curve: JordanCurve,
    theta: float,
    N: int = 200,
    band: float = 3.0,
    min_chord_rel: float = 0.05,
) -> bool:
    """Whether some quadruple of N curve samples is a rectangle at θ up to `band` sample edges.

    Every chord pair with midpoints within band/2 edges is checked; no Newton
    step is taken. Rectangles with a diagonal shorter than
    min_chord_rel · diameter are below the resolution of the check.
    """
    if N < 32:
        raise PreconditionError(f"brute_force_existence needs N >= 32, got {N}")
    t, i, j, mids, delta, diam, edge = _sampled_chords(curve, N, min_chord_rel)
    tree = cKDTree(np.column_stack([mids.real, mids.imag]))
    pairs = tree.query_pairs(r=0.5 * band * edge, output_type="ndarray").reshape(-1, 2)
    a, b = _usable_pairs(i, j, pairs[:, 0], pairs[:, 1], N, near=1)
    if not len(a):
        return False
    table = ChordTable(t=t, i=i, j=j, mids=mids, deltas=delta, diameter=diam, edge=edge, first=a, second=b)
    # either chord may play {x, y}
    score = np.minimum(pair_scores(table, a, b, theta), pair_scores(table, b, a, theta))
    return bool(np.any(score <= band))


def newton_refine(
    curve: JordanCurve,
    seed: SeedCandidate,
    theta: float,
    residual_tol: float = 1e-10,
    max_iters: int = 50,
    chord_tol: Optional[float] = None,
    coincidence_tol: float = 1e-6,
) -> RectangleWitness:
    v = np.array(seed.params, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NoConvergence("seed is not finite")
    if _circ(v[0], v[1]) < coincidence_tol or _circ(v[2], v[3]) < coincidence_tol:
        raise DegenerateSolution("seed chord has coincident endpoints")

    F = residual_system(curve, *v, theta)
    converged = False
    for _ in range(max_iters):
        if np.max(np.abs(F)) < residual_tol:
            converged = True
            break
        J = jacobian(curve, *v, theta)
        step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        norm = np.linalg.norm(F)
        alpha = 1.0
        for _ in range(12):
            trial = v + alpha * step
            F_trial = residual_system(curve, *trial, theta)
            if np.linalg.norm(F_trial) < norm:
                break
            alpha *= 0.5
        else:
            raise NoConvergence(f"line search stalled at residual {np.max(np.abs(F)):.3e}")
        v, F = trial, F_trial
    if not converged:
        if np.max(np.abs(F)) >= residual_tol:
            raise NoConvergence(f"residual {np.max(np.abs(F)):.3e} after {max_iters} iterations")

    # polish while it still helps
    for _ in range(3):
        J = jacobian(curve, *v, theta)
        step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        F_next = residual_system(curve, *(v + step), theta)
        if np.max(np.abs(F_next)) >= np.max(np.abs(F)):
            break
        v, F = v + step, F_next

    if chord_tol is None:
        chord_tol = 1e-4 * cm.diameter(curve)
    g = cm.evaluate(curve, v)
    if abs(g[0] - g[1]) < chord_tol or abs(g[2] - g[3]) < chord_tol:
        raise DegenerateSolution("solution chord is shorter than the chord cutoff")
    if _chords_coincide(v, coincidence_tol):
        raise DegenerateSolution("solution uses the same chord twice")
    return make_witness(curve, v, theta)


def _canonical_key(w: RectangleWitness) -> np.ndarray:
    c1 = sorted((w.x, w.y))
    c2 = sorted((w.z, w.w))
    first, second = sorted([tuple(c1), tuple(c2)])
    return np.array(first + second)


def _is_duplicate(key: np.ndarray, keys: List[np.ndarray], tol: float) -> bool:
    for other in keys:
        d = np.abs(key - other) % TWO_PI
        if np.max(np.minimum(d, TWO_PI - d)) < tol:
            return True
    return False


def solve_at_theta(curve: JordanCurve, theta: float, config=None, **overrides) -> List[RectangleWitness]:
    """Deduplicated witnesses at θ (any angle; witnesses come back folded into [0, π])."""
    cfg = config or RunConfig()
    if overrides:
        cfg = cfg.model_copy(update=overrides)
    diam = cm.diameter(curve)
    seeds = seed_search(
        curve, theta, cfg.seed_points, cfg.score_scale, cfg.seed_chord_rel,
        limit=cfg.max_seeds * cfg.seed_overflow,
    )
    witnesses: List[RectangleWitness] = []
    keys: List[np.ndarray] = []
    for attempt, seed in enumerate(seeds):
        # past max_seeds, keep going only while nothing has converged
        if attempt >= cfg.max_seeds and witnesses:
            break
        try:
            wit = newton_refine(
                curve, seed, theta,
                residual_tol=cfg.residual_tol,
                max_iters=cfg.max_iters,
                chord_tol=cfg.chord_rel * diam,
            )
        except (NoConvergence, DegenerateSolution):
            continue
        key = _canonical_key(wit)
        if _is_duplicate(key, keys, cfg.dedup_tol):
            continue
        keys.append(key)
        witnesses.append(wit)
        if len(witnesses) >= cfg.max_witnesses:
            break
    return witnesses


def _null_basis(A: np.ndarray, rel_tol: float = 1e-8) -> Tuple[np.ndarray, int]:
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > rel_tol * s[0])) if s[0] > 0 else 0
    return vt[rank:].T, rank


def continue_branch(
    curve: JordanCurve,
    witness: RectangleWitness,
    dtheta: float,
    residual_tol: float = 1e-10,
    fold_tol: float = 1e-3,
    max_retries: int = 8,
    max_steps: Optional[int] = None,
    theta_floor: Optional[float] = None,
) -> Branch:
    """Pseudo-arclength continuation of a witness in θ.

    The tangent is the direction in the kernel of [∂F/∂v | ∂F/∂θ] closest to the
    previous one; the branch stops at a fold (θ-component of the tangent vanishes
    or flips), at a domain end, or at a degenerate rectangle.
    """
    if dtheta == 0:
        raise ValueError("dtheta must be non-zero")
    step0 = abs(dtheta)
    theta_floor = step0 / 2.0 if theta_floor is None else theta_floor
    max_steps = max_steps or int(4 * math.pi / step0) + 10
    chord_tol = 1e-4 * cm.diameter(curve)

    def augmented(X: np.ndarray) -> np.ndarray:
        return np.hstack([jacobian(curve, *X), theta_derivative(curve, *X)[:, None]])

    X = np.append(witness.params, witness.theta)
    basis, rank = _null_basis(augmented(X))
    if rank < 3:
        raise StepFailure(f"singular Jacobian at start (rank {rank})")
    pref = np.zeros(5)
    pref[4] = math.copysign(1.0, dtheta)
    T = basis @ (basis.T @ pref)
    branch = Branch(points=[(float(X[4]), witness)])
    if np.linalg.norm(T) < 1e-12:
        branch.stop_reason = "fold"
        return branch
    T /= np.linalg.norm(T)

    for _ in range(max_steps):
        h = min(step0 / max(abs(T[4]), 0.25), 4 * step0)
        retries = 0
        while True:
            Xp = X + h * T
            Xn = Xp.copy()
            ok = False
            for _ in range(12):
                F = residual_system(curve, *Xn)
                G = np.append(F, T @ (Xn - Xp))
                if np.max(np.abs(F)) < residual_tol and abs(G[4]) < 1e-12:
                    ok = True
                    break
                A = np.vstack([augmented(Xn), T])
                delta, *_ = np.linalg.lstsq(A, -G, rcond=None)
                Xn = Xn + delta
                if not np.all(np.isfinite(Xn)):
                    break
            if ok:
                break
            retries += 1
            if retries > max_retries:
                raise StepFailure(f"corrector failed {retries} times near θ={X[4]:.6f}")
            h /= 2.0

        theta_new = float(Xn[4])
        if theta_new > math.pi or theta_new < theta_floor:
            end = math.pi if theta_new > math.pi else theta_floor
            try:
                seed = SeedCandidate(*X[:4], score=0.0)
                branch.points.append((end, newton_refine(curve, seed, end, residual_tol, chord_tol=chord_tol)))
            except (NoConvergence, DegenerateSolution):
                pass
            branch.stop_reason = "domain_end"
            return branch

        g = cm.evaluate(curve, Xn[:4])
        if abs(g[0] - g[1]) < chord_tol or abs(g[2] - g[3]) < chord_tol or _chords_coincide(Xn[:4], 1e-6):
            branch.stop_reason = "degenerate"
            return branch
        branch.points.append((theta_new, make_witness(curve, Xn[:4], theta_new)))

        basis, rank = _null_basis(augmented(Xn))
        T_new = basis @ (basis.T @ T) if basis.shape[1] else np.zeros(5)
        norm = np.linalg.norm(T_new)
        if rank < 3 or norm < 1e-12:
            branch.stop_reason = "fold"
            return branch
        T_new /= norm
        X = Xn
        if abs(T_new[4]) < fold_tol or T_new[4] * T[4] < 0:
            branch.stop_reason = "fold"
            return branch
        T = T_new

    branch.stop_reason = "max_steps"
    return branch
