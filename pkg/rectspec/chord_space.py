from __future__ import annotations

"""
Chord Space: unordered chords of a curve mapped into ℂ × S¹ × [0, ∞)

    {x, y} ↦ ((γ(x) + γ(y)) / 2, (γ(x) − γ(y))²)

The second coordinate w is split into its angle phi (the S¹ coordinate) and the
radial height rho = |w| − ε, so removing the disk |w| < ε leaves the half-line
[0, ∞) and rotating w is exactly a shift of phi.
"""

import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy import optimize

from . import curve_model as cm
from .curve_model import JordanCurve, TWO_PI
from .errors import (
    CurveValidationError,
    DegenerateChord,
    EpsilonSelectionError,
    ExcessBoundaryPoints,
    NonRegularFiber,
)
from .state import EndpointDump, FiberSectionDump


@dataclass(frozen=True)
class Chord:
    t1: float
    t2: float

    @classmethod
    def of(cls, a: float, b: float) -> "Chord":
        a, b = float(a) % TWO_PI, float(b) % TWO_PI
        return cls(min(a, b), max(a, b))

    def delta(self, curve: JordanCurve) -> complex:
        return cm.evaluate(curve, self.t1) - cm.evaluate(curve, self.t2)


@dataclass(frozen=True)
class StripPoint:
    midpoint: complex
    w: complex
    phi: float
    rho: float

    def as_array(self) -> np.ndarray:
        return np.array([self.midpoint.real, self.midpoint.imag, self.phi, self.rho])


@dataclass(frozen=True)
class TorusLinkSpec:
    """T(n, k) = {(g, r) in S¹ × S¹ : r^k = g^n}."""

    n: int
    k: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1:
            raise ValueError("torus link indices must be positive")

    @property
    def component_count(self) -> int:
        return math.gcd(self.n, self.k)

    @property
    def winding_pattern(self) -> Tuple[int, int]:
        """(ℂ-winding, S¹-winding) of each component."""
        d = self.component_count
        return self.k // d, self.n // d

    def contains(self, g: complex, r: complex, tol: float = 1e-9) -> bool:
        g = g / abs(g)
        r = r / abs(r)
        return abs(r ** self.k - g ** self.n) <= tol

    def components(self, samples: int = 256) -> List[np.ndarray]:
        """Each component as an array of (g, r) pairs, shape (samples, 2) complex."""
        d = self.component_count
        kp, np_ = self.winding_pattern
        s = TWO_PI * np.arange(samples) / samples
        out = []
        for j in range(d):
            g = np.exp(1j * kp * s)
            r = np.exp(1j * (np_ * s + TWO_PI * j / self.k))
            out.append(np.column_stack([g, r]))
        return out


@dataclass
class SectionEndpoint:
    t: Optional[float]
    point: np.ndarray  # (m_re, m_im, 0.0)


@dataclass
class FiberSection:
    """Slice of a strip over one fiber angle: polylines of (m_re, m_im, rho)."""

    phi: float
    polylines: List[np.ndarray]
    endpoints: List[SectionEndpoint] = field(default_factory=list)

    def segments(self) -> np.ndarray:
        """All polyline segments, shape (m, 2, 3)."""
        parts = [np.stack([p[:-1], p[1:]], axis=1) for p in self.polylines if len(p) > 1]
        if not parts:
            return np.zeros((0, 2, 3))
        return np.concatenate(parts, axis=0)

    def open_polylines(self) -> Iterator[np.ndarray]:
        for p in self.polylines:
            if not np.allclose(p[0], p[-1]):
                yield p

    def closed_polylines(self) -> Iterator[np.ndarray]:
        for p in self.polylines:
            if len(p) > 2 and np.allclose(p[0], p[-1]):
                yield p

    def max_height(self) -> float:
        return max((float(p[:, 2].max()) for p in self.polylines if len(p)), default=0.0)

    def to_dump(self) -> FiberSectionDump:
        return FiberSectionDump(
            phi=float(self.phi),
            polylines=[[tuple(float(v) for v in row) for row in p] for p in self.polylines],
            endpoints=[EndpointDump(t=e.t) for e in self.endpoints],
        )


def strip_map(curve: JordanCurve, chord: Chord, eps: float, chord_tol: float = 0.0) -> StripPoint:
    a = cm.evaluate(curve, chord.t1)
    b = cm.evaluate(curve, chord.t2)
    delta = a - b
    if abs(delta) < chord_tol or abs(delta) ** 2 < eps:
        raise DegenerateChord(f"chord {{{chord.t1:.6f}, {chord.t2:.6f}}} has |Δ|² = {abs(delta) ** 2:.3e} < ε = {eps:.3e}")
    w = delta * delta
    return StripPoint(
        midpoint=(a + b) / 2.0,
        w=w,
        phi=float(np.angle(w)) % TWO_PI,
        rho=abs(w) - eps,
    )


def choose_epsilon(curve: JordanCurve, eps_rel: float = 1e-3) -> float:
    """ε = (eps_rel · diameter)², checked against the curvature feature scale."""
    verdict = cm.validate(curve)
    if not verdict.valid:
        raise CurveValidationError(f"cannot choose ε for an invalid curve: {verdict.summary()}", verdict)
    eps = (eps_rel * cm.diameter(curve)) ** 2
    kappa = cm.max_curvature(curve)
    if kappa > 0 and eps >= (1.0 / kappa) ** 2:
        raise EpsilonSelectionError(
            f"ε = {eps:.3e} is not below the squared feature scale {(1.0 / kappa) ** 2:.3e}; pass ε explicitly"
        )
    return eps


def _root_in(f, lo: float, hi: float, xtol: float) -> float:
    """brentq on [lo, hi]; an endpoint is returned when roundoff hides the sign change."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0 or fhi == 0.0 or flo * fhi > 0:
        return lo if abs(flo) <= abs(fhi) else hi
    return float(optimize.brentq(f, lo, hi, xtol=xtol))


def boundary_direction(curve: JordanCurve, t: float) -> float:
    """Angle of (γ'(t))², the phi limit of strip_map as the chord shrinks to t."""
    d = cm.derivative(curve, t)
    return float(np.angle(d * d)) % TWO_PI


def tangency_parameters(
    curve: JordanCurve,
    phi: float,
    n: int = 4096,
    regular_tol: float = 1e-6,
) -> List[float]:
    """Parameters t where (γ'(t))² points along e^{iφ}.

    Raises NonRegularFiber when a tangency is degenerate within tolerance.
    """
    rot = np.exp(-1j * phi)
    t = cm.parameter_grid(n)
    d1 = cm.derivative(curve, t)
    z = d1 * d1 * rot
    g = z.imag
    scale = float(np.max(np.abs(d1)) ** 2)

    def g_of(x: float) -> float:
        d = cm.derivative(curve, x)
        return float((d * d * rot).imag)

    roots: List[float] = []
    for i in range(n):
        j, k = (i + 1) % n, (i - 1) % n
        if z.real[i] <= 0 and z.real[j] <= 0:
            continue
        if g[i] == 0.0 and z.real[i] > 0:
            roots.append(float(t[i]))
        elif g[i] * g[j] < 0:
            hi = t[j] if j else TWO_PI
            roots.append(_root_in(g_of, float(t[i]), float(hi), 1e-14) % TWO_PI)
        elif (
            z.real[i] > 0
            and abs(g[i]) < regular_tol * scale
            and g[k] * g[i] > 0
            and abs(g[i]) <= min(abs(g[k]), abs(g[j]))
        ):
            raise NonRegularFiber(f"fiber phi={phi:.6f} grazes a tangency near t={t[i]:.6f}")

    for r in roots:
        d1r = cm.derivative(curve, r)
        slope = (2.0 * d1r * cm.second_derivative(curve, r) * rot).imag
        if abs(slope) < regular_tol * scale:
            raise NonRegularFiber(f"degenerate tangency at t={r:.6f} for phi={phi:.6f}")
    return sorted(roots)


def _boundary_chord(curve: JordanCurve, t_star: float, phi: float, eps: float) -> Tuple[float, float]:
    """Chord near the tangency t_star with direction phi/2 and |Δ|² = ε."""
    rot = np.exp(-1j * phi)
    speed = abs(cm.derivative(curve, t_star))
    half = math.sqrt(eps) / (2.0 * speed)

    def system(v: np.ndarray) -> np.ndarray:
        delta = cm.evaluate(curve, v[0]) - cm.evaluate(curve, v[1])
        w = delta * delta
        return np.array([(w * rot).imag / eps, abs(w) / eps - 1.0])

    # hybr may report slow progress once |Δ|² sits at its roundoff floor; judge by the residual
    sol = optimize.root(system, np.array([t_star - half, t_star + half]), method="hybr", tol=1e-12)
    if not np.all(np.isfinite(sol.x)) or np.max(np.abs(sol.fun)) > 1e-8:
        raise NonRegularFiber(f"boundary chord near t={t_star:.6f} did not converge: {sol.message}")
    return float(sol.x[0]), float(sol.x[1])


def fiber_section(
    curve: JordanCurve,
    phi: float,
    resolution: int = 1024,
    eps: Optional[float] = None,
    bisection_tol: float = 1e-10,
) -> FiberSection:
    """Slice of the curve's strip at fiber angle phi.

    Each grid point t1 is paired with the chord partner t2 in (t1, t1 + 2π)
    solving arg((γ(t1) − γ(t2))²) = phi; partners are polished with brentq.
    """
    phi = float(phi) % TWO_PI
    if eps is None:
        eps = choose_epsilon(curve)
    tangencies = tangency_parameters(curve, phi)
    if len(tangencies) > 2:
        raise ExcessBoundaryPoints(f"fiber phi={phi:.6f} has {len(tangencies)} boundary points")

    rot = np.exp(-1j * phi)
    n = resolution
    h = TWO_PI / n
    t = cm.parameter_grid(n)
    pts = cm.evaluate(curve, t)
    offsets = 1 + np.arange(n - 1)
    cols = (np.arange(n)[:, None] + offsets[None, :]) % n
    delta = pts[:, None] - pts[cols]
    z = delta * delta * rot
    f, re = z.imag, z.real
    ok = (re > 0) & (np.abs(delta) ** 2 >= eps)

    hit_exact = ok & (f == 0.0)
    hit_bracket = ok[:, :-1] & ok[:, 1:] & (f[:, :-1] * f[:, 1:] < 0)

    chords: List[Tuple[float, float]] = []
    for i, m in zip(*np.nonzero(hit_exact)):
        chords.append((t[i], t[i] + offsets[m] * h))
    for i, m in zip(*np.nonzero(hit_bracket)):
        a = t[i]
        p_a = pts[i]

        def f_of(x: float) -> float:
            d = p_a - cm.evaluate(curve, x)
            return float((d * d * rot).imag)

        lo, hi = a + offsets[m] * h, a + offsets[m + 1] * h
        chords.append((a, _root_in(f_of, lo, hi, bisection_tol)))

    direction = np.exp(0.5j * phi)
    rows = []
    for t1, t2 in chords:
        p1, p2 = cm.evaluate(curve, t1), cm.evaluate(curve, t2)
        mid = (p1 + p2) / 2.0
        rho = abs(p1 - p2) ** 2 - eps
        if rho <= 0:
            continue
        rows.append(((np.conj(direction) * mid).imag, mid.real, mid.imag, rho))

    endpoints: List[SectionEndpoint] = []
    for t_star in tangencies:
        a, b = _boundary_chord(curve, t_star, phi, eps)
        mid = (cm.evaluate(curve, a) + cm.evaluate(curve, b)) / 2.0
        point = np.array([mid.real, mid.imag, 0.0])
        endpoints.append(SectionEndpoint(t=float(t_star), point=point))
        rows.append(((np.conj(direction) * mid).imag, mid.real, mid.imag, 0.0))

    rows.sort(key=lambda r: r[0])
    poly = np.array([r[1:] for r in rows]) if rows else np.zeros((0, 3))
    return FiberSection(phi=phi, polylines=[poly] if len(poly) else [], endpoints=endpoints)


@dataclass
class CurveStrip:
    """The strip of a curve rotated by e^{i·theta}; sections are read off the unrotated strip."""

    curve: JordanCurve
    eps: float
    theta: float = 0.0
    resolution: int = 512

    def rotated(self, theta: float) -> "CurveStrip":
        return CurveStrip(self.curve, self.eps, (self.theta + theta) % TWO_PI, self.resolution)

    def section(self, phi: float) -> FiberSection:
        base = fiber_section(self.curve, (phi - self.theta) % TWO_PI, self.resolution, self.eps)
        base.phi = float(phi) % TWO_PI
        return base

    def strip_point(self, chord: Chord) -> StripPoint:
        p = strip_map(self.curve, chord, self.eps)
        return StripPoint(p.midpoint, p.w * np.exp(1j * self.theta), (p.phi + self.theta) % TWO_PI, p.rho)
