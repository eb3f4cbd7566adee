from __future__ import annotations

"""
Curve Model: smooth Jordan curves as truncated Fourier series

    γ(t) = Σ_{k=-K..K} c_k e^{ikt},  t in radians, periodic mod 2π

Every downstream module evaluates curves through this file, so evaluation,
differentiation and sampling are vectorized over t.
"""

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist
from shapely.geometry import LinearRing

from .errors import CurveFitError, CurveGenerationError
from .state import CurveFile

TWO_PI = 2.0 * math.pi

ParamLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class JordanCurve:
    """Fourier coefficients c_k ordered k = -K..K."""

    coefficients: np.ndarray
    K: int
    name: str = "curve"
    fit_residual: Optional[float] = None

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=complex).copy()
        if coeffs.shape != (2 * self.K + 1,):
            raise ValueError(f"expected {2 * self.K + 1} coefficients for K={self.K}, got {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.K:
            return 0j
        return complex(self.coefficients[k + self.K])

    @classmethod
    def from_modes(cls, modes: dict, K: Optional[int] = None, name: str = "curve") -> "JordanCurve":
        """Build from a sparse {k: c_k} mapping."""
        order = K if K is not None else max(abs(k) for k in modes)
        coeffs = np.zeros(2 * order + 1, dtype=complex)
        for k, c in modes.items():
            coeffs[k + order] = c
        return cls(coeffs, order, name=name)

    def same_coefficients(self, other: "JordanCurve", tol: float = 0.0) -> bool:
        return self.K == other.K and bool(np.all(np.abs(self.coefficients - other.coefficients) <= tol))


@dataclass(frozen=True)
class CurveJet:
    t: float
    value: complex
    deriv: complex
    deriv2: complex


@dataclass
class ValidationVerdict:
    valid: bool
    issues: List[str] = field(default_factory=list)
    self_intersections: List[Tuple[float, float]] = field(default_factory=list)
    min_speed: float = 0.0

    def summary(self) -> str:
        return "valid" if self.valid else "; ".join(self.issues)


def unit_circle() -> JordanCurve:
    return JordanCurve.from_modes({1: 1.0}, name="circle")


def ellipse(a: float, b: float, name: Optional[str] = None) -> JordanCurve:
    """Axis-aligned ellipse with x-semiaxis a and y-semiaxis b."""
    return JordanCurve.from_modes({1: (a + b) / 2.0, -1: (a - b) / 2.0}, name=name or f"ellipse-{a:g}-{b:g}")


def _basis(curve: JordanCurve, t: ParamLike) -> np.ndarray:
    return np.exp(1j * np.multiply.outer(np.asarray(t, dtype=float), curve.ks))


def evaluate(curve: JordanCurve, t: ParamLike):
    out = _basis(curve, t) @ curve.coefficients
    return complex(out) if np.ndim(out) == 0 else out


def derivative(curve: JordanCurve, t: ParamLike):
    out = _basis(curve, t) @ (1j * curve.ks * curve.coefficients)
    return complex(out) if np.ndim(out) == 0 else out


def second_derivative(curve: JordanCurve, t: ParamLike):
    out = _basis(curve, t) @ (-(curve.ks ** 2) * curve.coefficients)
    return complex(out) if np.ndim(out) == 0 else out


def jet(curve: JordanCurve, t: float) -> CurveJet:
    return CurveJet(
        t=float(t) % TWO_PI,
        value=evaluate(curve, t),
        deriv=derivative(curve, t),
        deriv2=second_derivative(curve, t),
    )


def parameter_grid(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def sample(curve: JordanCurve, n: int) -> np.ndarray:
    return evaluate(curve, parameter_grid(n))


def diameter(curve: JordanCurve, n: int = 512) -> float:
    pts = sample(curve, n)
    return float(pdist(np.column_stack([pts.real, pts.imag])).max())


def curvature(curve: JordanCurve, t: ParamLike):
    d1 = derivative(curve, t)
    d2 = second_derivative(curve, t)
    return np.abs(np.imag(np.conj(d1) * d2)) / np.abs(d1) ** 3


def max_curvature(curve: JordanCurve, n: int = 4096) -> float:
    return float(np.max(curvature(curve, parameter_grid(n))))


def turning_number(curve: JordanCurve, n: int = 4096) -> int:
    """Number of turns of the tangent; +1 for a positively oriented Jordan curve."""
    angles = np.angle(derivative(curve, parameter_grid(n)))
    steps = np.angle(np.exp(1j * np.diff(np.append(angles, angles[0]))))
    return int(round(float(steps.sum()) / TWO_PI))


def winding_number(curve: JordanCurve, point: complex = 0j, n: int = 4096) -> int:
    """Winding of γ around `point`; ±1 inside a Jordan curve, 0 outside."""
    angles = np.angle(sample(curve, n) - point)
    steps = np.angle(np.exp(1j * np.diff(np.append(angles, angles[0]))))
    return int(round(float(steps.sum()) / TWO_PI))


def _circular_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.abs(a - b) % TWO_PI
    return np.minimum(d, TWO_PI - d)


def validate(
    curve: JordanCurve,
    n_val: int = 4096,
    delta_xy_rel: float = 1e-6,
    delta_t: Optional[float] = None,
    speed_rel: float = 1e-9,
    max_reported: int = 20,
) -> ValidationVerdict:
    """Numerical injectivity and immersion check on a uniform parameter grid.

    Never raises; failures are listed in the verdict.
    """
    issues: List[str] = []
    if abs(curve.coefficient(1)) == 0.0 and abs(curve.coefficient(-1)) == 0.0:
        issues.append("c_1 and c_-1 are both zero")

    t = parameter_grid(n_val)
    pts = evaluate(curve, t)
    xy = np.column_stack([pts.real, pts.imag])
    diam = float(pdist(xy[:: max(1, n_val // 512)]).max()) if n_val > 1 else 0.0
    if diam == 0.0:
        issues.append("curve is a single point")
        return ValidationVerdict(valid=False, issues=issues, min_speed=0.0)

    speed = np.abs(derivative(curve, t))
    min_speed = float(speed.min())
    if min_speed <= speed_rel * diam:
        where = float(t[int(np.argmin(speed))])
        issues.append(f"derivative vanishes near t={where:.6f}")

    gap_t = delta_t if delta_t is not None else 4.0 * TWO_PI / n_val
    pairs = cKDTree(xy).query_pairs(r=delta_xy_rel * diam, output_type="ndarray")
    crossings: List[Tuple[float, float]] = []
    if len(pairs):
        far = _circular_gap(t[pairs[:, 0]], t[pairs[:, 1]]) > gap_t
        for i, j in pairs[far][:max_reported]:
            crossings.append((float(t[i]), float(t[j])))
    if crossings:
        issues.append(f"self-intersection: {len(crossings)} coincident sample pairs")
    elif not LinearRing(xy).is_simple:
        issues.append("self-intersection: sampled polygon is not simple")

    return ValidationVerdict(
        valid=not issues,
        issues=issues,
        self_intersections=crossings,
        min_speed=min_speed,
    )


def from_samples(
    points: Sequence[complex],
    K: int,
    residual_tol: float = 1e-6,
    name: str = "fitted",
) -> JordanCurve:
    """Least-squares Fourier fit to points assumed uniformly spaced in parameter."""
    pts = np.asarray(points, dtype=complex)
    n = len(pts)
    if n < 2 * K + 1:
        raise CurveFitError(f"too few points: {n} < 2K+1 = {2 * K + 1}")
    ks = np.arange(-K, K + 1)
    basis = np.exp(1j * np.multiply.outer(parameter_grid(n), ks))
    coeffs, *_ = np.linalg.lstsq(basis, pts, rcond=None)
    residual = float(np.max(np.abs(basis @ coeffs - pts)))
    scale = max(1.0, float(np.max(np.abs(pts))))
    if residual > residual_tol * scale:
        raise CurveFitError(f"fit residual {residual:.3e} above threshold {residual_tol * scale:.3e}")
    return JordanCurve(coeffs, K, name=name, fit_residual=residual)


def random_smooth_curve(
    seed: int,
    K: int = 6,
    decay: float = 0.2,
    attempts: int = 20,
) -> JordanCurve:
    """c_1 = 1 plus random modes with |c_k| <= decay / k², regenerated until valid."""
    if decay < 0:
        raise ValueError("decay must be non-negative")
    rng = np.random.default_rng(seed)
    ks = np.arange(-K, K + 1)
    for _ in range(attempts):
        mags = rng.uniform(0.0, 1.0, size=ks.shape) * decay / np.where(ks == 0, 1, ks ** 2)
        phases = rng.uniform(0.0, TWO_PI, size=ks.shape)
        coeffs = mags * np.exp(1j * phases)
        coeffs[ks == 0] = 0.0
        coeffs[ks == 1] = 1.0
        curve = JordanCurve(coeffs, K, name=f"random-{seed}")
        if validate(curve).valid:
            return curve
    raise CurveGenerationError(f"no valid curve after {attempts} attempts (seed={seed}, decay={decay})")


# I/O

def curve_to_file(curve: JordanCurve) -> CurveFile:
    return CurveFile(K=curve.K, coeffs=[(float(c.real), float(c.imag)) for c in curve.coefficients])


def curve_from_file(data: CurveFile, name: str = "curve") -> JordanCurve:
    coeffs = np.array([complex(re, im) for re, im in data.coeffs])
    return JordanCurve(coeffs, data.K, name=name)


def save_curve(curve: JordanCurve, path: str) -> str:
    with open(path, "w") as f:
        f.write(curve_to_file(curve).model_dump_json())
    return path


def load_curve(path: str) -> JordanCurve:
    with open(path, "r") as f:
        data = CurveFile.model_validate(json.load(f))
    return curve_from_file(data, name=path)


def load_samples(path: str) -> np.ndarray:
    """Two-column CSV (re, im), one point per row; a header row is skipped."""
    frame = pd.read_csv(path, header=None, comment="#")
    frame = frame.apply(pd.to_numeric, errors="coerce").dropna()
    if frame.shape[1] < 2:
        raise CurveFitError(f"{path}: expected two columns re,im")
    if frame.empty:
        raise CurveFitError(f"{path}: no numeric rows")
    return frame.iloc[:, 0].to_numpy() + 1j * frame.iloc[:, 1].to_numpy()
