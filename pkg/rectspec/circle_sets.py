from __future__ import annotations

"""
Circle Sets: finite unions of half-open arcs on S¹ = ℝ/ℤ

Angles are normalized so the full circle has length 1. Endpoints are either
all Fractions (exact mode) or floats (snapped at 1e-12). The algebra covers
the Haar-measure bookkeeping behind the one-third bound: inverses, Minkowski
products, Kemperman's inequality and the triple-product identity test.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from .errors import ArcDomainError, PreconditionError
from .state import ArcSetDump

Endpoint = Union[Fraction, float]
SNAP = 1e-12


def _is_exact(values: Iterable[Endpoint]) -> bool:
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values)


def _floor(x: Endpoint) -> int:
    return math.floor(x)


@dataclass(frozen=True)
class ArcSet:
    """Sorted, disjoint, non-touching arcs [a, b) with 0 <= a < b <= 1."""

    arcs: Tuple[Tuple[Endpoint, Endpoint], ...] = ()
    exact: bool = True

    @classmethod
    def empty(cls, exact: bool = True) -> "ArcSet":
        return cls((), exact)

    @classmethod
    def full(cls, exact: bool = True) -> "ArcSet":
        one = Fraction(1) if exact else 1.0
        zero = Fraction(0) if exact else 0.0
        return cls(((zero, one),), exact)

    @classmethod
    def from_intervals(cls, intervals: Iterable[Tuple[Endpoint, Endpoint]], exact: Optional[bool] = None) -> "ArcSet":
        """Any intervals on ℝ, reduced mod 1; an interval of length >= 1 covers the circle."""
        intervals = list(intervals)
        flat = [v for pair in intervals for v in pair]
        if exact is None:
            exact = _is_exact(flat)
        conv = Fraction if exact else float
        pieces: List[Tuple[Endpoint, Endpoint]] = []
        for a, b in intervals:
            a, b = conv(a), conv(b)
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ArcDomainError(f"non-finite endpoint in ({a}, {b})")
            if b < a:
                raise ArcDomainError(f"interval end {b} precedes start {a}")
            length = b - a
            if length <= 0:
                continue
            if length >= 1:
                return cls.full(exact)
            start = a - _floor(a)
            end = start + length
            if end > 1:
                pieces.append((start, conv(1)))
                pieces.append((conv(0), end - 1))
            else:
                pieces.append((start, end))
        return cls(_normalize(pieces, exact), exact)

    @property
    def measure(self) -> Endpoint:
        return sum((b - a for a, b in self.arcs), Fraction(0) if self.exact else 0.0)

    @property
    def is_empty(self) -> bool:
        return not self.arcs

    @property
    def is_full(self) -> bool:
        return len(self.arcs) == 1 and self.arcs[0][0] == 0 and self.arcs[0][1] == 1

    def contains(self, x: Endpoint) -> bool:
        x = x - _floor(x)
        return any(a <= x < b for a, b in self.arcs)

    def circular_arcs(self) -> List[Tuple[Endpoint, Endpoint]]:
        """Arcs with the wrap-around piece re-joined as (a, b + 1)."""
        arcs = list(self.arcs)
        if len(arcs) >= 2 and arcs[0][0] == 0 and arcs[-1][1] == 1:
            head = arcs.pop(0)
            last = arcs.pop()
            arcs.append((last[0], head[1] + 1))
        return arcs

    def as_float(self) -> "ArcSet":
        return ArcSet(tuple((float(a), float(b)) for a, b in self.arcs), False)

    def to_dump(self) -> ArcSetDump:
        return ArcSetDump(arcs=[(float(a), float(b)) for a, b in self.arcs])

    @classmethod
    def from_dump(cls, dump: ArcSetDump) -> "ArcSet":
        return cls.from_intervals(dump.arcs, exact=False)


def _normalize(pieces: List[Tuple[Endpoint, Endpoint]], exact: bool) -> Tuple[Tuple[Endpoint, Endpoint], ...]:
    if not exact:
        snapped = []
        for a, b in pieces:
            a = 0.0 if abs(a) < SNAP else (1.0 if abs(a - 1) < SNAP else a)
            b = 0.0 if abs(b) < SNAP else (1.0 if abs(b - 1) < SNAP else b)
            if b - a > SNAP:
                snapped.append((a, b))
        pieces = snapped
    tol = 0 if exact else SNAP
    merged: List[List[Endpoint]] = []
    for a, b in sorted(pieces):
        if merged and a <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


def _mode(*sets: ArcSet) -> bool:
    return all(s.exact for s in sets)


def inverse(A: ArcSet) -> ArcSet:
    return ArcSet.from_intervals(((1 - b, 1 - a) for a, b in A.arcs), exact=A.exact)


def product(A: ArcSet, B: ArcSet) -> ArcSet:
    """Minkowski sum of angles mod 1."""
    exact = _mode(A, B)
    return ArcSet.from_intervals(
        ((a1 + a2, b1 + b2) for a1, b1 in A.arcs for a2, b2 in B.arcs), exact=exact
    )


def union(A: ArcSet, B: ArcSet) -> ArcSet:
    return ArcSet.from_intervals(list(A.arcs) + list(B.arcs), exact=_mode(A, B))


def intersection(A: ArcSet, B: ArcSet) -> ArcSet:
    pieces = []
    for a1, b1 in A.arcs:
        for a2, b2 in B.arcs:
            lo, hi = max(a1, a2), min(b1, b2)
            if lo < hi:
                pieces.append((lo, hi))
    return ArcSet.from_intervals(pieces, exact=_mode(A, B))


def complement(A: ArcSet) -> ArcSet:
    zero, one = (Fraction(0), Fraction(1)) if A.exact else (0.0, 1.0)
    gaps = []
    cursor = zero
    for a, b in A.arcs:
        if a > cursor:
            gaps.append((cursor, a))
        cursor = b
    if cursor < one:
        gaps.append((cursor, one))
    return ArcSet.from_intervals(gaps, exact=A.exact)


def symmetric_difference_measure(A: ArcSet, B: ArcSet) -> Endpoint:
    return union(A, B).measure - intersection(A, B).measure


class KempermanVerdict(BaseModel):
    measure_a: float
    measure_b: float
    lhs: float
    rhs: float
    holds: bool


def kemperman_check(A: ArcSet, B: ArcSet, tol: float = 1e-12) -> KempermanVerdict:
    """μ(A·B) >= min(1, μA + μB); an empty factor makes the product empty."""
    lhs = product(A, B).measure
    if A.is_empty or B.is_empty:
        rhs = 0
    else:
        rhs = min(1, A.measure + B.measure)
    return KempermanVerdict(
        measure_a=float(A.measure),
        measure_b=float(B.measure),
        lhs=float(lhs),
        rhs=float(rhs),
        holds=bool(lhs >= rhs - tol),
    )


def grid_indicator(A: ArcSet, n: int) -> np.ndarray:
    points = np.arange(n) / n
    out = np.zeros(n, dtype=bool)
    for a, b in A.arcs:
        out |= (points >= float(a)) & (points < float(b))
    return out


def brute_force_product(A: ArcSet, B: ArcSet, n: int = 2 ** 14) -> np.ndarray:
    """Indicator of the discretized product on the grid k/n via circular convolution."""
    fa = np.fft.rfft(grid_indicator(A, n).astype(float))
    fb = np.fft.rfft(grid_indicator(B, n).astype(float))
    return np.fft.irfft(fa * fb, n) > 0.5


@dataclass(frozen=True)
class TripleWitness:
    a: Endpoint
    b: Endpoint
    c: Endpoint

    @property
    def total(self) -> Endpoint:
        return self.a + self.b + self.c


def triple_product_contains_identity(X: ArcSet) -> Tuple[bool, Optional[TripleWitness]]:
    """Whether a + b + c ≡ 0 (mod 1) for some a, b, c in the interior of X.

    Arc interiors are used so that an arc (0, 1/3) with either endpoint
    convention gives no identity triple.
    """
    for i, j, k in combinations_with_replacement(range(len(X.arcs)), 3):
        arcs = (X.arcs[i], X.arcs[j], X.arcs[k])
        lo = sum(a for a, _ in arcs)
        hi = sum(b for _, b in arcs)
        n = _floor(lo) + 1
        if lo < n < hi:
            lam = (n - lo) / (hi - lo)
            a, b, c = (s + lam * (e - s) for s, e in arcs)
            a, b, c = (v - _floor(v) for v in (a, b, c))
            return True, TripleWitness(a, b, c)
    return False, None


EXTREMAL_INTERSECTION_ARC = ArcSet.from_intervals([(Fraction(1, 3), Fraction(2, 3))])


class StructureReport(BaseModel):
    non_intersection_measure: float
    union_defect: float
    union_matches: bool
    bound_holds: bool
    vacuous: bool
    passed: bool


def theorem2_structure_check(non_intersection: ArcSet, X: ArcSet, tol: float = 1e-9) -> StructureReport:
    """Check that X ∪ X⁻¹ is the non-intersection set and that it has measure <= 2/3."""
    overlap = intersection(X, inverse(X)).measure
    if overlap > tol:
        raise PreconditionError(f"X meets its inverse in measure {float(overlap):.3e}")
    measure = non_intersection.measure
    if non_intersection.is_empty:
        return StructureReport(
            non_intersection_measure=0.0, union_defect=float(X.measure * 2),
            union_matches=X.is_empty, bound_holds=True, vacuous=True, passed=True,
        )
    defect = symmetric_difference_measure(union(X, inverse(X)), non_intersection)
    union_matches = defect <= tol
    bound_holds = measure <= Fraction(2, 3) + tol if non_intersection.exact else measure <= 2.0 / 3.0 + tol
    return StructureReport(
        non_intersection_measure=float(measure),
        union_defect=float(defect),
        union_matches=bool(union_matches),
        bound_holds=bool(bound_holds),
        vacuous=False,
        passed=bool(union_matches and bound_holds),
    )


def parse_intervals(text: str, exact: bool = False) -> ArcSet:
    """'a:b;c:d' -> ArcSet; fractions like 1/3 are accepted."""
    intervals = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        try:
            a, b = chunk.split(":")
            conv = Fraction if exact else (lambda s: float(Fraction(s)))
            intervals.append((conv(a.strip()), conv(b.strip())))
        except ValueError as e:
            raise ArcDomainError(f"cannot parse interval {chunk!r}: {e}") from e
    return ArcSet.from_intervals(intervals, exact=exact)


def random_arc_set(rng: np.random.Generator, max_arcs: int = 5, exact: bool = False, denominator: int = 720) -> ArcSet:
    """Random union of up to max_arcs arcs (Fraction endpoints over `denominator` when exact)."""
    count = int(rng.integers(1, max_arcs + 1))
    intervals = []
    for _ in range(count):
        start = int(rng.integers(0, denominator))
        length = int(rng.integers(1, denominator // 4))
        if exact:
            intervals.append((Fraction(start, denominator), Fraction(start + length, denominator)))
        else:
            intervals.append((start / denominator, (start + length) / denominator))
    return ArcSet.from_intervals(intervals, exact=exact)


def arcs_from_mask(mask: Sequence[bool]) -> ArcSet:
    """Float ArcSet from a boolean grid on k/n."""
    n = len(mask)
    intervals = []
    k = 0
    while k < n:
        if mask[k]:
            start = k
            while k < n and mask[k]:
                k += 1
            intervals.append((start / n, k / n))
        else:
            k += 1
    return ArcSet.from_intervals(intervals, exact=False)


def brute_force_agrees(A: ArcSet, B: ArcSet, n: int = 2 ** 14, slack: int = 2) -> bool:
    """Exact product and grid oracle agree away from the product's endpoints."""
    exact = grid_indicator(product(A, B), n)
    brute = brute_force_product(A, B, n)
    differ = np.nonzero(exact != brute)[0]
    if not len(differ):
        return True
    ends = np.array([float(v) for arc in product(A, B).arcs for v in arc])
    if not len(ends):
        return False
    grid = differ / n
    gap = np.abs(grid[:, None] - ends[None, :])
    gap = np.minimum(gap, 1.0 - gap)
    return bool(np.all(gap.min(axis=1) <= slack / n))
