from __future__ import annotations

"""
Strip Mesh: triangulated Möbius strips in ℂ × S¹ × [0, ∞)

Vertices are stored as rows (m_re, m_im, phi, rho) with phi reduced to [0, 2π).
Triangles are small in phi, so each one is unwrapped relative to its first
vertex whenever geometry is computed across the seam.

Both strip families use the same grid on the Möbius band: columns indexed by
an angle in [0, π), rows by s in [−1, 1], and the last column glued back to
the first with s reversed.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import optimize
from scipy.spatial import cKDTree

from . import curve_model as cm
from .chord_space import FiberSection, SectionEndpoint, TorusLinkSpec
from .curve_model import JordanCurve, TWO_PI
from .errors import MeshResolutionError, NonRegularFiber, PreconditionError
from .state import MeshFile

MIN_RESOLUTION = 8


def _wrap(x):
    """Angle difference reduced to (−π, π]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)


@dataclass
class StripMesh:
    vertices: np.ndarray          # (V, 4): m_re, m_im, phi, rho
    triangles: np.ndarray         # (F, 3) int
    boundary: List[int] = field(default_factory=list)
    name: str = "strip"

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 4).copy()
        self.vertices[:, 2] = np.mod(self.vertices[:, 2], TWO_PI)
        self.triangles = np.asarray(self.triangles, dtype=int).reshape(-1, 3)
        self.boundary = [int(i) for i in self.boundary]

    @property
    def midpoints(self) -> np.ndarray:
        return self.vertices[:, 0] + 1j * self.vertices[:, 1]

    def unwrapped_triangles(self) -> np.ndarray:
        """(F, 3, 4) triangle corners with phi continuous within each triangle."""
        tri = self.vertices[self.triangles].copy()
        base = tri[:, :1, 2]
        tri[:, :, 2] = base + _wrap(tri[:, :, 2] - base)
        return tri

    def edges(self) -> np.ndarray:
        e = np.concatenate([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]])
        return np.sort(e, axis=1)

    def max_edge_length(self) -> float:
        tri = self.unwrapped_triangles()
        lengths = [np.linalg.norm(tri[:, a] - tri[:, b], axis=1) for a, b in ((0, 1), (1, 2), (2, 0))]
        return float(np.max(lengths)) if len(tri) else 0.0


@dataclass(frozen=True)
class DomeStrip:
    """Parabolic strip whose section at fiber v is the segment through 0 along √(v/u)."""

    apex_height: float
    rotation: complex = 1.0 + 0j

    def __post_init__(self) -> None:
        if not self.apex_height > 0:
            raise PreconditionError(f"dome apex height must be positive, got {self.apex_height}")
        u = complex(self.rotation)
        if abs(u) == 0:
            raise PreconditionError("dome rotation must be non-zero")
        object.__setattr__(self, "rotation", u / abs(u))

    def profile(self, s):
        return self.apex_height * (1.0 - np.asarray(s) ** 2)

    def direction(self, phi: float) -> complex:
        a = ((phi - np.angle(self.rotation)) / 2.0) % math.pi
        return complex(np.exp(1j * a))

    def section(self, phi: float, samples: int = 65) -> FiberSection:
        g = self.direction(phi)
        s = np.linspace(-1.0, 1.0, samples)
        m = s * g
        poly = np.column_stack([m.real, m.imag, self.profile(s)])
        poly[[0, -1], 2] = 0.0
        ends = [SectionEndpoint(t=None, point=poly[0].copy()), SectionEndpoint(t=None, point=poly[-1].copy())]
        return FiberSection(phi=float(phi) % TWO_PI, polylines=[poly], endpoints=ends)


def _mobius_mesh(
    columns: int,
    rows: int,
    vertex: Callable[[np.ndarray, np.ndarray], np.ndarray],
    name: str,
) -> StripMesh:
    """Grid on [0, π) × [−1, 1] with column `columns` glued to column 0 upside down."""
    a = math.pi * np.arange(columns) / columns
    s = np.linspace(-1.0, 1.0, rows)
    A, S = np.meshgrid(a, s, indexing="ij")
    verts = vertex(A, S).reshape(columns * rows, 4)

    def idx(j: int, i: int) -> int:
        if j == columns:
            return (rows - 1 - i)
        return j * rows + i

    tris = []
    for j in range(columns):
        for i in range(rows - 1):
            v00, v01 = idx(j, i), idx(j, i + 1)
            v10, v11 = idx(j + 1, i), idx(j + 1, i + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    boundary = [idx(j, 0) for j in range(columns)] + [idx(j, rows - 1) for j in range(columns)]
    return StripMesh(verts, np.array(tris), boundary, name=name)


def _grid_sizes(resolution: int) -> Tuple[int, int]:
    if resolution < MIN_RESOLUTION:
        raise MeshResolutionError(f"resolution {resolution} is below the minimum {MIN_RESOLUTION}")
    return resolution, 2 * (resolution // 4) + 1


def mesh_from_dome(dome: DomeStrip, resolution: int = 64) -> StripMesh:
    columns, rows = _grid_sizes(resolution)
    base = float(np.angle(dome.rotation))

    def vertex(A: np.ndarray, S: np.ndarray) -> np.ndarray:
        m = S * np.exp(1j * A)
        rho = dome.profile(S)
        rho[:, [0, -1]] = 0.0
        return np.stack([m.real, m.imag, base + 2.0 * A, rho], axis=-1)

    return _mobius_mesh(columns, rows, vertex, name=f"dome-{dome.apex_height:g}")


def collar_halfwidth(curve: JordanCurve, c: float, eps: float) -> float:
    """Smallest d > 0 with |γ(c − d) − γ(c + d)|² = ε."""

    def f(d: float) -> float:
        return abs(cm.evaluate(curve, c - d) - cm.evaluate(curve, c + d)) ** 2 - eps

    hi = math.sqrt(eps) / (2.0 * abs(cm.derivative(curve, c)))
    for _ in range(60):
        if f(hi) > 0:
            return float(optimize.brentq(f, 0.0, hi, xtol=1e-15))
        hi *= 1.5
        if hi >= math.pi / 2:
            break
    raise MeshResolutionError(f"no ε collar found at c={c:.6f}")


def mesh_from_curve(curve: JordanCurve, eps: float, resolution: int = 64) -> StripMesh:
    """Chords {c − d, c + d}, c in [0, π), d between the two ε collars."""
    columns, rows = _grid_sizes(resolution)
    c_all = math.pi * np.arange(2 * columns) / columns
    d_min = np.array([collar_halfwidth(curve, c, eps) for c in c_all])
    lo = d_min[:columns]
    hi = math.pi - d_min[columns:]
    if np.any(hi - lo <= 0):
        raise MeshResolutionError("ε collar leaves no room between the boundary rows")

    def vertex(A: np.ndarray, S: np.ndarray) -> np.ndarray:
        j = np.rint(A * columns / math.pi).astype(int)
        d = lo[j] + (S + 1.0) / 2.0 * (hi[j] - lo[j])
        p = cm.evaluate(curve, (A - d).ravel()).reshape(A.shape)
        q = cm.evaluate(curve, (A + d).ravel()).reshape(A.shape)
        w = (p - q) ** 2
        mid = (p + q) / 2.0
        rho = np.abs(w) - eps
        rho[:, [0, -1]] = 0.0
        return np.stack([mid.real, mid.imag, np.mod(np.angle(w), TWO_PI), np.maximum(rho, 0.0)], axis=-1)

    return _mobius_mesh(columns, rows, vertex, name=curve.name)


def rotate_strip(mesh: StripMesh, u: complex) -> StripMesh:
    verts = mesh.vertices.copy()
    verts[:, 2] = verts[:, 2] + float(np.angle(u))
    return StripMesh(verts, mesh.triangles.copy(), list(mesh.boundary), name=mesh.name)


def euler_characteristic(mesh: StripMesh) -> int:
    edges = np.unique(mesh.edges(), axis=0)
    used = np.unique(mesh.triangles)
    return int(len(used) - len(edges) + len(mesh.triangles))


def boundary_loops(mesh: StripMesh) -> List[List[int]]:
    """Edges used by exactly one triangle, chained into closed loops."""
    edges, counts = np.unique(mesh.edges(), axis=0, return_counts=True)
    nbrs: Dict[int, List[int]] = {}
    for a, b in edges[counts == 1]:
        nbrs.setdefault(int(a), []).append(int(b))
        nbrs.setdefault(int(b), []).append(int(a))
    loops: List[List[int]] = []
    seen = set()
    for start in sorted(nbrs):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [v for v in nbrs[cur] if v != prev and (v not in seen or v == start)]
            if not nxt or nxt[0] == start:
                break
            prev, cur = cur, nxt[0]
            loop.append(cur)
            seen.add(cur)
        loops.append(loop)
    return loops


def boundary_winding(mesh: StripMesh, loop: Optional[Sequence[int]] = None) -> Tuple[int, int]:
    """(ℂ-winding of the midpoint, winding of phi) along a boundary loop."""
    loop = list(mesh.boundary if loop is None else loop)
    pts = mesh.vertices[loop]
    m = pts[:, 0] + 1j * pts[:, 1]
    center = m.mean()
    ang = np.angle(m - center)
    dm = _wrap(np.diff(np.append(ang, ang[0])))
    dphi = _wrap(np.diff(np.append(pts[:, 2], pts[0, 2])))
    return int(round(dm.sum() / TWO_PI)), int(round(dphi.sum() / TWO_PI))


def boundary_matches_link(
    meshes: Sequence[StripMesh],
    link: TorusLinkSpec,
    check_points: bool = False,
    tol: float = 1e-9,
) -> bool:
    """Whether the union of the boundaries has the component pattern of T(n, k)."""
    loops = [(mesh, loop) for mesh in meshes for loop in boundary_loops(mesh)]
    if len(loops) != link.component_count:
        return False
    target = link.winding_pattern
    for mesh, loop in loops:
        winding = boundary_winding(mesh, loop)
        if abs(winding[0]) != target[0] or abs(winding[1]) != target[1]:
            return False
        if check_points:
            for v in loop:
                m = complex(mesh.vertices[v, 0], mesh.vertices[v, 1])
                if abs(m) == 0 or not link.contains(m, np.exp(1j * mesh.vertices[v, 2]), tol):
                    return False
    return True


def dome_family(heights: Sequence[float], n: Optional[int] = None) -> List[DomeStrip]:
    """Domes at the n-th roots of unity; the boundary union is T(2n, n)."""
    n = n or len(heights)
    if len(heights) > n:
        raise PreconditionError(f"{len(heights)} heights need at least as many roots of unity, got n={n}")
    return [DomeStrip(float(h), complex(np.exp(2j * math.pi * j / n))) for j, h in enumerate(heights)]


def slice_at(mesh: StripMesh, phi: float, level_tol: float = 1e-12) -> FiberSection:
    """Level set of phi on the mesh, chained into polylines of (m_re, m_im, rho)."""
    phi = float(phi) % TWO_PI
    off = _wrap(mesh.vertices[:, 2] - phi)
    if np.any(np.abs(off) < level_tol):
        raise NonRegularFiber(f"mesh vertex lies on the fiber phi={phi:.6f}")

    crossings: Dict[Tuple[int, int], np.ndarray] = {}
    for a, b in np.unique(mesh.edges(), axis=0):
        d = float(_wrap(mesh.vertices[b, 2] - mesh.vertices[a, 2]))
        e = -float(off[a])
        if d == 0.0:
            continue
        lam = e / d
        if 0.0 < lam < 1.0:
            va, vb = mesh.vertices[a], mesh.vertices[b]
            p = va + lam * (vb - va)
            crossings[(int(a), int(b))] = np.array([p[0], p[1], p[3]])

    links: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
    for tri in mesh.triangles:
        keys = [tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3])))) for i in range(3)]
        hit = [k for k in keys if k in crossings]
        if not hit:
            continue
        if len(hit) != 2:
            raise NonRegularFiber(f"fiber phi={phi:.6f} crosses a triangle {len(hit)} times")
        links.setdefault(hit[0], []).append(hit[1])
        links.setdefault(hit[1], []).append(hit[0])

    polylines: List[np.ndarray] = []
    endpoints: List[SectionEndpoint] = []
    visited = set()
    starts = [k for k, v in links.items() if len(v) == 1] + [k for k, v in links.items() if len(v) != 1]
    for start in starts:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        cur = start
        while True:
            nxt = [k for k in links[cur] if k not in visited]
            if not nxt:
                if len(links[cur]) > 1 and start in links[cur] and len(chain) > 2:
                    chain.append(start)
                break
            cur = nxt[0]
            chain.append(cur)
            visited.add(cur)
        poly = np.array([crossings[k] for k in chain])
        polylines.append(poly)
        if len(links[start]) == 1:
            endpoints.append(SectionEndpoint(t=None, point=poly[0].copy()))
            endpoints.append(SectionEndpoint(t=None, point=poly[-1].copy()))
    return FiberSection(phi=phi, polylines=polylines, endpoints=endpoints)


class DisjointnessResult(BaseModel):
    disjoint: bool
    distance: float
    nearest_phi: float
    candidate_pairs: int


def _faces() -> List[Tuple[int, ...]]:
    return [(0,), (1,), (2,), (0, 1), (1, 2), (0, 2), (0, 1, 2)]


def _triangle_distances(ta: np.ndarray, tb: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exact distances between triangle pairs in ℝ⁴ and the nearest point on each ta.

    The minimum lies in the relative interior of some face pair; every pair's
    affine stationary point is tried and kept when it is inside both faces.
    """
    n = len(ta)
    best = np.full(n, np.inf)
    nearest = ta[:, 0].copy()
    for fa in _faces():
        for fb in _faces():
            p0, q0 = ta[:, fa[0]], tb[:, fb[0]]
            cols = [ta[:, k] - p0 for k in fa[1:]] + [q0 - tb[:, k] for k in fb[1:]]
            b = p0 - q0
            if cols:
                A = np.stack(cols, axis=2)
                x = -np.einsum("nij,nj->ni", np.linalg.pinv(A), b)
                alpha, beta = x[:, : len(fa) - 1], x[:, len(fa) - 1:]
                inside = (
                    np.all(alpha >= -1e-12, axis=1)
                    & (alpha.sum(axis=1) <= 1 + 1e-12)
                    & np.all(beta >= -1e-12, axis=1)
                    & (beta.sum(axis=1) <= 1 + 1e-12)
                )
                gap = b + np.einsum("nij,nj->ni", A, x)
                point = p0 + sum(alpha[:, [i]] * (ta[:, k] - p0) for i, k in enumerate(fa[1:])) if len(fa) > 1 else p0
            else:
                inside = np.ones(n, dtype=bool)
                gap = b
                point = p0
            dist = np.where(inside, np.linalg.norm(gap, axis=1), np.inf)
            better = dist < best
            best = np.where(better, dist, best)
            nearest[better] = point[better]
    return best, nearest


def meshes_disjoint(a: StripMesh, b: StripMesh, tol: float = 1e-9, chunk: int = 8192) -> DisjointnessResult:
    """Exact PL separation of two meshes; `disjoint` iff the distance exceeds tol."""
    ta = a.unwrapped_triangles()
    tb = b.unwrapped_triangles()
    ca, cb = ta.mean(axis=1), tb.mean(axis=1)
    ra = np.max(np.linalg.norm(ta - ca[:, None], axis=2), axis=1)
    rb = np.max(np.linalg.norm(tb - cb[:, None], axis=2), axis=1)

    # copies of b shifted by ±2π in phi handle the seam
    shifts = np.array([0.0, TWO_PI, -TWO_PI])
    cb_all = np.concatenate([cb + np.array([0, 0, s, 0]) for s in shifts])
    b_index = np.tile(np.arange(len(tb)), len(shifts))
    b_shift = np.repeat(shifts, len(tb))

    tree_b = cKDTree(cb_all)
    upper, _ = tree_b.query(ca)
    bound = float(upper.min()) + float(ra.max()) + float(rb.max())
    neighbours = cKDTree(ca).query_ball_tree(tree_b, r=bound)
    ia = np.fromiter((i for i, row in enumerate(neighbours) for _ in row), dtype=int)
    ib = np.fromiter((j for row in neighbours for j in row), dtype=int)
    lower = np.linalg.norm(ca[ia] - cb_all[ib], axis=1) - ra[ia] - rb[b_index[ib]]
    order = np.argsort(lower)
    ia, ib, lower = ia[order], ib[order], lower[order]

    best = math.inf
    best_phi = 0.0
    for start in range(0, len(ia), chunk):
        if lower[start] > best:
            break
        sa, sb = ia[start: start + chunk], ib[start: start + chunk]
        tri_b = tb[b_index[sb]].copy()
        tri_b[:, :, 2] += b_shift[sb][:, None]
        dist, nearest = _triangle_distances(ta[sa], tri_b)
        k = int(np.argmin(dist))
        if dist[k] < best:
            best = float(dist[k])
            best_phi = float(nearest[k, 2]) % TWO_PI
    return DisjointnessResult(disjoint=best > tol, distance=best, nearest_phi=best_phi, candidate_pairs=int(len(ia)))


class RotationProfile(BaseModel):
    thetas: List[float]
    intersecting: List[bool]
    distances: List[float]
    fraction: float


def rotation_intersection_profile(
    mesh: StripMesh,
    thetas: Sequence[float],
    tol: Optional[float] = None,
) -> RotationProfile:
    """For each θ, whether the mesh meets its rotation by e^{iθ}.

    With tol=None a pair counts as intersecting when the separation is within
    two edge lengths, the resolution limit of the piecewise-linear strip.
    """
    tol = 2.0 * mesh.max_edge_length() if tol is None else tol
    flags, dists = [], []
    for theta in thetas:
        res = meshes_disjoint(mesh, rotate_strip(mesh, np.exp(1j * theta)))
        flags.append(bool(res.distance <= tol))
        dists.append(res.distance)
    fraction = float(np.mean(flags)) if flags else 0.0
    return RotationProfile(thetas=[float(t) for t in thetas], intersecting=flags, distances=dists, fraction=fraction)


# I/O

def mesh_to_file(mesh: StripMesh) -> MeshFile:
    return MeshFile(
        vertices=[tuple(float(v) for v in row) for row in mesh.vertices],
        triangles=[tuple(int(v) for v in tri) for tri in mesh.triangles],
        boundary=list(mesh.boundary),
    )


def mesh_from_file(data: MeshFile, name: str = "strip") -> StripMesh:
    verts = np.array(data.vertices, dtype=float).reshape(-1, 4)
    tris = np.array(data.triangles, dtype=int).reshape(-1, 3)
    if len(tris) and (tris.min() < 0 or tris.max() >= len(verts)):
        raise PreconditionError(f"{name}: triangle index out of range")
    if len(verts) and np.any(verts[:, 3] < 0):
        raise PreconditionError(f"{name}: negative rho")
    mesh = StripMesh(verts, tris, list(data.boundary), name=name)
    if not mesh.boundary:
        loops = boundary_loops(mesh)
        mesh.boundary = loops[0] if loops else []
    return mesh


def save_mesh(mesh: StripMesh, path: str) -> str:
    with open(path, "w") as f:
        f.write(mesh_to_file(mesh).model_dump_json())
    return path


def load_mesh(path: str) -> StripMesh:
    with open(path, "r") as f:
        return mesh_from_file(MeshFile.model_validate_json(f.read()), name=path)
