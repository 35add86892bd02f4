"""Planar convex polygons: area, inradius, John ellipsoid, and the box sandwich.

Polygons are counter-clockwise vertex lists. Half-plane form of edge ``e``:
``normal_e . x <= offset_e`` with ``normal_e`` the unit outward normal.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial import ConvexHull

from .box_spectrum import Orthotope

CONVEXITY_RTOL = 1e-12
INTERIOR_SLACK = 1e-12
DEFAULT_MVEE_TOL = 1e-7
MAX_INRADIUS_EDGES = 64


class PolygonError(ValueError):
    pass


class DegenerateInputError(ValueError):
    """Point set does not span the plane."""


class CertificationError(RuntimeError):
    pass


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def _turns(v: np.ndarray) -> np.ndarray:
    return _cross(np.roll(v, 1, axis=0), v, np.roll(v, -1, axis=0))


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise PolygonError("a polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(v)):
            raise PolygonError("vertices must be finite")
        scale = float(np.ptp(v, axis=0).max())
        if scale == 0.0:
            raise PolygonError("all vertices coincide")
        turns = _turns(v)
        if np.any(turns <= CONVEXITY_RTOL * scale * scale):
            raise PolygonError("vertices must make a strictly convex counter-clockwise turn at every corner")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_vertices(cls, vertices: Sequence[Sequence[float]]) -> "ConvexPolygon":
        """Build from a vertex cycle in either orientation (clockwise input is reversed)."""
        v = np.array(vertices, dtype=float)
        if v.ndim == 2 and v.shape[0] >= 3 and _signed_area(v) < 0:
            v = v[::-1]
        return cls(v)

    @classmethod
    def hull_of(cls, points: Sequence[Sequence[float]]) -> "ConvexPolygon":
        """Convex hull of a point cloud, with (near-)collinear hull vertices dropped."""
        pts = np.asarray(points, dtype=float)
        try:
            hull = ConvexHull(pts)
        except Exception as exc:  # scipy raises QhullError for flat input
            raise DegenerateInputError(str(exc)) from exc
        v = pts[hull.vertices]
        scale = float(np.ptp(v, axis=0).max())
        while len(v) > 3:
            turns = _turns(v)
            bad = np.flatnonzero(turns <= 1e3 * CONVEXITY_RTOL * scale * scale)
            if bad.size == 0:
                break
            v = np.delete(v, bad[0], axis=0)
        return cls(v)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit outward normals ``(m, 2)`` and offsets ``(m,)`` of the edge half-planes."""
        v = self.vertices
        d = np.roll(v, -1, axis=0) - v
        normals = np.column_stack([d[:, 1], -d[:, 0]])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        offsets = np.einsum("ij,ij->i", normals, v)
        return normals, offsets

    def slack(self, points: np.ndarray) -> np.ndarray:
        """Smallest ``offset - normal . x`` over edges; positive means strictly inside."""
        normals, offsets = self.edges()
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.min(offsets[None, :] - pts @ normals.T, axis=1)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.slack(points) >= -tol

    @property
    def area(self) -> float:
        return polygon_area(self)

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, rotation: float = 0.0, shift: Sequence[float] = (0.0, 0.0), scale: float = 1.0) -> "ConvexPolygon":
        c, s = math.cos(rotation), math.sin(rotation)
        rot = np.array([[c, -s], [s, c]])
        return ConvexPolygon(scale * self.vertices @ rot.T + np.asarray(shift, dtype=float))

    @property
    def domain_id(self) -> str:
        return "polygon:" + ";".join(f"{float(x)!r},{float(y)!r}" for x, y in self.vertices)

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist()}


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_area(poly: ConvexPolygon) -> float:
    """Shoelace area."""
    return _signed_area(poly.vertices)


def load_polygon(path: Union[str, Path]) -> ConvexPolygon:
    """Read ``{"vertices": [[x, y], ...]}``; clockwise input is reversed, non-convex input rejected."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "vertices" not in data:
        raise PolygonError(f"{path}: expected a JSON object with a 'vertices' list")
    return ConvexPolygon.from_vertices(data["vertices"])


def save_polygon(poly: ConvexPolygon, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(poly.to_json(), fh)


def regular_polygon(m: int, circumradius: float = 1.0, center: Sequence[float] = (0.0, 0.0), phase: float = 0.0) -> ConvexPolygon:
    t = phase + 2.0 * np.pi * np.arange(m) / m
    pts = circumradius * np.column_stack([np.cos(t), np.sin(t)]) + np.asarray(center, dtype=float)
    return ConvexPolygon(pts)


def unit_square() -> ConvexPolygon:
    return ConvexPolygon([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def right_triangle() -> ConvexPolygon:
    return ConvexPolygon([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def random_convex_polygon(rng: np.random.Generator, max_aspect: float = 8.0) -> ConvexPolygon:
    """Hull of 6-16 uniform points in a randomly rotated ellipse with axis ratio up to ``max_aspect``."""
    while True:
        m = int(rng.integers(6, 17))
        radius = np.sqrt(rng.random(m))
        theta = 2.0 * np.pi * rng.random(m)
        pts = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        pts[:, 0] *= float(rng.uniform(1.0, max_aspect))
        phi = float(rng.uniform(0.0, np.pi))
        c, s = math.cos(phi), math.sin(phi)
        pts = pts @ np.array([[c, s], [-s, c]])
        try:
            return ConvexPolygon.hull_of(pts)
        except (DegenerateInputError, PolygonError):
            continue


@dataclass(frozen=True, eq=False)
class SimplePolygon:
    """Counter-clockwise simple polygon, possibly non-convex (used only for empirical sweeps).

    ``slack`` is the signed distance to the boundary, positive inside, so it
    plugs into :func:`rasterize` like :class:`ConvexPolygon` does.
    """

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise PolygonError("a polygon needs at least 3 planar vertices")
        if _signed_area(v) <= 0:
            raise PolygonError("vertices must be counter-clockwise")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def slack(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        d = b - a
        rel = pts[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("pek,ek->pe", rel, d) / np.einsum("ek,ek->e", d, d), 0.0, 1.0)
        dist = np.linalg.norm(rel - t[..., None] * d[None], axis=2).min(axis=1)
        # even-odd crossing count of a ray towards +x
        y = pts[:, 1:2]
        straddle = (a[None, :, 1] > y) != (b[None, :, 1] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = a[None, :, 0] + (y - a[None, :, 1]) * d[None, :, 0] / d[None, :, 1]
        inside = (np.sum(straddle & (x_cross > pts[:, 0:1]), axis=1) % 2) == 1
        return np.where(inside, dist, -dist)

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def domain_id(self) -> str:
        return "simple-polygon:" + ";".join(f"{float(x)!r},{float(y)!r}" for x, y in self.vertices)

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist()}


def random_star_polygon(rng: np.random.Generator, max_aspect: float = 8.0) -> SimplePolygon:
    """Star-shaped polygon with 6-16 vertices at sorted angles and radii in ``[0.3, 1]``, stretched."""
    m = int(rng.integers(6, 17))
    while True:
        theta = np.sort(2.0 * np.pi * rng.random(m))
        # an angular gap of pi or more could let the boundary cross itself
        if np.diff(np.append(theta, theta[0] + 2.0 * np.pi)).max() < np.pi:
            break
    radius = rng.uniform(0.3, 1.0, m)
    pts = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    pts[:, 0] *= float(rng.uniform(1.0, max_aspect))
    return SimplePolygon(pts)


# ---------------------------------------------------------------------------
# inradius


def inradius(poly: ConvexPolygon) -> tuple[float, np.ndarray]:
    """Chebyshev centre by enumerating edge triples.

    The LP ``max r s.t. normal_e . x + r <= offset_e`` has three unknowns, so
    an optimal vertex makes three constraints tight. Every triple is solved
    and filtered for feasibility; with several optimal vertices the centre is
    their mean (still optimal by convexity).
    """
    normals, offsets = poly.edges()
    m = len(offsets)
    if m > MAX_INRADIUS_EDGES:
        raise PolygonError(f"inradius enumeration supports at most {MAX_INRADIUS_EDGES} edges, got {m}")
    triples = np.array(list(itertools.combinations(range(m), 3)))
    mats = np.concatenate([normals[triples], np.ones(triples.shape + (1,))], axis=2)
    rhs = offsets[triples]
    det = np.linalg.det(mats)
    ok = np.abs(det) > 1e-12
    sol = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
    scale = float(np.ptp(poly.vertices, axis=0).max())
    feasible = np.all(sol[:, :2] @ normals.T + sol[:, 2:3] <= offsets + 1e-12 * scale, axis=1)
    sol = sol[feasible & (sol[:, 2] > 0)]
    if sol.size == 0:
        raise PolygonError("inradius LP has no feasible vertex; polygon is degenerate")
    r = float(sol[:, 2].max())
    best = sol[sol[:, 2] >= r - 1e-12 * scale]
    return r, best[:, :2].mean(axis=0)


# ---------------------------------------------------------------------------
# John ellipsoid


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{x : (x - center)^T shape (x - center) <= 1}``."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.center, dtype=float)
        q = np.array(self.shape, dtype=float)
        if q.shape != (c.size, c.size):
            raise ValueError("shape matrix must be square and match the centre")
        if np.abs(q - q.T).max() > 1e-10 * np.abs(q).max():
            raise ValueError("shape matrix must be symmetric")
        q = 0.5 * (q + q.T)
        if np.linalg.eigvalsh(q).min() <= 0.0:
            raise ValueError("shape matrix must be positive definite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", q)

    def mahalanobis_sq(self, points: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(points) - self.center
        return np.einsum("ij,jk,ik->i", d, self.shape, d)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Semi-axis lengths (ascending) and the matching orthonormal directions as columns."""
        evals, evecs = np.linalg.eigh(self.shape)
        semi = 1.0 / np.sqrt(evals)
        order = np.argsort(semi)
        return semi[order], evecs[:, order]

    def boundary(self, count: int) -> np.ndarray:
        semi, vecs = self.axes()
        t = 2.0 * np.pi * np.arange(count) / count
        circle = np.column_stack([np.cos(t), np.sin(t)])
        return self.center + (circle * semi) @ vecs.T

    def scaled(self, factor: float) -> "Ellipsoid":
        return Ellipsoid(self.center, self.shape / factor**2)

    @property
    def volume(self) -> float:
        d = self.center.size
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) / math.sqrt(np.linalg.det(self.shape))


def mvee(points: np.ndarray, tolerance: float = DEFAULT_MVEE_TOL, max_iter: int = 200_000) -> Ellipsoid:
    """Minimum-volume enclosing ellipsoid by Khachiyan's ascent with Todd-Yildirim away steps.

    Iterates on barycentric weights ``u`` until every point satisfies
    ``(x - c)^T Q (x - c) <= 1 + tolerance``. The returned shape is then
    rescaled by the largest excess, so every input point lies inside the
    returned ellipsoid itself.
    """
    if not (1e-10 <= tolerance <= 1e-4):
        raise ValueError(f"tolerance must be in [1e-10, 1e-4], got {tolerance}")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < pts.shape[1] + 1:
        raise DegenerateInputError("need at least d+1 points in R^d")
    N, d = pts.shape
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise DegenerateInputError("points do not span the ambient space (collinear input)")
    # work in the centred frame; the lifted matrix is better conditioned there
    lift = np.vstack([centered.T, np.ones(N)])
    u = np.full(N, 1.0 / N)
    for _ in range(max_iter):
        X = (lift * u) @ lift.T
        M = np.einsum("ij,ji->i", lift.T, np.linalg.solve(X, lift))
        # (x - c)^T Q (x - c) = (M - 1)/d for Q = inv(cov)/d
        if (M.max() - 1.0) / d <= 1.0 + tolerance:
            break
        j = int(np.argmax(M))
        support = np.flatnonzero(u > 0)
        kappa = int(support[np.argmin(M[support])])
        up = M[j] / (d + 1) - 1.0
        down = 1.0 - M[kappa] / (d + 1)
        if up >= down:
            beta = (M[j] - d - 1) / ((d + 1) * (M[j] - 1))
            u *= 1.0 - beta
            u[j] += beta
        else:
            beta = (M[kappa] - d - 1) / ((d + 1) * (M[kappa] - 1))
            beta = max(beta, -u[kappa] / (1.0 - u[kappa]))
            u *= 1.0 - beta
            u[kappa] = max(u[kappa] + beta, 0.0)
    else:
        raise RuntimeError(f"MVEE did not reach tolerance {tolerance} in {max_iter} iterations")
    c = centered.T @ u
    cov = (centered.T * u) @ centered - np.outer(c, c)
    shape = np.linalg.inv(cov) / d
    shape = 0.5 * (shape + shape.T)
    diff = centered - c
    excess = np.einsum("ij,jk,ik->i", diff, shape, diff)
    shape = shape / excess.max()
    return Ellipsoid(c + pts.mean(axis=0), shape)


# ---------------------------------------------------------------------------
# box sandwich


@dataclass(frozen=True, eq=False)
class SandwichResult:
    """Rotated box ``R`` with ``(1/sqrt(n)) R c Omega c n R``.

    ``R`` is centred at ``center`` with half-widths ``box.half_widths`` along
    the columns of ``rotation``. ``john_factor`` is the shrink factor (``sqrt(n)``
    or ``n``) that produced the certified box.
    """

    rotation: np.ndarray
    center: np.ndarray
    box: Orthotope
    ellipsoid: Ellipsoid
    john_factor: float
    inner_slack: float
    outer_slack: float

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def inner_factor(self) -> float:
        return 1.0 / math.sqrt(self.dim)

    @property
    def outer_factor(self) -> float:
        return float(self.dim)

    @property
    def inner_box(self) -> Orthotope:
        return self.box.scaled(self.inner_factor)

    @property
    def outer_box(self) -> Orthotope:
        return self.box.scaled(self.outer_factor)

    def to_world(self, local: np.ndarray) -> np.ndarray:
        return self.center + np.atleast_2d(local) @ self.rotation.T

    def to_local(self, world: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(world) - self.center) @ self.rotation

    def inner_corners(self) -> np.ndarray:
        h = np.asarray(self.inner_box.half_widths)
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
        return self.to_world(signs * h)


def _box_corners(half_widths: np.ndarray) -> np.ndarray:
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=len(half_widths))))
    return signs * half_widths


def hatcher_sandwich(poly: ConvexPolygon, tolerance: float = DEFAULT_MVEE_TOL) -> SandwichResult:
    """Certified rotated box ``R`` with ``R/sqrt(2) c poly c 2R``.

    From the MVEE ``E`` (semi-axes ``b_i``), John's theorem puts ``E`` shrunk
    by ``n`` about its centre inside the polygon (by ``sqrt(n)`` for centrally
    symmetric bodies). The box inscribed in the shrunk ellipse has
    half-widths ``b_i/(f sqrt(n))``, giving ``a_i = b_i/f`` for shrink factor
    ``f``; the outer box ``n a_i >= b_i`` contains ``E``. Both containments are
    tested explicitly. The tighter ``f = sqrt(n)`` is tried first.
    """
    n = 2
    for tol in (tolerance, tolerance * 1e-2, 1e-10):
        tol = max(tol, 1e-10)
        ell = mvee(poly.vertices, tol)
        semi, vecs = ell.axes()
        if np.linalg.det(vecs) < 0:
            vecs = vecs * np.array([1.0, -1.0])
        for factor in (math.sqrt(n), float(n)):
            half = semi / factor
            result = SandwichResult(
                rotation=vecs,
                center=ell.center,
                box=Orthotope(tuple(half)),
                ellipsoid=ell,
                john_factor=factor,
                inner_slack=0.0,
                outer_slack=0.0,
            )
            inner = float(poly.slack(result.inner_corners()).min())
            local = result.to_local(poly.vertices)
            outer = float(np.min(n * half - np.abs(local)))
            if inner >= 0.0 and outer >= 0.0:
                object.__setattr__(result, "inner_slack", inner)
                object.__setattr__(result, "outer_slack", outer)
                return result
    raise CertificationError("box sandwich could not be certified; polygon may be near-degenerate")


# ---------------------------------------------------------------------------
# rasterization


@dataclass(frozen=True, eq=False)
class GridMask:
    """Grid nodes ``(i h, j h)`` strictly inside a polygon, as integer index pairs."""

    indices: np.ndarray
    h: float

    @property
    def points(self) -> np.ndarray:
        return self.indices * self.h

    def __len__(self) -> int:
        return int(self.indices.shape[0])


def rasterize(poly: Union[ConvexPolygon, SimplePolygon], h: float) -> GridMask:
    """Nodes with edge slack above ``1e-12``; may be empty when ``h`` is coarse."""
    if not h > 0.0:
        raise ValueError("mesh width must be positive")
    lo, hi = poly.bbox
    i0, j0 = np.floor(lo / h).astype(int)
    i1, j1 = np.ceil(hi / h).astype(int)
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    idx = np.column_stack([ii.ravel(), jj.ravel()])
    scale = float(np.ptp(poly.vertices, axis=0).max())
    inside = poly.slack(idx * h) > INTERIOR_SLACK * max(scale, 1.0)
    return GridMask(idx[inside], float(h))
