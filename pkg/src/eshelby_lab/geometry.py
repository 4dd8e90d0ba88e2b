"""Inclusion shapes, quadrature rules, voxelization and OFF meshes.

All analytic shapes are centered at the origin.  Surface rules for the
smooth kinds are built on the icosahedron: each face is split into
``2**level`` segments per edge, a collapsed Gauss rule is placed on every
flat sub-triangle, and the points are projected radially onto the unit
sphere with the exact solid-angle Jacobian.  Ellipsoids are reached from the
sphere through the axis scaling, superellipsoids through their radial
function, so the geometry is exact and the rules converge spectrally for
smooth integrands.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from .errors import GeometryError

log = logging.getLogger(__name__)

__all__ = [
    "Shape", "SurfQuad", "VolQuad", "VoxelGrid", "parse_shape",
    "normalize_volume", "surface_quadrature", "volume_quadrature",
    "voxelize", "load_mesh", "write_off", "icosphere", "interior_samples",
]

KINDS = ("ball", "ellipsoid", "cuboid", "superellipsoid", "trimesh")


@dataclass(frozen=True, eq=False)
class Shape:
    """Geometric descriptor of an inclusion.

    ``params`` holds the kind-specific dimensions: ``(r,)`` for a ball,
    ``(a, b, c)`` semi-axes for an ellipsoid, ``(lx, ly, lz)`` edge lengths
    for a cuboid and ``(a, b, c, p)`` for a superellipsoid
    ``|x/a|^p + |y/b|^p + |z/c|^p <= 1``.  Meshes keep their vertices and
    triangles.  ``scale`` multiplies every length and ``rotation`` (if set)
    maps body axes to world axes.
    """

    kind: str
    params: tuple = ()
    scale: float = 1.0
    rotation: np.ndarray | None = None
    vertices: np.ndarray | None = field(default=None, repr=False)
    faces: np.ndarray | None = field(default=None, repr=False)
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(f"unknown shape kind {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        need = {"ball": 1, "ellipsoid": 3, "cuboid": 3, "superellipsoid": 4, "trimesh": 0}
        if len(params) != need[self.kind]:
            raise GeometryError(f"{self.kind} needs {need[self.kind]} parameters")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise GeometryError("scale must be positive")
        if self.kind == "superellipsoid":
            if min(params[:3]) <= 0:
                raise GeometryError("semi-axes must be positive")
            if params[3] < 1:
                raise GeometryError("superellipsoid exponent must be >= 1")
        elif self.kind != "trimesh" and min(params) <= 0:
            raise GeometryError(f"{self.kind} dimensions must be positive")
        if self.kind == "trimesh" and (self.vertices is None or self.faces is None):
            raise GeometryError("trimesh needs vertices and faces")
        if self.rotation is not None:
            R = np.asarray(self.rotation, dtype=float)
            if R.shape != (3, 3) or not np.allclose(R @ R.T, np.eye(3), atol=1e-10):
                raise GeometryError("rotation must be an orthogonal 3x3 matrix")
            object.__setattr__(self, "rotation", R)

    # -- basic descriptors --------------------------------------------------

    @property
    def R(self):
        return np.eye(3) if self.rotation is None else self.rotation

    @property
    def body_dims(self):
        """Semi-axes (or half edges) in body coordinates, scale included."""
        s = self.scale
        if self.kind == "ball":
            return np.full(3, self.params[0] * s)
        if self.kind == "cuboid":
            return 0.5 * s * np.array(self.params)
        if self.kind in ("ellipsoid", "superellipsoid"):
            return s * np.array(self.params[:3])
        return s * np.abs(self.vertices).max(axis=0)

    @property
    def is_ellipsoid(self):
        return self.kind in ("ball", "ellipsoid")

    @property
    def volume(self):
        s3 = self.scale ** 3
        p = self.params
        if self.kind == "ball":
            return 4.0 / 3.0 * np.pi * p[0] ** 3 * s3
        if self.kind == "ellipsoid":
            return 4.0 / 3.0 * np.pi * p[0] * p[1] * p[2] * s3
        if self.kind == "cuboid":
            return p[0] * p[1] * p[2] * s3
        if self.kind == "superellipsoid":
            from scipy.special import gamma
            q = p[3]
            return 8.0 * p[0] * p[1] * p[2] * gamma(1 + 1 / q) ** 3 / gamma(1 + 3 / q) * s3
        return _mesh_signed_volume(self.vertices, self.faces) * s3

    @property
    def diameter(self):
        if self.kind == "trimesh":
            V = self.vertices * self.scale
            c = V.mean(axis=0)
            return 2.0 * np.linalg.norm(V - c, axis=1).max()
        dims = self.body_dims
        if self.kind == "cuboid":
            return 2.0 * np.linalg.norm(dims)
        if self.kind == "superellipsoid":
            # the farthest point lies on the diagonal direction for p > 2
            return 2.0 * max(dims.max(), _radial_extent(self.params, self.scale))
        return 2.0 * dims.max()

    def to_body(self, x):
        return (np.asarray(x, dtype=float) @ self.R) / self.scale

    def to_world(self, xb):
        return (np.asarray(xb, dtype=float) * self.scale) @ self.R.T

    def inside(self, x):
        """Boolean mask of points in the closed shape (world coordinates)."""
        xb = self.to_body(x)
        p = self.params
        if self.kind == "ball":
            return np.einsum("...i,...i->...", xb, xb) <= p[0] ** 2
        if self.kind == "ellipsoid":
            return np.sum((xb / np.array(p)) ** 2, axis=-1) <= 1.0
        if self.kind == "cuboid":
            return np.all(np.abs(xb) <= 0.5 * np.array(p), axis=-1)
        if self.kind == "superellipsoid":
            return np.sum(np.abs(xb / np.array(p[:3])) ** p[3], axis=-1) <= 1.0
        return _winding_number(xb, self.vertices, self.faces) > 0.5

    def bbox(self):
        """World-space (lo, hi) corners of an axis-aligned bounding box."""
        if self.rotation is None and self.kind != "trimesh":
            dims = self.body_dims
            return -dims, dims.copy()
        if self.kind == "ellipsoid" or self.kind == "ball":
            half = np.sqrt((self.R ** 2) @ (self.body_dims ** 2))
            return -half, half
        if self.kind == "cuboid":
            corners = np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)])
            pts = (corners * self.body_dims) @ self.R.T
            return pts.min(axis=0), pts.max(axis=0)
        if self.kind == "trimesh":
            pts = self.to_world(self.vertices)
            return pts.min(axis=0), pts.max(axis=0)
        pts = surface_quadrature(self, 3).points
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = 0.01 * (hi - lo)
        return lo - pad, hi + pad

    # -- transformations -----------------------------------------------------

    def scaled(self, s):
        return replace(self, scale=self.scale * float(s))

    def rotated(self, Q):
        Q = np.asarray(Q, dtype=float)
        return replace(self, rotation=Q @ self.R)

    def spec(self):
        """Shape grammar string (rotation is not representable)."""
        if self.kind == "trimesh":
            return f"mesh:{self.path}"
        vals = list(self.params)
        n = 3 if self.kind in ("ellipsoid", "cuboid", "superellipsoid") else 1
        vals[:n] = [v * self.scale for v in vals[:n]]
        name = "ball" if self.kind == "ball" else self.kind
        return f"{name}:" + ",".join(repr(float(v)) for v in vals)

    def describe(self):
        out = {"kind": self.kind, "spec": self.spec(), "volume": self.volume}
        if self.rotation is not None:
            out["rotation"] = self.R.tolist()
        return out


def parse_shape(text):
    """Parse ``ball:r``, ``ellipsoid:a,b,c``, ``cuboid:lx,ly,lz``,
    ``superellipsoid:a,b,c,p`` or ``mesh:path.off``."""
    if ":" not in text:
        raise GeometryError(f"shape must look like kind:params, got {text!r}")
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "mesh":
        return load_mesh(rest.strip())
    try:
        vals = tuple(float(v) for v in rest.split(","))
    except ValueError:
        raise GeometryError(f"bad numbers in shape {text!r}") from None
    return Shape(kind, vals)


def normalize_volume(shape):
    """Uniformly rescaled copy of ``shape`` with unit volume."""
    vol = shape.volume
    if not (np.isfinite(vol) and vol > 0):
        raise GeometryError("degenerate shape: non-positive volume")
    return shape.scaled(vol ** (-1.0 / 3.0))


def _radial_extent(params, scale):
    # max |x| over the superellipsoid, attained on a diagonal-like direction
    a = np.array(params[:3]) * scale
    q = params[3]
    dirs = _sphere_points(3)[0]
    rho = np.sum(np.abs(dirs / a) ** q, axis=1) ** (-1.0 / q)
    return rho.max()


# ----------------------------------------------------------------------------
# quadrature rules


@dataclass(frozen=True)
class SurfQuad:
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    spacing: float  # node spacing: largest panel edge divided by the rule order

    @property
    def area(self):
        return float(self.weights.sum())

    @cached_property
    def tree(self):
        from scipy.spatial import cKDTree
        return cKDTree(self.points)


@dataclass(frozen=True)
class VolQuad:
    points: np.ndarray
    weights: np.ndarray

    @property
    def volume(self):
        return float(self.weights.sum())


@lru_cache(maxsize=None)
def _triangle_rule(q):
    """Collapsed Gauss-Legendre rule on the reference triangle (area 1/2)."""
    x, w = np.polynomial.legendre.leggauss(q)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    xi = u.ravel()
    eta = (v * (1.0 - u)).ravel()
    wt = (wu * wv * (1.0 - u)).ravel()
    return xi, eta, wt


@lru_cache(maxsize=None)
def _icosahedron():
    t = (1.0 + np.sqrt(5.0)) / 2.0
    V = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                  [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                  [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    V /= np.linalg.norm(V[0])
    F = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    return V, F


@lru_cache(maxsize=None)
def _flat_triangles(level):
    """Flat sub-triangles of the icosahedron faces, as (T, 3, 3) corners."""
    V, F = _icosahedron()
    m = 2 ** level
    tris = []
    for f in F:
        A, B, C = V[f]
        e1, e2 = (B - A) / m, (C - A) / m
        for i in range(m):
            for j in range(m - i):
                p = A + i * e1 + j * e2
                tris.append((p, p + e1, p + e2))
                if i + j < m - 1:
                    tris.append((p + e1, p + e1 + e2, p + e2))
    return np.array(tris)


@lru_cache(maxsize=None)
def _sphere_points(level, q=3):
    """Unit-sphere directions S and solid-angle weights."""
    T = _flat_triangles(level)
    xi, eta, wt = _triangle_rule(q)
    A, e1, e2 = T[:, 0], T[:, 1] - T[:, 0], T[:, 2] - T[:, 0]
    P = A[:, None, :] + xi[None, :, None] * e1[:, None, :] + eta[None, :, None] * e2[:, None, :]
    cross = np.cross(e1, e2)
    nP = np.linalg.norm(P, axis=-1)
    dOmega = np.einsum("tqi,ti->tq", P, cross) / nP ** 3 * wt[None, :]
    S = P / nP[..., None]
    spacing = np.linalg.norm(e1, axis=-1).max()
    out = S.reshape(-1, 3), dOmega.ravel(), float(spacing)
    for a in out[:2]:
        a.setflags(write=False)
    return out


def surface_quadrature(shape, level=4, order=3):
    """Points, unit outward normals and area weights on the boundary.

    ``level`` controls panel refinement (panel size halves per level) and
    ``order`` the Gauss points per panel direction.
    """
    if level < 1:
        raise GeometryError("level must be >= 1")
    kind = shape.kind
    if kind in ("ball", "ellipsoid", "superellipsoid"):
        S, dOm, sp = _sphere_points(level, order)
        dims = shape.body_dims
        if kind in ("ball", "ellipsoid"):
            D = dims
            pts = S * D
            avec = (np.prod(D) / D) * S * dOm[:, None]
            spacing = sp * D.max()
        else:
            q = shape.params[3]
            rho = np.sum(np.abs(S / dims) ** q, axis=1) ** (-1.0 / q)
            pts = S * rho[:, None]
            grad = np.sign(pts) * np.abs(pts / dims) ** (q - 1) / dims
            avec = (rho ** 2 / np.einsum("ij,ij->i", grad, S))[:, None] * grad * dOm[:, None]
            spacing = sp * rho.max()
    elif kind == "cuboid":
        pts, avec, spacing = _cuboid_surface(shape.body_dims, level, order)
    else:
        pts, avec, spacing = _mesh_surface(shape.vertices * shape.scale, shape.faces, order)
    w = np.linalg.norm(avec, axis=1)
    n = avec / w[:, None]
    R = shape.R
    return SurfQuad(pts @ R.T, n @ R.T, w, float(spacing) / order)


def _gauss01(q):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def _cuboid_surface(half, level, order):
    m = 2 ** level
    x, w = _gauss01(order)
    pts, avec = [], []
    for ax in range(3):
        o1, o2 = [a for a in range(3) if a != ax]
        edges1 = np.linspace(-half[o1], half[o1], m + 1)
        edges2 = np.linspace(-half[o2], half[o2], m + 1)
        h1, h2 = np.diff(edges1)[0], np.diff(edges2)[0]
        u = (edges1[:-1, None] + h1 * x[None, :]).ravel()
        v = (edges2[:-1, None] + h2 * x[None, :]).ravel()
        wu = np.tile(h1 * w, m)
        wv = np.tile(h2 * w, m)
        U, Vv = np.meshgrid(u, v, indexing="ij")
        W = np.outer(wu, wv)
        for sgn in (-1.0, 1.0):
            P = np.zeros((U.size, 3))
            P[:, o1], P[:, o2], P[:, ax] = U.ravel(), Vv.ravel(), sgn * half[ax]
            A = np.zeros_like(P)
            A[:, ax] = sgn * W.ravel()
            pts.append(P)
            avec.append(A)
    spacing = 2.0 * half.max() / m * np.sqrt(2.0)
    return np.concatenate(pts), np.concatenate(avec), spacing


def _mesh_surface(V, F, order):
    xi, eta, wt = _triangle_rule(order)
    A = V[F[:, 0]]
    e1, e2 = V[F[:, 1]] - A, V[F[:, 2]] - A
    P = A[:, None, :] + xi[None, :, None] * e1[:, None, :] + eta[None, :, None] * e2[:, None, :]
    cross = np.cross(e1, e2)
    avec = cross[:, None, :] * wt[None, :, None]
    spacing = max(np.linalg.norm(e1, axis=1).max(), np.linalg.norm(e2, axis=1).max())
    return P.reshape(-1, 3), avec.reshape(-1, 3), spacing


def volume_quadrature(shape, level=4, order=3):
    """Interior points with positive volume weights."""
    xr, wr = _gauss01(max(order + 2, 4))
    kind = shape.kind
    if kind in ("ball", "ellipsoid", "superellipsoid"):
        S, dOm, _ = _sphere_points(level, order)
        dims = shape.body_dims
        if kind == "superellipsoid":
            q = shape.params[3]
            rho = np.sum(np.abs(S / dims) ** q, axis=1) ** (-1.0 / q)
            pts = S[:, None, :] * (rho[:, None] * xr[None, :])[..., None]
            wts = dOm[:, None] * (rho[:, None] ** 3) * (xr ** 2 * wr)[None, :]
        else:
            pts = (S[:, None, :] * xr[None, :, None]) * dims
            wts = dOm[:, None] * (xr ** 2 * wr)[None, :] * np.prod(dims)
        pts, wts = pts.reshape(-1, 3), wts.ravel()
    elif kind == "cuboid":
        half = shape.body_dims
        m = 2 ** max(level - 1, 0)
        axes = []
        for a in range(3):
            edges = np.linspace(-half[a], half[a], m + 1)
            h = edges[1] - edges[0]
            axes.append(((edges[:-1, None] + h * xr[None, :]).ravel(), np.tile(h * wr, m)))
        X, Y, Z = np.meshgrid(axes[0][0], axes[1][0], axes[2][0], indexing="ij")
        W = np.einsum("i,j,k->ijk", axes[0][1], axes[1][1], axes[2][1])
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
        wts = W.ravel()
    else:
        V = shape.vertices * shape.scale
        F = shape.faces
        c = V.mean(axis=0)
        vols = np.einsum("ij,ij->i", V[F[:, 0]] - c, np.cross(V[F[:, 1]] - c, V[F[:, 2]] - c)) / 6.0
        if np.all(vols > 0):
            pts, wts = _tet_rule(c, V, F, vols, order)
        else:
            grid = voxelize(shape, 8 * 2 ** level)
            occ = grid.fractions > 0
            pts = grid.centers()[occ]
            wts = grid.fractions[occ] * grid.cell ** 3
            R = shape.R
            return VolQuad(pts, wts)  # grid is already in world coordinates
    R = shape.R
    return VolQuad(pts @ R.T, wts)


def _tet_rule(c, V, F, vols, order):
    # Stroud conical-product rule on each tetrahedron with apex c
    xi, eta, wt = _triangle_rule(order)
    xr, wr = _gauss01(order + 1)
    A = V[F[:, 0]]
    e1, e2 = V[F[:, 1]] - A, V[F[:, 2]] - A
    base = A[:, None, :] + xi[None, :, None] * e1[:, None, :] + eta[None, :, None] * e2[:, None, :]
    pts = c + (base[:, :, None, :] - c) * xr[None, None, :, None]
    wts = (6.0 * vols)[:, None, None] * wt[None, :, None] * (xr ** 2 * wr)[None, None, :]
    return pts.reshape(-1, 3), wts.ravel()


# ----------------------------------------------------------------------------
# voxelization


@dataclass(frozen=True)
class VoxelGrid:
    """Cubic cells covering a shape's bounding box.

    ``n`` is the number of cells along the longest box edge; ``dims`` the
    cell counts per axis.  ``fractions`` holds the occupied volume fraction
    of every cell.
    """

    n: int
    cell: float
    origin: np.ndarray
    fractions: np.ndarray

    @property
    def dims(self):
        return self.fractions.shape

    def centers(self):
        idx = np.indices(self.dims).reshape(3, -1).T
        return (self.origin + (idx + 0.5) * self.cell).reshape(*self.dims, 3)

    @property
    def volume(self):
        return float(self.fractions.sum() * self.cell ** 3)


def voxelize(shape, n, sub=8):
    """Occupancy fractions on a cubic grid; boundary cells by ``sub``^3 sampling."""
    if n < 1:
        raise GeometryError("n must be positive")
    lo, hi = shape.bbox()
    ext = hi - lo
    cell = ext.max() / n
    dims = np.maximum(1, np.ceil(ext / cell - 1e-9).astype(int))
    center = 0.5 * (lo + hi)
    origin = center - 0.5 * dims * cell
    # classify by corners and center
    cidx = [origin[a] + cell * np.arange(dims[a] + 1) for a in range(3)]
    CX, CY, CZ = np.meshgrid(*cidx, indexing="ij")
    corner_in = shape.inside(np.stack([CX, CY, CZ], axis=-1))
    ctr = origin + (np.indices(dims).transpose(1, 2, 3, 0) + 0.5) * cell
    center_in = shape.inside(ctr)
    cnt = center_in.astype(int)
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                cnt = cnt + corner_in[i:i + dims[0], j:j + dims[1], k:k + dims[2]]
    frac = np.where(cnt == 9, 1.0, 0.0)
    mixed = np.argwhere((cnt > 0) & (cnt < 9))
    if len(mixed):
        s = (np.arange(sub) + 0.5) / sub
        off = np.stack(np.meshgrid(s, s, s, indexing="ij"), axis=-1).reshape(-1, 3) * cell
        for chunk in np.array_split(mixed, max(1, len(mixed) // 2048)):
            base = origin + chunk * cell
            pts = base[:, None, :] + off[None, :, :]
            frac[tuple(chunk.T)] = shape.inside(pts).mean(axis=1)
    return VoxelGrid(int(n), float(cell), origin, frac)


# ----------------------------------------------------------------------------
# interior sampling


def _margin_directions():
    d = np.array([[i, j, k] for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)
                  if (i, j, k) != (0, 0, 0)], dtype=float)
    d /= np.linalg.norm(d, axis=1)[:, None]
    return np.concatenate([d, _sphere_points(1, 1)[0]])


def interior_samples(shape, count, margin=0.05, rng=None, shrink=None):
    """Random interior points at least ``margin * diameter`` from the boundary.

    The margin is enforced by testing a ball of directions around each
    candidate.  With ``shrink`` in (0, 1) the candidates are additionally
    restricted to the body-scaled copy ``shrink * shape``.
    """
    if count < 1:
        raise GeometryError("need at least one sample")
    rng = np.random.default_rng(rng)
    lo, hi = shape.bbox()
    m = margin * shape.diameter
    dirs = _margin_directions()
    out = []
    got = 0
    for _ in range(200):
        cand = lo + (hi - lo) * rng.random((max(4 * count, 256), 3))
        ok = shape.inside(cand)
        if shrink is not None:
            ok &= shape.inside(cand / shrink)
        if m > 0:
            for dvec in dirs:
                ok &= shape.inside(cand + m * dvec)
        sel = cand[ok]
        out.append(sel)
        got += len(sel)
        if got >= count:
            break
    pts = np.concatenate(out)
    if len(pts) < count:
        raise GeometryError("could not place enough interior samples; margin too large")
    return pts[:count]


# ----------------------------------------------------------------------------
# meshes


def _mesh_signed_volume(V, F):
    return float(np.einsum("ij,ij->i", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]])).sum() / 6.0)


def _winding_number(x, V, F):
    """Generalized winding number of a closed triangle mesh at points x."""
    x = np.asarray(x, dtype=float)
    shp = x.shape[:-1]
    x = x.reshape(-1, 3)
    out = np.empty(len(x))
    for s in range(0, len(x), 512):
        a = V[F[:, 0]][None] - x[s:s + 512, None]
        b = V[F[:, 1]][None] - x[s:s + 512, None]
        c = V[F[:, 2]][None] - x[s:s + 512, None]
        la, lb, lc = (np.linalg.norm(v, axis=-1) for v in (a, b, c))
        num = np.einsum("pfi,pfi->pf", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("pfi,pfi->pf", a, b) * lc
               + np.einsum("pfi,pfi->pf", b, c) * la + np.einsum("pfi,pfi->pf", c, a) * lb)
        out[s:s + 512] = (2.0 * np.arctan2(num, den)).sum(axis=1) / (4.0 * np.pi)
    return out.reshape(shp)


def _check_closed(F):
    edges = {}
    for tri in F:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            edges[(a, b)] = edges.get((a, b), 0) + 1
    for (a, b), k in edges.items():
        if k != 1 or edges.get((b, a), 0) != 1:
            raise GeometryError("mesh is not a closed, consistently oriented surface")


def load_mesh(path):
    """Read an ASCII OFF file into a ``trimesh`` shape.

    Polygons are fan-triangulated.  An inverted (inward) orientation is
    fixed automatically with a warning.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"mesh file not found: {path}")
    tokens = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line)
    if not tokens or not tokens[0].startswith("OFF"):
        raise GeometryError(f"{path}: missing OFF header")
    head = tokens[0][3:].split()
    body = tokens[1:]
    if not head:
        if not body:
            raise GeometryError(f"{path}: missing counts line")
        head, body = body[0].split(), body[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
        V = np.array([[float(v) for v in body[i].split()[:3]] for i in range(nv)])
        faces = []
        for line in body[nv:nv + nf]:
            vals = [int(v) for v in line.split()]
            k, idx = vals[0], vals[1:1 + vals[0]]
            if k < 3 or len(idx) != k:
                raise ValueError("bad face record")
            faces.extend((idx[0], idx[i], idx[i + 1]) for i in range(1, k - 1))
        F = np.array(faces, dtype=int)
    except (ValueError, IndexError) as exc:
        raise GeometryError(f"{path}: malformed OFF ({exc})") from None
    if V.shape != (nv, 3) or len(F) == 0 or F.max() >= nv or F.min() < 0:
        raise GeometryError(f"{path}: malformed OFF (counts or indices)")
    _check_closed(F)
    if _mesh_signed_volume(V, F) < 0:
        warnings.warn(f"{path}: inward-facing orientation, flipping faces", stacklevel=2)
        F = F[:, ::-1].copy()
    return Shape("trimesh", (), vertices=V, faces=F, path=str(path))


def write_off(path, V, F):
    lines = ["OFF", f"{len(V)} {len(F)} 0"]
    lines += [" ".join(repr(float(c)) for c in v) for v in V]
    lines += ["3 " + " ".join(str(int(i)) for i in f) for f in F]
    Path(path).write_text("\n".join(lines) + "\n")


def icosphere(level=2, radius=1.0):
    """Vertices and outward triangles of a subdivided icosahedron."""
    V, F = _icosahedron()
    V = [tuple(v) for v in V]
    F = [tuple(f) for f in F]
    for _ in range(level):
        cache = {}
        verts = list(V)

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                p = (np.array(verts[i]) + np.array(verts[j])) / 2.0
                verts.append(tuple(p / np.linalg.norm(p)))
                cache[key] = len(verts) - 1
            return cache[key]

        newF = []
        for a, b, c in F:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            newF += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        V, F = verts, newF
    return np.array(V) * radius, np.array(F, dtype=int)
