"""Kelvin kernel, layer and volume potentials of a shape, and the quadratic-fit test.

Every volume potential is turned into a boundary integral with the
divergence theorem, so a single surface rule serves them all.  Writing
``z = x - y`` and ``r = |z|``::

    p(x)           =  1/(16 pi) * int_S r (y - x).n
    w(x)           =  1/(4 pi)  * int_S (y - x).n / r
    d_k w(x)       = -2/(4 pi)  * int_S n_k / r
    d_i d_j p(x)   = -1/(4 pi)  * int_S (z_i / r) n_j
    d_i d_j d_k p  = -1/(4 pi)  * int_S (delta_ij / r - z_i z_j / r^3) n_k

The integrands are smooth for targets off the boundary; accuracy degrades
when a target is within a few panel widths of the surface, which is why
every evaluation checks its distance to the quadrature nodes.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .errors import GeometryError, NumericalError
from .geometry import SurfQuad, surface_quadrature

__all__ = [
    "kelvin", "single_layer", "single_layer_bstar", "p_potential", "w_potential",
    "wB_potential", "grad_w", "grad_wB", "hess_p", "third_p", "h_decomposition_check",
    "quadratic_fit_w", "fit_quadratic", "PotentialSamples", "QuadraticFit",
    "surface_rule", "nearest_distance", "level_difference", "DEFAULT_LEVEL",
]

DEFAULT_LEVEL = 4
NEAR_FACTOR = 2.0
_CHUNK_PAIRS = 600_000


def kelvin(x, pair):
    """Kelvin matrix of the matrix phase at ``x`` (shape (..., 3) -> (..., 3, 3))."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ValueError("Kelvin matrix is singular at the origin")
    a1, a2 = pair.alpha1, pair.alpha2
    eye = np.eye(3)
    return (-(a1 / (4 * np.pi)) * eye / r[..., None, None]
            - (a2 / (4 * np.pi)) * x[..., :, None] * x[..., None, :] / r[..., None, None] ** 3)


# ----------------------------------------------------------------------------
# quadrature plumbing


@lru_cache(maxsize=32)
def _cached_rule(shape, level, order):
    return surface_quadrature(shape, level, order)


def surface_rule(shape_or_quad, level=DEFAULT_LEVEL, order=3):
    """Return a SurfQuad, building (and caching) one for a Shape."""
    if isinstance(shape_or_quad, SurfQuad):
        return shape_or_quad
    return _cached_rule(shape_or_quad, int(level), int(order))


def _targets(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("points must be 3-vectors")
    return x.reshape(-1, 3), x.shape[:-1]


def nearest_distance(quad, x):
    return quad.tree.query(np.asarray(x, dtype=float).reshape(-1, 3))[0]


def _check_near(quad, x, near):
    if near == "ignore":
        return
    d = nearest_distance(quad, x)
    bad = d < NEAR_FACTOR * quad.spacing
    if np.any(bad):
        msg = (f"{int(bad.sum())} target(s) within {NEAR_FACTOR}x quadrature spacing "
               f"({quad.spacing:.3g}) of the boundary; closest {d.min():.3g}")
        if near == "raise":
            raise NumericalError(msg)
        warnings.warn(msg, stacklevel=3)


def level_difference(func, shape, *args, level=DEFAULT_LEVEL, **kw):
    """Value at ``level`` and its max deviation from ``level - 1`` (an error bound)."""
    fine = func(shape, *args, level=level, **kw)
    coarse = func(shape, *args, level=level - 1, **kw)
    return fine, float(np.max(np.abs(fine - coarse)))


def _accumulate(quad, x, kernel, out_shape):
    """Sum ``kernel(z, r, n, w)`` over quadrature nodes for each target."""
    X, lead = _targets(x)
    out = np.empty((len(X),) + out_shape)
    step = max(1, _CHUNK_PAIRS // len(quad.weights))
    for s in range(0, len(X), step):
        z = X[s:s + step, None, :] - quad.points[None, :, :]
        r = np.sqrt(np.einsum("tqi,tqi->tq", z, z))
        out[s:s + step] = kernel(z, r, quad.normals, quad.weights)
    return out.reshape(lead + out_shape)


# ----------------------------------------------------------------------------
# shape potentials


def p_potential(shape, x, level=DEFAULT_LEVEL, near="raise"):
    """Biharmonic potential (1/4pi) int_Omega |x - y| dy."""
    q = surface_rule(shape, level)
    _check_near(q, x, near)

    def k(z, r, n, w):
        return -np.einsum("tq,tqi,qi,q->t", r, z, n, w) / (16 * np.pi)
    return _accumulate(q, x, k, ())


def w_potential(shape, x, level=DEFAULT_LEVEL, near="raise"):
    """Twice the Newtonian potential, (2/4pi) int_Omega dy / |x - y|."""
    q = surface_rule(shape, level)
    _check_near(q, x, near)

    def k(z, r, n, w):
        return -np.einsum("tqi,qi,q->t", z / r[..., None], n, w) / (4 * np.pi)
    return _accumulate(q, x, k, ())


def grad_w(shape, x, level=DEFAULT_LEVEL, near="raise"):
    q = surface_rule(shape, level)
    _check_near(q, x, near)

    def k(z, r, n, w):
        return -2.0 * np.einsum("tq,qi,q->ti", 1.0 / r, n, w) / (4 * np.pi)
    return _accumulate(q, x, k, (3,))


def hess_p(shape, x, level=DEFAULT_LEVEL, near="raise"):
    """Second derivatives of p (symmetric 3x3 per target)."""
    q = surface_rule(shape, level)
    _check_near(q, x, near)

    def k(z, r, n, w):
        H = -np.einsum("tqi,qj,q->tij", z / r[..., None], n, w) / (4 * np.pi)
        return 0.5 * (H + H.transpose(0, 2, 1))
    return _accumulate(q, x, k, (3, 3))


def third_p(shape, x, level=DEFAULT_LEVEL, near="raise"):
    """Third derivatives of p (fully symmetric 3x3x3 per target)."""
    q = surface_rule(shape, level)
    _check_near(q, x, near)

    def k(z, r, n, w):
        nw = n * w[:, None]
        a = np.einsum("tq,qk->tk", 1.0 / r, nw)
        u = z / r[..., None] ** 1.5
        b = np.einsum("tqi,tqj,qk->tijk", u, u, nw)
        T = (np.eye(3)[None, :, :, None] * a[:, None, None, :] - b) * (-1.0 / (4 * np.pi))
        return (T + T.transpose(0, 1, 3, 2) + T.transpose(0, 2, 1, 3) + T.transpose(0, 2, 3, 1)
                + T.transpose(0, 3, 1, 2) + T.transpose(0, 3, 2, 1)) / 6.0
    return _accumulate(q, x, k, (3, 3, 3))


def _as_matrix(B):
    B = np.asarray(getattr(B, "entries", B), dtype=float)
    if B.shape != (3, 3):
        raise ValueError("B must be 3x3")
    return 0.5 * (B + B.T)


def wB_potential(shape, B, x, level=DEFAULT_LEVEL, near="raise"):
    """sum_ij B_ij d_i d_j p."""
    return np.einsum("...ij,ij->...", hess_p(shape, x, level, near), _as_matrix(B))


def grad_wB(shape, B, x, level=DEFAULT_LEVEL, near="raise"):
    return np.einsum("...ijk,ij->...k", third_p(shape, x, level, near), _as_matrix(B))


# ----------------------------------------------------------------------------
# layer potentials


def single_layer(quad, f, x, pair, near="raise"):
    """Single-layer potential of the density ``f`` (one 3-vector per node)."""
    f = np.asarray(f, dtype=float)
    if f.shape != quad.points.shape:
        raise ValueError("density must have one 3-vector per quadrature node")
    _check_near(quad, x, near)
    a1, a2 = pair.alpha1, pair.alpha2
    fw = f * quad.weights[:, None]

    def k(z, r, n, w):
        t1 = np.einsum("tq,qi->ti", 1.0 / r, fw)
        zf = np.einsum("tqi,qi->tq", z, fw) / r ** 3
        t2 = np.einsum("tqi,tq->ti", z, zf)
        return -(a1 * t1 + a2 * t2) / (4 * np.pi)
    return _accumulate(quad, x, k, (3,))


def single_layer_bstar(shape, Bs, x, pair, level=DEFAULT_LEVEL, near="raise"):
    """Single-layer potential of the traction density ``Bs n``."""
    q = surface_rule(shape, level)
    return single_layer(q, q.normals @ _as_matrix(Bs).T, x, pair, near)


def h_decomposition_check(quad, f, x, pair, near="raise"):
    """Single-layer potential computed directly and through the biharmonic ``H``.

    The second value applies ``-(a1 + a2)/2 Laplacian + a2 grad div`` to
    ``H[f] = (1/4pi) int |x - y| f`` with the derivatives taken on the kernel.
    """
    direct = single_layer(quad, f, x, pair, near)
    a1, a2 = pair.alpha1, pair.alpha2
    fw = np.asarray(f, dtype=float) * quad.weights[:, None]

    def k(z, r, n, w):
        lap = np.einsum("tq,qi->ti", 2.0 / r, fw)
        zf = np.einsum("tqi,qi->tq", z, fw) / r ** 3
        gd = np.einsum("tq,qi->ti", 1.0 / r, fw) - np.einsum("tqi,tq->ti", z, zf)
        return (-(a1 + a2) / 2 * lap + a2 * gd) / (4 * np.pi)
    via_h = _accumulate(quad, x, k, (3,))
    return direct, via_h


# ----------------------------------------------------------------------------
# samples and quadratic fits


@dataclass(frozen=True)
class PotentialSamples:
    points: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("non-finite potential values")

    def to_csv(self, path):
        vals = self.values.reshape(len(self.points), -1)
        names = ["value"] if vals.shape[1] == 1 else [f"value{i}" for i in range(vals.shape[1])]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y", "z", *names, "kind"])
            for p, v in zip(self.points, vals):
                wr.writerow([*map(repr, map(float, p)), *map(repr, map(float, v)), self.kind])


@dataclass(frozen=True)
class QuadraticFit:
    """Least-squares quadratic in x, y, z.

    ``coeffs`` order: 1, x, y, z, xx, xy, xz, yy, yz, zz.
    """

    coeffs: np.ndarray
    rel_residual: float

    def __call__(self, x):
        return _quad_design(np.asarray(x, dtype=float).reshape(-1, 3)) @ self.coeffs

    def hessian(self):
        c = self.coeffs
        return np.array([[2 * c[4], c[5], c[6]], [c[5], 2 * c[7], c[8]], [c[6], c[8], 2 * c[9]]])


def _quad_design(X):
    cols = [np.ones(len(X)), X[:, 0], X[:, 1], X[:, 2]]
    cols += [X[:, i] * X[:, j] for i, j in combinations_with_replacement(range(3), 2)]
    return np.stack(cols, axis=1)


def fit_quadratic(points, values):
    X = np.asarray(points, dtype=float).reshape(-1, 3)
    y = np.asarray(values, dtype=float).ravel()
    D = _quad_design(X)
    if len(y) < 10 or np.linalg.matrix_rank(D) < 10:
        raise GeometryError("rank-deficient sample set for a quadratic fit")
    # center and scale the columns for conditioning
    scale = np.abs(D).max(axis=0)
    c, *_ = np.linalg.lstsq(D / scale, y, rcond=None)
    c = c / scale
    res = y - D @ c
    spread = np.sqrt(np.mean((y - y.mean()) ** 2))
    rel = float(np.sqrt(np.mean(res ** 2)) / spread) if spread > 0 else 0.0
    return QuadraticFit(c, rel)


def quadratic_fit_w(shape, samples, level=DEFAULT_LEVEL):
    """Fit a quadratic to w at interior ``samples``; small residual marks ellipsoids."""
    samples = np.asarray(samples, dtype=float).reshape(-1, 3)
    if len(samples) < 30:
        raise GeometryError("need at least 30 interior samples")
    return fit_quadratic(samples, w_potential(shape, samples, level))
