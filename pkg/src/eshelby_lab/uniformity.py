"""Uniform interior strain: the ellipsoid solver and the uniformity residual.

If the displacement inside the inclusion is ``Bx + Rx + v`` (``B``
symmetric, ``R`` an infinitesimal rotation), the single-layer
representation of the exterior field gives, at every interior point,

    alpha B* grad w - grad w^{B*} = (1/alpha2) ((B - A) x + R x + v),

where ``B* = (C1 - C0) B``.  For an ellipsoid both sides are linear in x and
matching coefficients yields a 6x6 system for ``B``.  For any other shape
the same relation is fitted by least squares and the normalized misfit
measures how far the interior strain is from uniform.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import GeometryError, NumericalError
from .geometry import interior_samples
from .potentials import DEFAULT_LEVEL, grad_w, third_p
from .tensors import EigenClass, SymMat, bstar, eigen_class, from_vec, make_basis

__all__ = [
    "EllipsoidMoments", "StrainSolution", "ellipsoid_moments",
    "interior_strain_ellipsoid", "uniformity_residual", "relation_defect",
]

FIT_TOL = 1e-6

_SKEW = np.array([[[0, 0, 0], [0, 0, -1], [0, 1, 0]],
                  [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],
                  [[0, -1, 0], [1, 0, 0], [0, 0, 0]]], dtype=float)


@dataclass(frozen=True)
class EllipsoidMoments:
    """Constant interior Hessian ``W`` of w and fourth derivative ``T`` of p."""

    W: np.ndarray
    T: np.ndarray
    fit_residual: float = 0.0
    method: str = "analytic"

    @property
    def trace_defect(self):
        """max |sum_i T_iikl - W_kl| (zero because the Laplacian of p is w)."""
        return float(np.abs(np.einsum("iikl->kl", self.T) - self.W).max())

    def contract(self, Bs):
        """(T : B*)_kl = sum_ij T_ijkl B*_ij."""
        return np.einsum("ijkl,ij->kl", self.T, Bs)


@dataclass(frozen=True)
class StrainSolution:
    """Interior strain ``B``, rigid shift ``v`` and rotation ``R``.

    ``residual`` is the RMS misfit of the displacement relation over fresh
    interior samples, divided by ``|A|`` times the RMS sample radius.
    """

    B: np.ndarray
    v: np.ndarray
    residual: float
    R: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    condition: float = 1.0
    method: str = ""

    @property
    def eigen_class(self):
        return eigen_class(self.B, tol=max(1e-8, 10 * self.residual) * np.linalg.norm(self.B))

    def to_json(self):
        return {"B": SymMat(0.5 * (self.B + self.B.T)).to_json(), "v": self.v.tolist(),
                "R": self.R.tolist(), "residual": self.residual,
                "eigen_class": EigenClass(self.eigen_class).value,
                "condition": self.condition, "method": self.method}


# ----------------------------------------------------------------------------
# moments


def _analytic_body_moments(a):
    a2 = np.asarray(a, dtype=float) ** 2
    abc = float(np.sqrt(np.prod(a2)))

    def q(f):
        # integrate over s in [0, inf) after s = t / (1 - t) for smoothness
        def g(t):
            s = t / (1.0 - t)
            delta = np.sqrt(np.prod(a2 + s))
            return f(s) / delta / (1.0 - t) ** 2
        val, _ = integrate.quad(g, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
        return val

    W = np.diag([-abc * q(lambda s, i=i: 1.0 / (a2[i] + s)) for i in range(3)])
    # I_ik = int s / ((a_i^2 + s)(a_k^2 + s) Delta) ds
    I = np.empty((3, 3))
    for i in range(3):
        for k in range(i, 3):
            I[i, k] = I[k, i] = q(lambda s, i=i, k=k: s / ((a2[i] + s) * (a2[k] + s)))
    d = np.eye(3)
    T = -(abc / 2.0) * (np.einsum("ij,kl,ik->ijkl", d, d, I)
                        + np.einsum("ik,jl,ij->ijkl", d, d, I)
                        + np.einsum("il,jk,ij->ijkl", d, d, I))
    return W, T


def _fit_linear(X, Y):
    """Fit Y ~ X G^T + c per output column; returns (G, c, relative residual)."""
    D = np.column_stack([X, np.ones(len(X))])
    Yf = Y.reshape(len(X), -1)
    coef, *_ = np.linalg.lstsq(D, Yf, rcond=None)
    res = Yf - D @ coef
    scale = np.sqrt(np.mean(Yf ** 2))
    rel = float(np.sqrt(np.mean(res ** 2)) / scale) if scale > 0 else 0.0
    return coef[:3].T, coef[3], rel


def ellipsoid_moments(shape, method="analytic", level=DEFAULT_LEVEL, n_samples=24, seed=0,
                      fit_tol=FIT_TOL):
    """Interior moments of an ellipsoid.

    ``method="analytic"`` evaluates the classical one-dimensional integrals;
    ``"quadrature"`` fits the linear fields grad w and d^3 p at interior
    samples computed by boundary quadrature.
    """
    if not shape.is_ellipsoid:
        raise GeometryError("ellipsoid_moments needs a ball or ellipsoid")
    if method == "analytic":
        W, T = _analytic_body_moments(shape.body_dims)
        R = shape.R
        return EllipsoidMoments(R @ W @ R.T, np.einsum("ai,bj,ck,dl,ijkl->abcd", R, R, R, R, T),
                                0.0, "analytic")
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if n_samples < 20:
        raise GeometryError("need at least 20 interior samples")
    X = interior_samples(shape, n_samples, margin=0.0, rng=seed, shrink=0.6)
    Gw, _, r1 = _fit_linear(X, grad_w(shape, X, level))
    G3, _, r2 = _fit_linear(X, third_p(shape, X, level))
    W = 0.5 * (Gw + Gw.T)
    T = G3.reshape(3, 3, 3, 3)
    T = sum(T.transpose(p) for p in _PERMS4) / 24.0
    res = max(r1, r2)
    if res > fit_tol:
        raise NumericalError(f"moment fit residual {res:.2e} exceeds {fit_tol:g}; "
                             "increase the quadrature level")
    return EllipsoidMoments(W, T, res, "quadrature")


def _perms(n):
    from itertools import permutations
    return [p for p in permutations(range(n))]


_PERMS4 = _perms(4)


# ----------------------------------------------------------------------------
# ellipsoid solver


def _check_loading(A):
    A = np.asarray(getattr(A, "entries", A), dtype=float)
    if A.shape != (3, 3):
        raise ValueError("loading must be 3x3")
    if not np.allclose(A, A.T, atol=1e-14 * max(1.0, np.abs(A).max())):
        raise ValueError("loading must be symmetric")
    return 0.5 * (A + A.T)


def interior_strain_ellipsoid(A, shape, pair, moments=None, method="analytic",
                              level=DEFAULT_LEVEL, check_samples=0, seed=0):
    """Uniform interior strain of an ellipsoid under remote strain ``A``.

    Solves ``alpha sym(B* W) - T : B* = (B - A) / alpha2`` for ``B``.  With
    ``check_samples > 0`` the full relation is re-evaluated by boundary
    quadrature at that many fresh interior points to give ``residual``.
    """
    pair.validate()
    A = _check_loading(A)
    if moments is None:
        moments = ellipsoid_moments(shape, method=method, level=level, seed=seed)
    basis = make_basis(3).elements
    c = 1.0 / pair.alpha2
    al = pair.alpha

    def lhs(E):
        Es = bstar(E, pair)
        BW = Es @ moments.W
        return al * 0.5 * (BW + BW.T) - moments.contract(Es) - c * E

    L = np.stack([np.einsum("kij,ij->k", basis, lhs(E)) for E in basis], axis=1)
    rhs = -c * np.einsum("kij,ij->k", basis, A)
    cond = float(np.linalg.cond(L))
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"singular strain system (condition number {cond:.3g})")
    B = from_vec(np.linalg.solve(L, rhs), 3)
    Bs = bstar(B, pair)
    BW = Bs @ moments.W
    R = pair.alpha2 * al * 0.5 * (BW - BW.T)
    residual = 0.0
    v = np.zeros(3)
    if check_samples:
        X = interior_samples(shape, check_samples, rng=seed + 1)
        d = relation_defect(shape, pair, A, B, X, level)
        v, R, residual = _fit_rigid(X, d, A)
    return StrainSolution(B, v, residual, R, cond, f"ellipsoid-{moments.method}")


# ----------------------------------------------------------------------------
# general shapes


def relation_defect(shape, pair, A, B, X, level=DEFAULT_LEVEL, fields=None):
    """``alpha2 (alpha B* grad w - grad w^{B*}) - (B - A) x`` at points X.

    This is the single-layer potential of ``B* n`` minus ``(B - A) x``; it
    is an affine rigid motion exactly when the interior strain is ``B``.
    """
    G, T3 = fields if fields is not None else (grad_w(shape, X, level), third_p(shape, X, level))
    Bs = bstar(B, pair)
    s = pair.alpha2 * (pair.alpha * G @ Bs.T - np.einsum("pijk,ij->pk", T3, Bs))
    return s - X @ (B - A).T


def _normalizer(X, A):
    Xc = X - X.mean(axis=0)
    return np.linalg.norm(A) * np.sqrt(np.mean(np.sum(Xc ** 2, axis=1)))


def _fit_rigid(X, d, A):
    """Least-squares rigid motion ``v + R x`` through defect ``d``."""
    cols = [np.tile(np.eye(3)[j], (len(X), 1)) for j in range(3)]
    cols += [X @ K.T for K in _SKEW]
    D = np.stack([c.ravel() for c in cols], axis=1)
    coef, *_ = np.linalg.lstsq(D, d.ravel(), rcond=None)
    res = d.ravel() - D @ coef
    nrm = _normalizer(X, A)
    rel = float(np.sqrt(np.mean(np.sum(res.reshape(-1, 3) ** 2, axis=1))) / nrm) if nrm > 0 else 0.0
    return coef[:3], np.einsum("m,mij->ij", coef[3:], _SKEW), rel


def uniformity_residual(shape, A, pair, level=DEFAULT_LEVEL, n_samples=80, margin=0.05, seed=0):
    """Best uniform strain for an arbitrary shape and the normalized misfit.

    Fits ``(B, R, v)`` to the displacement relation at ``n_samples``
    interior points (distance to the boundary at least ``margin`` times the
    diameter), then reports the misfit at an independent set of points.
    """
    pair.validate()
    A = _check_loading(A)
    if n_samples < 60:
        raise GeometryError("need at least 60 interior samples")
    X = interior_samples(shape, n_samples, margin=margin, rng=seed)
    G, T3 = grad_w(shape, X, level), third_p(shape, X, level)
    basis = make_basis(3).elements
    cols = []
    for E in basis:
        Es = bstar(E, pair)
        s = pair.alpha2 * (pair.alpha * G @ Es.T - np.einsum("pijk,ij->pk", T3, Es))
        cols.append((s - X @ E.T).ravel())
    for j in range(3):
        cols.append(-np.tile(np.eye(3)[j], (len(X), 1)).ravel())
    for K in _SKEW:
        cols.append(-(X @ K.T).ravel())
    D = np.stack(cols, axis=1)
    rhs = -(X @ A.T).ravel()
    scale = np.linalg.norm(D, axis=0)
    scale[scale == 0] = 1.0
    coef, _, rank, sv = np.linalg.lstsq(D / scale, rhs, rcond=None)
    if rank < D.shape[1]:
        raise NumericalError("rank-deficient uniformity fit")
    coef = coef / scale
    B = from_vec(coef[:6], 3)
    Y = interior_samples(shape, n_samples, margin=margin, rng=seed + 7919)
    d = relation_defect(shape, pair, A, B, Y, level)
    v, R, residual = _fit_rigid(Y, d, A)
    if np.linalg.norm(A) == 0:
        residual = 0.0
    return StrainSolution(B, v, residual, R, float(sv[0] / sv[-1]), "least-squares")
