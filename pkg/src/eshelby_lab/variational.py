"""Polarization functional on a voxelized inclusion.

The polarization ``P`` is constant on each grid cell and lives on the part
of the cell inside the inclusion (occupancy ``f``).  Cell interactions use
the Galerkin kernel of :mod:`eshelby_lab.green` applied to the smeared
density ``f P``.  Smearing under-counts the self interaction of a partial
cell, so the diagonal carries the correction ``-(1 - f) P_sph``, with
``P_sph`` the Hill tensor of a sphere; this keeps the discrete operator
negative definite and makes its Lambda-block traces exactly proportional
to the occupied volume, as they are for the continuous operator.

With ``F`` the discrete operator the functional is

    E_A(P) = <P, F P> + <P, (C0 - C1)^{-1} P> + 2 <P, A>,

with cell-volume weights ``f h^3``.  It is concave when the inclusion is
stiffer than the matrix and convex otherwise; in both cases the stationary
point solves a symmetric definite system, handled by preconditioned
conjugate gradients.  The stationary value is ``A : M A`` and the
integral of the optimal ``P`` is ``M A``.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import NumericalError
from .geometry import VoxelGrid, voxelize
from .green import GreenOperator
from .tensors import MaterialPair, Tensor4, contrast_tensor, make_basis, to_vec

__all__ = [
    "PolarizationField", "GreenApplication", "Discretization", "discretize",
    "green_apply", "energy_EA", "maximize_EA", "identity_sums", "identity_targets",
    "hill_sphere", "periodic_negdef_check", "variational_emt_columns", "thread_count",
]


def thread_count():
    """Worker threads from ESHELBY_THREADS (default: all cores)."""
    val = os.environ.get("ESHELBY_THREADS")
    if val:
        try:
            return max(1, int(val))
        except ValueError:
            raise ValueError("ESHELBY_THREADS must be a positive integer") from None
    return os.cpu_count() or 1


def hill_sphere(pair):
    """Hill polarization tensor of a sphere in the matrix phase (basis coords)."""
    lam, mu = pair.lam, pair.mu
    kap = pair.kappa_conv
    p1 = 1.0 / (3.0 * (lam + 2.0 * mu))
    p2 = 3.0 * (kap + 2.0 * mu) / (5.0 * mu * (3.0 * kap + 4.0 * mu))
    return np.diag([p1] + [p2] * 5)


def identity_targets(pair, l):
    """Shape-independent values of the Lambda_l identity sums at unit volume."""
    d = pair.d
    if l == 1:
        return -1.0 / (d * (pair.lam + 2 * pair.mu))
    if l == 2:
        return -((d - 1) / (d * (pair.lam + 2 * pair.mu)) + (d - 1) / (2 * pair.mu))
    raise ValueError("l must be 1 or 2")


@dataclass(frozen=True)
class PolarizationField:
    """Cell values of P in basis coordinates, shape ``grid.dims + (6,)``."""

    grid: VoxelGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != tuple(self.grid.dims) + (6,):
            raise ValueError("values must have shape grid.dims + (6,)")
        v = np.where((self.grid.fractions > 0)[..., None], v, 0.0)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid, B):
        v = np.broadcast_to(to_vec(np.asarray(B, dtype=float)), tuple(grid.dims) + (6,))
        return cls(grid, v.copy())

    def integral(self):
        """Basis coordinates of the integral of P over the inclusion."""
        w = self.grid.fractions * self.grid.cell ** 3
        return np.einsum("xyz,xyza->a", w, self.values)

    def to_csv(self, path, prefix="p"):
        """One row per occupied cell: index and the six basis coordinates."""
        occ = np.argwhere(self.grid.fractions > 0)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["i", "j", "k"] + [f"{prefix}{a}" for a in range(6)])
            for idx in occ:
                wr.writerow([*map(int, idx), *map(repr, map(float, self.values[tuple(idx)]))])


@dataclass(frozen=True)
class GreenApplication:
    """Cell-averaged strains of F(P) and the energy <P, F P>."""

    strain: np.ndarray
    energy: float


class Discretization:
    """Green operator, occupancy weights and self corrections for one grid."""

    def __init__(self, grid, pair):
        pair.validate()
        self.grid = grid
        self.pair = pair
        self.f = grid.fractions
        self.mask = self.f > 0
        self.vol = self.f * grid.cell ** 3
        self.op = _green_operator(tuple(grid.dims), pair)
        self.hill = hill_sphere(pair)

    def apply_F(self, P):
        """Discrete F(P): cell strains averaged over the occupied part."""
        E = self.op.apply(self.f[..., None] * P)
        E -= (1.0 - self.f)[..., None] * np.einsum("ab,...b->...a", self.hill, P)
        return np.where(self.mask[..., None], E, 0.0)

    def energy(self, P):
        return float(np.einsum("xyz,xyza,xyza->", self.vol, P, self.apply_F(P)))


@lru_cache(maxsize=4)
def _green_operator(dims, pair):
    return GreenOperator(dims, pair)


def discretize(shape, pair, n):
    if n < 4:
        raise ValueError("grid too coarse")
    return Discretization(voxelize(shape, n), pair)


def green_apply(P, pair, disc=None):
    """Apply the discrete F to a polarization field."""
    disc = disc or Discretization(P.grid, pair)
    E = disc.apply_F(P.values)
    return GreenApplication(E, float(np.einsum("xyz,xyza,xyza->", disc.vol, P.values, E)))


def _contrast_inv(pair):
    # (C0 - C1)^{-1} in basis coordinates
    return np.linalg.inv(-contrast_tensor(pair).coeffs)


def energy_EA(P, A, pair, disc=None):
    """E_A(P) = <P, F P> + <P, (C0 - C1)^{-1} P> + 2 <P, A>."""
    disc = disc or Discretization(P.grid, pair)
    a = to_vec(np.asarray(A, dtype=float))
    Kinv = _contrast_inv(pair)
    v = P.values
    quad = np.einsum("xyz,xyza,ab,xyzb->", disc.vol, v, Kinv, v)
    lin = np.einsum("xyz,xyza,a->", disc.vol, v, a)
    return disc.energy(v) + quad + 2.0 * lin


@dataclass(frozen=True)
class MaximizerInfo:
    value: float
    iterations: int
    stationarity: float  # relative residual of the optimality condition
    concave: bool


def _solve(disc, a, tol=1e-8, maxiter=None):
    pair = disc.pair
    Kinv = _contrast_inv(pair)
    m = disc.mask
    nm = int(m.sum())
    dims = tuple(disc.grid.dims)
    vol = disc.vol[m]
    sgn = -1.0 if pair.contrast_sign > 0 else 1.0  # makes the system positive definite

    def hess(x):
        P = np.zeros(dims + (6,))
        P[m] = x.reshape(nm, 6)
        HP = disc.apply_F(P)[m] + P[m] @ Kinv.T
        return (sgn * vol[:, None] * HP).ravel()

    f = disc.f[m]
    blocks = (f[:, None, None] * disc.op.self_block[None]
              - (1.0 - f)[:, None, None] * disc.hill[None] + Kinv[None])
    blocks = sgn * vol[:, None, None] * blocks
    binv = np.linalg.inv(blocks)

    def prec(r):
        return np.einsum("pab,pb->pa", binv, r.reshape(nm, 6)).ravel()

    rhs = -sgn * (vol[:, None] * a[None, :]).ravel()
    n = nm * 6
    Aop = LinearOperator((n, n), matvec=hess, dtype=float)
    Mop = LinearOperator((n, n), matvec=prec, dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    if not np.any(a):
        x = np.zeros(n)
    else:
        x, info = cg(Aop, rhs, rtol=tol, atol=0.0, maxiter=maxiter or 10 * n, M=Mop, callback=cb)
        if info != 0:
            raise NumericalError(f"conjugate gradients did not converge ({info})")
    res = np.linalg.norm(hess(x) - rhs) / max(np.linalg.norm(rhs), 1e-300)
    P = np.zeros(dims + (6,))
    P[m] = x.reshape(nm, 6)
    value = float(np.einsum("p,pa,a->", vol, x.reshape(nm, 6), a))
    return P, MaximizerInfo(value, count[0], float(res) if np.any(a) else 0.0,
                            pair.contrast_sign > 0)


def maximize_EA(A, shape, pair, n=32, disc=None, tol=1e-8, maxiter=None):
    """Stationary point of E_A over polarizations supported in the shape.

    Returns ``(P, info)``; ``info.value`` equals ``A : M A`` for the
    discretized inclusion.
    """
    disc = disc or discretize(shape, pair, n)
    a = to_vec(np.asarray(A, dtype=float))
    P, info = _solve(disc, a, tol, maxiter)
    return PolarizationField(disc.grid, P), info


def variational_emt_columns(shape, pair, n=32, disc=None, tol=1e-8, threads=None):
    """EMT in basis coordinates from the optimal polarizations of the basis loadings."""
    disc = disc or discretize(shape, pair, n)
    E = make_basis(3).elements

    def column(k):
        P, info = _solve(disc, to_vec(E[k]), tol)
        return PolarizationField(disc.grid, P).integral(), info

    workers = threads or thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=min(workers, 6)) as ex:
            out = list(ex.map(column, range(6)))
    else:
        out = [column(k) for k in range(6)]
    M = np.stack([c for c, _ in out], axis=1)
    return M, [i for _, i in out], disc


def identity_sums(shape, pair, l, n=32, disc=None):
    """Sum over a basis of Lambda_l of <B_k, F(1_Omega B_k)>."""
    if l not in (1, 2):
        raise ValueError("l must be 1 or 2")
    disc = disc or discretize(shape, pair, n)
    ks = [0] if l == 1 else [1, 2, 3, 4, 5]
    total = 0.0
    for k in ks:
        P = np.zeros(tuple(disc.grid.dims) + (6,))
        P[..., k] = 1.0
        total += disc.energy(np.where(disc.mask[..., None], P, 0.0))
    return total


def periodic_negdef_check(P, pair, cell=1.0):
    """Check <P, F P> + <C0 F P, F P> = 0 for the periodic Fourier Green operator.

    ``P`` has shape (n1, n2, n3, 3, 3) (symmetric matrices on a periodic
    grid).  Returns ``(energy, residual)`` with the residual relative to
    ``|energy|``.
    """
    P = np.asarray(P, dtype=float)
    dims = P.shape[:3]
    lam, mu = pair.lam, pair.mu
    Ph = np.fft.fftn(P, axes=(0, 1, 2))
    ks = np.meshgrid(*[np.fft.fftfreq(d) for d in dims], indexing="ij")
    xi = np.stack(ks, axis=-1)
    x2 = np.sum(xi ** 2, axis=-1)
    x2[0, 0, 0] = 1.0
    n = xi / np.sqrt(x2)[..., None]
    Pn = np.einsum("...ij,...j->...i", Ph, n)
    nPn = np.einsum("...i,...i->...", Pn, n)
    # displacement amplitude solving the Lame system with body force div P
    u = Pn / mu - (lam + mu) / (mu * (lam + 2 * mu)) * nPn[..., None] * n
    Fh = -0.5 * (u[..., :, None] * n[..., None, :] + n[..., :, None] * u[..., None, :])
    Fh[0, 0, 0] = 0.0
    # Nyquist planes have no conjugate partner with the opposite wave vector
    for ax, d in enumerate(dims):
        if d % 2 == 0:
            sl = [slice(None)] * 3
            sl[ax] = d // 2
            Fh[tuple(sl)] = 0.0
    F = np.real(np.fft.ifftn(Fh, axes=(0, 1, 2)))
    w = cell ** 3
    e1 = w * np.sum(P * F)
    trF = np.einsum("...ii->...", F)
    CF = lam * trF[..., None, None] * np.eye(3) + 2 * mu * F
    e2 = w * np.sum(CF * F)
    return float(e1), float(abs(e1 + e2) / max(abs(e1), 1e-300))
