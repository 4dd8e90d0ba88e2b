"""Galerkin Green operator on a voxel grid.

For a polarization that is constant on cubic cells, the induced strain
averaged over a target cell depends only on the integer offset between the
cells.  With the Kelvin matrix written as ``-c1 delta/r + c2 d_k d_j r`` the
cell-averaged strain due to a unit cell carrying ``P`` is

    e(s) = c1 sym(D2(s) P) - c2 D4(s) : P,

where ``D2`` and ``D4`` are the cube-cube integrals of the second
derivatives of ``1/r`` and the fourth derivatives of ``r``.  The cube-cube
integral of any kernel equals its integral against the tent function
``prod(1 - |t_i|)``, so derivatives can be moved onto the tent: two
derivatives along one axis become point evaluations at ``t_i = -1, 0, 1``
with weights ``(1, -2, 1)``.  What remains are one- and two-dimensional
integrals of mildly singular functions, done with Gauss rules and a
Duffy split at the singular corner.  Far offsets use the moment expansion
``K(s) + (1/12) Laplacian K(s)``.

All integrals are for unit cells; for cells of size ``h`` the double
integral scales with ``h^3`` and the averaged strain is scale free.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from .tensors import make_basis

__all__ = ["cell_integrals", "d4_far", "d4_near", "strain_kernel", "GreenOperator",
           "NEAR_RADIUS"]

NEAR_RADIUS = 8
GAUSS_N = 12
_W = {-1: 1.0, 0: -2.0, 1: 1.0}


@lru_cache(maxsize=None)
def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _duffy_nodes(n):
    """Nodes/weights on [0,1]^2 clustered at the corner (0, 0)."""
    x, w = _gauss01(n)
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wx, we = np.meshgrid(w, w, indexing="ij")
    u1, v1, w1 = xi.ravel(), (xi * eta).ravel(), (wx * we * xi).ravel()
    return np.concatenate([u1, v1]), np.concatenate([v1, u1]), np.concatenate([w1, w1])


def _square_rule(base_jk, n):
    """Quadrature for the four unit squares of [-1,1]^2.

    Each square is Duffy-split from the corner closest to the point where
    the in-plane coordinates of ``base + t`` vanish, which removes the
    singularity whenever it sits on a corner.  Returns (tj, tk, w) with a
    leading axis over the rows of ``base_jk``.
    """
    du, dv, dw = _duffy_nodes(n)
    tj, tk, ww = [], [], []
    sing = -base_jk  # (N, 2) singular point in t coordinates
    for lo_j, lo_k in product((-1.0, 0.0), repeat=2):
        cj = np.clip(np.round(sing[:, 0]), lo_j, lo_j + 1.0)
        ck = np.clip(np.round(sing[:, 1]), lo_k, lo_k + 1.0)
        sj = np.where(cj == lo_j, 1.0, -1.0)
        sk = np.where(ck == lo_k, 1.0, -1.0)
        tj.append(cj[:, None] + sj[:, None] * du[None, :])
        tk.append(ck[:, None] + sk[:, None] * dv[None, :])
        ww.append(np.broadcast_to(dw, (len(base_jk), len(dw))))
    return np.concatenate(tj, axis=1), np.concatenate(tk, axis=1), np.concatenate(ww, axis=1)


def _line_rule(n):
    x, w = _gauss01(n)
    return np.concatenate([x - 1.0, x]), np.concatenate([w, w])


def d4_near(offsets, n=GAUSS_N):
    """Exact (quadrature) cube-cube integrals of the fourth derivatives of r.

    ``offsets`` is an (N, 3) integer array; returns (N, 3, 3, 3, 3).
    """
    S = np.asarray(offsets, dtype=float).reshape(-1, 3)
    N = len(S)
    out = np.zeros((N, 3, 3, 3, 3))
    tl, wl = _line_rule(n)
    tent_l = (1.0 - np.abs(tl)) * wl

    def plane(i, a):
        j, k = [m for m in range(3) if m != i]
        base = S.copy()
        base[:, i] += a
        tj, tk, w = _square_rule(base[:, [j, k]], n)
        X = np.empty(tj.shape + (3,))
        X[..., i] = base[:, i:i + 1]
        X[..., j] = base[:, j:j + 1] + tj
        X[..., k] = base[:, k:k + 1] + tk
        r = np.sqrt(np.sum(X ** 2, axis=-1))
        return j, k, X, r, tj, tk, w

    def assign(val, idx):
        for p in set(_perms(idx)):
            out[(slice(None),) + p] = val

    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        v_iiii = np.zeros(N)
        v_iiij = np.zeros(N)
        v_iiik = np.zeros(N)
        v_iijk = np.zeros(N)
        for a in (-1, 0, 1):
            _, _, X, r, tj, tk, w = plane(i, a)
            Tj, Tk = 1.0 - np.abs(tj), 1.0 - np.abs(tk)
            rs = np.where(r > 0, r, 1.0)
            rho2 = X[..., j] ** 2 + X[..., k] ** 2
            f4 = np.where(r > 0, rho2 / rs ** 3, 0.0)
            v_iiii += _W[a] * np.sum(f4 * Tj * Tk * w, axis=1)
            g = np.where(r > 0, -X[..., i] / rs ** 3, 0.0)
            v_iiij += _W[a] * np.sum(g * X[..., j] * Tj * Tk * w, axis=1)
            v_iiik += _W[a] * np.sum(g * X[..., k] * Tj * Tk * w, axis=1)
            v_iijk += _W[a] * np.sum(r * np.sign(tj) * np.sign(tk) * w, axis=1)
        assign(v_iiii, (i, i, i, i))
        assign(v_iiij, (i, i, i, j))
        assign(v_iiik, (i, i, i, k))
        assign(v_iijk, (i, i, j, k))
    for i, j in ((0, 1), (0, 2), (1, 2)):
        k = 3 - i - j
        v = np.zeros(N)
        for a, b in product((-1, 0, 1), repeat=2):
            base = S.copy()
            base[:, i] += a
            base[:, j] += b
            X = np.repeat(base[:, None, :], len(tl), axis=1)
            X[..., k] += tl[None, :]
            r = np.sqrt(np.sum(X ** 2, axis=-1))
            v += _W[a] * _W[b] * (r @ tent_l)
        assign(v, (i, i, j, j))
    return out


@lru_cache(maxsize=None)
def _perms_cached(idx):
    from itertools import permutations
    return tuple(set(permutations(idx)))


def _perms(idx):
    return _perms_cached(tuple(idx))


def _sym_pairs(X, r):
    """Sum over the six index pairings delta_ab x_c x_d (fully symmetric)."""
    d = np.eye(3)
    xx = X[:, :, None] * X[:, None, :]
    S2 = (np.einsum("ij,pkl->pijkl", d, xx) + np.einsum("ik,pjl->pijkl", d, xx)
          + np.einsum("il,pjk->pijkl", d, xx) + np.einsum("jk,pil->pijkl", d, xx)
          + np.einsum("jl,pik->pijkl", d, xx) + np.einsum("kl,pij->pijkl", d, xx))
    S0 = np.einsum("ij,kl->ijkl", d, d) + np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)
    X4 = np.einsum("pi,pj,pk,pl->pijkl", X, X, X, X)
    return S0, S2, X4


def d4_far(offsets):
    """Moment expansion of the cube-cube integral of the fourth derivatives of r."""
    X = np.asarray(offsets, dtype=float).reshape(-1, 3)
    r = np.linalg.norm(X, axis=1)[:, None, None, None, None]
    S0, S2, X4 = _sym_pairs(X, r)
    d4r = -S0 / r ** 3 + 3 * S2 / r ** 5 - 15 * X4 / r ** 7
    d4inv = 3 * S0 / r ** 5 - 15 * S2 / r ** 7 + 105 * X4 / r ** 9
    return d4r + d4inv / 6.0


def _canonical_offsets(R):
    g = np.arange(R + 1)
    return np.array(list(product(g, g, g)), dtype=int)


@lru_cache(maxsize=None)
def _near_table(R, n):
    offs = _canonical_offsets(R)
    tab = d4_near(offs, n)
    tab.setflags(write=False)
    return offs, tab


def cell_integrals(offsets, R=NEAR_RADIUS, n=GAUSS_N):
    """(D2, D4) for integer offsets of unit cells, shapes (N,3,3) and (N,3,3,3,3)."""
    S = np.asarray(offsets, dtype=int).reshape(-1, 3)
    D4 = np.empty((len(S), 3, 3, 3, 3))
    near = np.abs(S).max(axis=1) <= R
    if np.any(~near):
        D4[~near] = d4_far(S[~near])
    if np.any(near):
        offs, tab = _near_table(R, n)
        Sn = S[near]
        idx = (np.abs(Sn[:, 0]) * (R + 1) + np.abs(Sn[:, 1])) * (R + 1) + np.abs(Sn[:, 2])
        sg = np.where(Sn < 0, -1.0, 1.0)
        D4[near] = tab[idx] * np.einsum("pi,pj,pk,pl->pijkl", sg, sg, sg, sg)
    D2 = 0.5 * np.einsum("pijkk->pij", D4)
    return D2, D4


def strain_kernel(offsets, pair, R=NEAR_RADIUS, n=GAUSS_N):
    """Cell-averaged strain kernel in basis coordinates, (N, d*, d*).

    Entry [a, b] is ``B_a : e(s)`` for a unit cell carrying ``P = B_b``.
    """
    D2, D4 = cell_integrals(offsets, R, n)
    c1 = (pair.alpha1 + pair.alpha2) / (4 * np.pi)
    c2 = pair.alpha2 / (4 * np.pi)
    E = make_basis(3).elements
    t1 = np.einsum("aij,pjk,bki->pab", E, D2, E)  # B_a : (D2 B_b), symmetric part implied
    t2 = np.einsum("aij,pijkl,bkl->pab", E, D4, E)
    return c1 * t1 - c2 * t2


def _reflection_signs():
    """chi[m, a] = sign picked up by basis element a under reflection m (bit mask)."""
    E = make_basis(3).elements
    chi = np.empty((8, 6))
    for m in range(8):
        sg = np.array([-1.0 if m >> i & 1 else 1.0 for i in range(3)])
        F = E * sg[None, :, None] * sg[None, None, :]
        chi[m] = np.einsum("aij,aij->a", F, E)
    return chi


class GreenOperator:
    """Convolution with the cell strain kernel on a fixed grid, by FFT.

    ``apply(P)`` maps cell polarizations (dims + (6,)) to cell-averaged
    strains (same shape), both in basis coordinates.
    """

    def __init__(self, dims, pair, R=NEAR_RADIUS, n=GAUSS_N, chunk=4096):
        self.dims = tuple(int(d) for d in dims)
        self.pad = tuple(2 * d for d in self.dims)
        grids = np.meshgrid(*[np.arange(d) for d in self.dims], indexing="ij")
        offs = np.stack([g.ravel() for g in grids], axis=1)
        Kp = np.concatenate([strain_kernel(offs[s:s + chunk], pair, R, n)
                             for s in range(0, len(offs), chunk)])
        Kp = Kp.reshape(self.dims + (6, 6))
        chi = _reflection_signs()
        K = np.zeros(self.pad + (6, 6))
        for m in range(8):
            idx = []
            for ax, d in enumerate(self.dims):
                if m >> ax & 1:
                    if d == 1:
                        break
                    # negative offsets -1..-(d-1) live at pad-1 .. pad-d+1
                    idx.append((np.arange(1, d), (2 * d - np.arange(1, d))))
                else:
                    idx.append((np.arange(d), np.arange(d)))
            else:
                src = np.ix_(*[a for a, _ in idx])
                dst = np.ix_(*[b for _, b in idx])
                K[dst] = Kp[src] * np.outer(chi[m], chi[m])
        self.self_block = Kp[0, 0, 0].copy()
        self._khat = np.fft.rfftn(K, axes=(0, 1, 2))

    def apply(self, P):
        P = np.asarray(P, dtype=float)
        Phat = np.fft.rfftn(P, s=self.pad, axes=(0, 1, 2))
        Ehat = np.einsum("...ab,...b->...a", self._khat, Phat)
        E = np.fft.irfftn(Ehat, s=self.pad, axes=(0, 1, 2))
        return E[: self.dims[0], : self.dims[1], : self.dims[2]]
