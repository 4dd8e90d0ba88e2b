"""Elastic moment tensors and the trace bounds on their inverse.

Two assembly routes are provided: the exact constant-strain route for
ellipsoids (the EMT applied to a loading is ``|Omega| B*`` for the uniform
interior strain ``B``) and the variational route for arbitrary voxelized
shapes.  :func:`bound_report` compares the Lambda-block traces of the
inverse EMT with the optimal constants ``K1`` and ``K2``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError
from .potentials import DEFAULT_LEVEL
from .tensors import Tensor4, bstar, make_basis, to_vec
from .uniformity import ellipsoid_moments, interior_strain_ellipsoid

__all__ = [
    "EMTReport", "BoundReport", "trace_bound_constants", "emt_constant_strain",
    "emt_variational", "bound_report", "report_bounds", "write_sweep_csv",
]


def trace_bound_constants(pair, d=None):
    """``(K1, K2)`` evaluated with the bulk modulus ``lam + 2 mu / d``."""
    d = d or pair.d
    mu, mut = pair.mu, pair.mu_t
    kap, kapt = pair.lam + 2 * mu / d, pair.lam_t + 2 * mut / d
    if kapt == kap or mut == mu:
        raise ValueError("trace bounds need nonzero bulk and shear contrast")
    K1 = (d * kapt + 2 * (d - 1) * mu) / (d * (kapt - kap) * (d * kap + 2 * (d - 1) * mu))
    K2 = ((d * d + d - 2) / 2 + 2 * (mut - mu) * ((d - 1) / (2 * mu)
          + (d - 1) / (d * kap + 2 * (d - 1) * mu))) / (2 * (mut - mu))
    return K1, K2


@dataclass(frozen=True)
class EMTReport:
    """An assembled EMT (basis coordinates) with its diagnostics.

    ``M`` is the symmetrized tensor; ``symmetry_defect`` is measured before
    symmetrizing.  ``error_estimate`` bounds the entrywise discretization
    error when it was estimated.
    """

    M: Tensor4
    method: str
    symmetry_defect: float
    definiteness_sign: int
    volume: float
    error_estimate: float | None = None
    details: dict = field(default_factory=dict)
    reference: Tensor4 | None = field(default=None, repr=False, compare=False)

    def to_json(self):
        out = {"M": self.M.coeffs.tolist(), "method": self.method,
               "symmetry_defect": self.symmetry_defect,
               "definiteness_sign": self.definiteness_sign, "volume": self.volume,
               "error_estimate": self.error_estimate}
        out.update(self.details)
        return out


def _finish(M, method, volume, pair, error=None, details=None, reference=None):
    M = np.asarray(M, dtype=float)
    nrm = np.linalg.norm(M)
    defect = float(np.linalg.norm(M - M.T) / nrm) if nrm > 0 else 0.0
    Ms = 0.5 * (M + M.T)
    ev = np.linalg.eigvalsh(Ms)
    if np.all(ev > 0):
        sign = 1
    elif np.all(ev < 0):
        sign = -1
    else:
        sign = 0
    if sign not in (0, pair.contrast_sign) or (sign == 0 and nrm > 0):
        raise NumericalError(f"EMT is not definite with the contrast sign (eigenvalues {ev})")
    ref = None if reference is None else Tensor4(0.5 * (reference + reference.T), pair.d)
    return EMTReport(Tensor4(Ms, pair.d), method, defect, sign, float(volume), error,
                     details or {}, ref)


def emt_constant_strain(shape, pair, method="analytic", level=DEFAULT_LEVEL, moments=None):
    """EMT of an ellipsoid from its uniform interior strains.

    Column ``k`` is ``|Omega| B*_k`` where ``B_k`` is the interior strain
    for the basis loading ``k``.  With ``method="quadrature"`` the entrywise
    difference to the next coarser level is attached as ``error_estimate``.
    """
    pair.validate()
    E = make_basis(3).elements
    mom = moments or ellipsoid_moments(shape, method=method, level=level)

    def assemble(m):
        cols = [to_vec(bstar(interior_strain_ellipsoid(Ek, shape, pair, moments=m).B, pair))
                for Ek in E]
        return np.stack(cols, axis=1) * shape.volume

    M = assemble(mom)
    coarse = None
    if mom.method == "quadrature":
        # the coarse level only feeds the error estimate, so its fit is not gated
        coarse = assemble(ellipsoid_moments(shape, method="quadrature", level=level - 1,
                                            fit_tol=np.inf))
        err = float(np.abs(M - coarse).max())
    else:
        err = ANALYTIC_REL_ERR * float(np.abs(M).max())
    return _finish(M, f"constant_strain-{mom.method}", shape.volume, pair, err,
                   {"moment_fit_residual": mom.fit_residual}, coarse)


ANALYTIC_REL_ERR = 1e-12
MIN_GRID = 16


def emt_variational(shape, pair, n=32, tol=1e-8, threads=None):
    """EMT from the stationary polarizations of the six basis loadings."""
    from .variational import variational_emt_columns

    if n < MIN_GRID:
        raise ValueError(f"variational EMT needs a grid of at least {MIN_GRID} cells")

    M, infos, disc = variational_emt_columns(shape, pair, n, tol=tol, threads=threads)
    details = {"grid": int(n), "cells": int(disc.mask.sum()),
               "voxel_volume": disc.grid.volume,
               "iterations": [i.iterations for i in infos],
               "stationarity": max(i.stationarity for i in infos)}
    return _finish(M, "variational", disc.grid.volume, pair, None, details)


@dataclass(frozen=True)
class BoundReport:
    tr1: float
    tr2: float
    K1: float
    K2: float
    gap1: float
    gap2: float
    total_gap: float
    trace_inv: float
    condition: float
    eps_num: float | None = None
    kappa_paper: tuple = ()
    kappa_conv: tuple = ()

    @property
    def consistent(self):
        """Gaps carry the sign the bounds predict (up to ``eps_num``)."""
        eps = self.eps_num or 0.0
        s = 1 if self.K1 > 0 else -1
        return s * self.gap1 >= -eps and s * self.gap2 >= -eps

    def attained(self, eps=None):
        eps = self.eps_num if eps is None else eps
        return abs(self.gap1) <= eps and abs(self.gap2) <= eps

    def to_json(self):
        return {"tr1": self.tr1, "tr2": self.tr2, "K1": self.K1, "K2": self.K2,
                "gap1": self.gap1, "gap2": self.gap2, "total_gap": self.total_gap,
                "trace_inverse": self.trace_inv, "condition_number": self.condition,
                "eps_num": self.eps_num,
                "kappa_paper": list(self.kappa_paper), "kappa_conv": list(self.kappa_conv)}


def bound_report(M, pair, volume=1.0, eps_num=None):
    """Block traces of the inverse EMT (per unit volume) against K1, K2."""
    C = np.asarray(getattr(M, "coeffs", M), dtype=float) / volume
    C = 0.5 * (C + C.T)
    ev, V = np.linalg.eigh(C)
    if np.min(np.abs(ev)) == 0 or not np.all(np.isfinite(ev)):
        raise NumericalError("EMT is singular")
    cond = float(np.abs(ev).max() / np.abs(ev).min())
    if cond > 1e12:
        raise NumericalError(f"EMT is numerically singular (condition number {cond:.3g})")
    Minv = (V / ev) @ V.T
    tr1 = float(Minv[0, 0])
    tr2 = float(np.trace(Minv) - Minv[0, 0])
    K1, K2 = trace_bound_constants(pair)
    return BoundReport(tr1, tr2, K1, K2, K1 - tr1, K2 - tr2, (K1 + K2) - float(np.trace(Minv)),
                       float(np.trace(Minv)), cond, eps_num,
                       (pair.kappa_paper, pair.kappa_t_paper), (pair.kappa_conv, pair.kappa_t_conv))


def report_bounds(report, pair):
    """:func:`bound_report` with ``eps_num`` = 10x the estimated gap error.

    The gap error is the change of the gaps against the coarser reference
    EMT when one is attached, otherwise the relative error budget of the
    analytic route.
    """
    br = bound_report(report.M, pair, report.volume)
    if report.reference is not None:
        rc = bound_report(report.reference, pair, report.volume)
        est = max(abs(br.gap1 - rc.gap1), abs(br.gap2 - rc.gap2))
    elif report.method == "constant_strain-analytic":
        est = ANALYTIC_REL_ERR * br.condition * max(abs(br.K1), abs(br.K2))
    else:
        return br
    return replace(br, eps_num=10.0 * est)


def write_sweep_csv(path, rows):
    """Rows of (aspect_ratio, gap1, gap2[, ...]) as plot-ready CSV."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["aspect_ratio", "gap1", "gap2"])
        for r in rows:
            wr.writerow([repr(float(v)) for v in r[:3]])
