"""Symmetric matrices and fourth-order tensors on M_d^s.

Fourth-order tensors are stored by their action on an orthonormal basis of
the space of symmetric d x d matrices, so a tensor is a d* x d* matrix with
d* = d(d+1)/2.  The first basis element is always I/sqrt(d); the remaining
ones span the trace-free subspace.  With that convention the hydrostatic
projector is diag(1, 0, ..., 0) and the deviatoric projector is its
complement.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AdmissibilityError, NumericalError

__all__ = [
    "SymMat", "Tensor4", "OrthoBasis", "MaterialPair", "PencilReport",
    "EigenClass", "make_basis", "to_vec", "from_vec", "lambda_project",
    "tensor_trace", "iso_tensor", "contrast_tensor", "bstar",
    "pencil_check", "eigen_class", "discriminant_poly",
]


def _dstar(d):
    return d * (d + 1) // 2


@dataclass(frozen=True)
class SymMat:
    """A symmetric d x d matrix with JSON round-tripping."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 3):
            raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def d(self):
        return self.entries.shape[0]

    def to_json(self):
        return {"d": self.d, "entries": self.entries.tolist()}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        m = cls(obj["entries"])
        if m.d != obj["d"]:
            raise ValueError("dimension field does not match entries")
        return m


@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal basis of M_d^s; ``elements[0]`` is I/sqrt(d)."""

    d: int
    elements: np.ndarray  # shape (d*, d, d)

    @property
    def dstar(self):
        return self.elements.shape[0]

    def gram(self):
        return np.einsum("kij,lij->kl", self.elements, self.elements)


@lru_cache(maxsize=None)
def _basis_elements(d):
    if d == 3:
        e = np.eye(3)
        els = [np.eye(3) / np.sqrt(3.0),
               (np.outer(e[0], e[0]) - np.outer(e[1], e[1])) / np.sqrt(2.0),
               (np.outer(e[0], e[0]) + np.outer(e[1], e[1])
                - 2.0 * np.outer(e[2], e[2])) / np.sqrt(6.0)]
        for i, j in ((0, 1), (0, 2), (1, 2)):
            els.append((np.outer(e[i], e[j]) + np.outer(e[j], e[i])) / np.sqrt(2.0))
    elif d == 2:
        e = np.eye(2)
        els = [np.eye(2) / np.sqrt(2.0),
               (np.outer(e[0], e[0]) - np.outer(e[1], e[1])) / np.sqrt(2.0),
               (np.outer(e[0], e[1]) + np.outer(e[1], e[0])) / np.sqrt(2.0)]
    else:
        raise ValueError(f"unsupported dimension {d}; expected 2 or 3")
    arr = np.array(els)
    arr.setflags(write=False)
    return arr


def make_basis(d=3):
    """Return the fixed orthonormal basis of symmetric d x d matrices."""
    return OrthoBasis(d, _basis_elements(d))


def to_vec(X):
    """Coordinates of a symmetric matrix (or a stack of them) in the basis."""
    X = np.asarray(X, dtype=float)
    d = X.shape[-1]
    return np.einsum("...ij,kij->...k", X, _basis_elements(d))


def from_vec(v, d=None):
    """Inverse of :func:`to_vec`."""
    v = np.asarray(v, dtype=float)
    if d is None:
        d = {3: 2, 6: 3}[v.shape[-1]]
    return np.einsum("...k,kij->...ij", v, _basis_elements(d))


@dataclass(frozen=True)
class Tensor4:
    """A linear map on M_d^s stored in :func:`make_basis` coordinates.

    ``symmetry_tol`` records the major-symmetry defect of the assembled
    coefficients, ``|C - C^T| / |C|``.
    """

    coeffs: np.ndarray
    d: int = 3
    symmetry_tol: float = field(default=0.0)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        n = _dstar(self.d)
        if c.shape != (n, n):
            raise ValueError(f"coefficient matrix must be {n}x{n}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.symmetry_tol == 0.0:
            nrm = np.linalg.norm(c)
            defect = np.linalg.norm(c - c.T) / nrm if nrm > 0 else 0.0
            object.__setattr__(self, "symmetry_tol", float(defect))

    def apply(self, X):
        """Apply the tensor to a symmetric matrix."""
        return from_vec(self.coeffs @ to_vec(X), self.d)

    def __matmul__(self, other):
        return Tensor4(self.coeffs @ other.coeffs, self.d)

    def __add__(self, other):
        return Tensor4(self.coeffs + other.coeffs, self.d)

    def __sub__(self, other):
        return Tensor4(self.coeffs - other.coeffs, self.d)

    def __rmul__(self, s):
        return Tensor4(float(s) * self.coeffs, self.d)

    def symmetrized(self):
        return Tensor4(0.5 * (self.coeffs + self.coeffs.T), self.d)

    def inverse(self):
        return Tensor4(np.linalg.inv(self.coeffs), self.d)

    def full(self):
        """The d x d x d x d array with minor and major index symmetry."""
        B = _basis_elements(self.d)
        return np.einsum("kl,kij,lpq->ijpq", self.coeffs, B, B)

    @classmethod
    def from_full(cls, T):
        T = np.asarray(T, dtype=float)
        d = T.shape[0]
        B = _basis_elements(d)
        return cls(np.einsum("kij,ijpq,lpq->kl", B, T, B), d)

    @classmethod
    def identity(cls, d=3):
        return cls(np.eye(_dstar(d)), d)

    @classmethod
    def projector(cls, which, d=3):
        """Hydrostatic (``which=1``) or deviatoric (``which=2``) projector."""
        c = np.zeros((_dstar(d), _dstar(d)))
        if which == 1:
            c[0, 0] = 1.0
        elif which == 2:
            c[1:, 1:] = np.eye(_dstar(d) - 1)
        else:
            raise ValueError("which must be 1 or 2")
        return cls(c, d)

    def to_json(self):
        return {"d": self.d, "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj["coeffs"], obj["d"])


def lambda_project(X, which):
    """Hydrostatic (1) or deviatoric (2) part of a symmetric matrix."""
    X = np.asarray(X, dtype=float)
    d = X.shape[-1]
    hyd = np.trace(X, axis1=-2, axis2=-1)[..., None, None] / d * np.eye(d)
    if which == 1:
        return hyd
    if which == 2:
        return X - hyd
    raise ValueError("which must be 1 or 2")


def tensor_trace(T):
    """Sum of T(B_k):B_k over the orthonormal basis."""
    if isinstance(T, Tensor4):
        return float(np.trace(T.coeffs))
    return float(np.trace(np.asarray(T)))


@dataclass(frozen=True)
class MaterialPair:
    """Lamé parameters of the matrix (lam, mu) and inclusion (lam_t, mu_t).

    Two bulk-modulus conventions appear in the literature: ``kappa_paper``
    = d*lam + 2*mu and ``kappa_conv`` = lam + 2*mu/d.  The isotropic
    decomposition C = d*kappa*Lambda1 + 2*mu*Lambda2 holds with
    ``kappa_conv``.
    """

    lam: float
    mu: float
    lam_t: float
    mu_t: float
    d: int = 3

    def __post_init__(self):
        for name in ("lam", "mu", "lam_t", "mu_t"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise AdmissibilityError(f"{name} is not finite")
            object.__setattr__(self, name, v)
        if self.d not in (2, 3):
            raise ValueError(f"unsupported dimension {self.d}")

    # derived moduli
    @property
    def kappa_conv(self):
        return self.lam + 2.0 * self.mu / self.d

    @property
    def kappa_t_conv(self):
        return self.lam_t + 2.0 * self.mu_t / self.d

    @property
    def kappa_paper(self):
        return self.d * self.lam + 2.0 * self.mu

    @property
    def kappa_t_paper(self):
        return self.d * self.lam_t + 2.0 * self.mu_t

    # Kelvin-matrix constants (matrix phase)
    @property
    def alpha1(self):
        return 0.5 * (1.0 / self.mu + 1.0 / (2.0 * self.mu + self.lam))

    @property
    def alpha2(self):
        return 0.5 * (1.0 / self.mu - 1.0 / (2.0 * self.mu + self.lam))

    @property
    def alpha(self):
        return (self.alpha1 + self.alpha2) / (2.0 * self.alpha2)

    def is_admissible(self):
        try:
            self.validate()
        except AdmissibilityError:
            return False
        return True

    def validate(self):
        """Raise :class:`AdmissibilityError` unless the pair is admissible."""
        if not (self.mu > 0 and self.mu_t > 0):
            raise AdmissibilityError("shear moduli must be positive")
        if not (self.kappa_conv > 0 and self.kappa_t_conv > 0):
            raise AdmissibilityError("bulk moduli must be positive")
        if not (self.lam - self.lam_t) * (self.mu - self.mu_t) > 0:
            raise AdmissibilityError(
                "contrast must have the same sign in lambda and mu")
        return self

    @property
    def contrast_sign(self):
        """+1 when the inclusion is stiffer than the matrix, -1 otherwise."""
        return 1 if self.mu_t > self.mu else -1

    def swapped(self):
        return MaterialPair(self.lam_t, self.mu_t, self.lam, self.mu, self.d)

    def to_json(self):
        return {"lambda": self.lam, "mu": self.mu,
                "lambda_tilde": self.lam_t, "mu_tilde": self.mu_t}

    @classmethod
    def from_json(cls, obj, d=3):
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(obj["lambda"], obj["mu"], obj["lambda_tilde"],
                       obj["mu_tilde"], d)
        except KeyError as exc:
            raise AdmissibilityError(f"missing material field {exc}") from None


def iso_tensor(lam, mu, d=3):
    """The isotropic tensor lam I(x)I + 2 mu Id as a :class:`Tensor4`.

    ``lam`` may also be a :class:`MaterialPair`, in which case ``mu`` selects
    the phase: ``"matrix"`` or ``"inclusion"``.
    """
    if isinstance(lam, MaterialPair):
        pair, phase = lam, mu
        if phase == "matrix":
            lam, mu = pair.lam, pair.mu
        elif phase == "inclusion":
            lam, mu = pair.lam_t, pair.mu_t
        else:
            raise ValueError("phase must be 'matrix' or 'inclusion'")
        d = pair.d
    if mu <= 0 or d * lam + 2 * mu <= 0:
        raise AdmissibilityError("isotropic tensor is not strongly convex")
    n = _dstar(d)
    c = np.diag([d * lam + 2.0 * mu] + [2.0 * mu] * (n - 1))
    return Tensor4(c, d)


def contrast_tensor(pair):
    """C1 - C0 for the two phases."""
    n = _dstar(pair.d)
    dl, dm = pair.lam_t - pair.lam, pair.mu_t - pair.mu
    return Tensor4(np.diag([pair.d * dl + 2.0 * dm] + [2.0 * dm] * (n - 1)), pair.d)


def bstar(B, pair):
    """(lam_t - lam) tr(B) I + 2 (mu_t - mu) B."""
    B = np.asarray(B, dtype=float)
    d = B.shape[-1]
    tr = np.trace(B, axis1=-2, axis2=-1)[..., None, None]
    return (pair.lam_t - pair.lam) * tr * np.eye(d) + 2.0 * (pair.mu_t - pair.mu) * B


# ----------------------------------------------------------------------------
# spectra


class EigenClass(str, enum.Enum):
    ALL_EQUAL = "ALL_EQUAL"
    ALL_DISTINCT = "ALL_DISTINCT"
    DOUBLE = "DOUBLE"


def eigen_class(B, tol=None):
    """Classify the spectrum of a symmetric 3x3 matrix.

    ``tol`` is an absolute eigenvalue separation; the default is
    ``1e-8 * ||B||``.  A gap exactly at the tolerance counts as DOUBLE.
    """
    B = np.asarray(B, dtype=float)
    if B.shape != (3, 3):
        raise ValueError("eigen_class needs a 3x3 matrix")
    if tol is None:
        tol = 1e-8 * np.linalg.norm(B)
    ev = np.linalg.eigvalsh(0.5 * (B + B.T))
    gaps = np.diff(ev)
    if ev[-1] - ev[0] < tol:
        return EigenClass.ALL_EQUAL
    if gaps.min() > tol:
        return EigenClass.ALL_DISTINCT
    return EigenClass.DOUBLE


@dataclass(frozen=True)
class PencilReport:
    always_multiple: bool
    diagonalizer: np.ndarray | None
    witness_t: float | None
    discriminant: np.ndarray  # coefficients, lowest degree first
    leading_t4: float | None = None  # (a-b)^2 + 4 d^2 in normalized coords
    leading_t2: float | None = None  # (e^2 + f^2)^2 in normalized coords

    def to_json(self):
        return {
            "always_multiple": self.always_multiple,
            "diagonalizer": None if self.diagonalizer is None else self.diagonalizer.tolist(),
            "witness_t": self.witness_t,
            "discriminant": self.discriminant.tolist(),
            "coef_t4": self.leading_t4,
            "coef_t2": self.leading_t2,
        }


def discriminant_poly(B1, B2):
    """Coefficients (low to high) of the discriminant in t of det(x - B1 - t B2).

    Built with exact polynomial arithmetic on the matrix entries, so the
    result has degree at most 6.
    """
    P = np.polynomial.Polynomial
    M = [[P([B1[i, j], B2[i, j]]) for j in range(3)] for i in range(3)]
    tr = M[0][0] + M[1][1] + M[2][2]
    c2 = (M[0][0] * M[1][1] - M[0][1] * M[1][0]
          + M[0][0] * M[2][2] - M[0][2] * M[2][0]
          + M[1][1] * M[2][2] - M[1][2] * M[2][1])
    det = (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
           - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
           + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]))
    # x^3 + p x^2 + q x + r with p = -tr, q = c2, r = -det
    p, q, r = -tr, c2, -det
    disc = p * p * q * q - 4 * q ** 3 - 4 * p ** 3 * r + 18 * p * q * r - 27 * r * r
    coef = np.zeros(7)
    coef[: len(disc.coef)] = disc.coef
    return coef


def _check_sym(B, name):
    B = np.asarray(B, dtype=float)
    if B.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3")
    if not np.allclose(B, B.T, rtol=0, atol=1e-12 * max(1.0, np.abs(B).max())):
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (B + B.T)


def _min_gap(M):
    return np.diff(np.linalg.eigvalsh(M)).min()


def _witness(B1, B2):
    best_t, best_gap = None, -1.0
    for t in (0.0, 1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 3.0, -3.0, 0.25, 5.0, -5.0):
        g = _min_gap(B1 + t * B2)
        if g > best_gap:
            best_t, best_gap = t, g
    return best_t, best_gap


def pencil_check(B1, B2, tol=1e-10):
    """Decide whether B1 + t B2 has a multiple eigenvalue for every real t.

    Follows the normalization of the classical argument: if B2 is a
    multiple of the identity the pencil only shifts the spectrum of B1;
    otherwise B2 is rotated to diagonal form and, when it has a double
    eigenvalue, affinely normalized to diag(0, 0, 1).  The discriminant of
    the characteristic polynomial is then tested for identical vanishing,
    with both matrices scaled to unit norm so that ``tol`` is relative.
    """
    B1 = _check_sym(B1, "B1")
    B2 = _check_sym(B2, "B2")
    try:
        ev2, U = np.linalg.eigh(B2)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigen-decomposition failed: {exc}") from exc
    n1 = np.linalg.norm(B1) or 1.0
    n2 = np.linalg.norm(B2) or 1.0
    dev2 = np.linalg.norm(B2 - np.trace(B2) / 3 * np.eye(3))

    if dev2 <= tol * n2:
        # B2 ~ s I: B1 + t B2 has the spectrum of B1 shifted by t s
        ev1, V = np.linalg.eigh(B1)
        coef = discriminant_poly(B1 / n1, np.zeros((3, 3)))
        multiple = abs(coef[0]) <= tol
        if multiple:
            return PencilReport(True, V.T.copy(), None, coef)
        return PencilReport(False, None, 0.0, coef)

    gaps2 = np.diff(ev2)
    scale2 = ev2[-1] - ev2[0]
    if gaps2.min() > 1e-8 * scale2:
        # distinct eigenvalues of B2: Gamma(t) ~ disc(B2) t^6, never identically 0
        coef = discriminant_poly(B1 / n1, B2 / n2)
        t, _ = _witness(B1, B2)
        return PencilReport(False, None, t, coef)

    # double eigenvalue: put the simple one last and normalize to diag(0,0,1)
    if gaps2[0] < gaps2[1]:
        s, simple = 0.5 * (ev2[0] + ev2[1]), ev2[2]
        U = U[:, [0, 1, 2]]
    else:
        s, simple = 0.5 * (ev2[1] + ev2[2]), ev2[0]
        U = U[:, [1, 2, 0]]
    c = simple - s
    B2n = U.T @ ((B2 - s * np.eye(3)) / c) @ U
    B1n = U.T @ B1 @ U / n1
    coef = discriminant_poly(B1n, B2n)
    a, b, dd = B1n[0, 0], B1n[1, 1], B1n[0, 1]
    e, f = B1n[0, 2], B1n[1, 2]
    t4 = (a - b) ** 2 + 4 * dd ** 2
    t2 = (e * e + f * f) ** 2
    multiple = bool(np.all(np.abs(coef) <= tol))
    if multiple:
        # rotate inside the degenerate plane of B2 to diagonalize B1 there
        _, R = np.linalg.eigh(B1n[:2, :2])
        W = np.eye(3)
        W[:2, :2] = R
        Q = (U @ W).T
        return PencilReport(True, Q, None, coef, t4, t2)
    t, _ = _witness(B1, B2)
    return PencilReport(False, None, t, coef, t4, t2)
