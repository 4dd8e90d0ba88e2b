import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eshelby_lab.errors import AdmissibilityError
from eshelby_lab.tensors import (
    EigenClass, MaterialPair, SymMat, Tensor4, bstar, contrast_tensor,
    discriminant_poly, eigen_class, from_vec, iso_tensor, lambda_project,
    make_basis, pencil_check, tensor_trace, to_vec,
)

PAIR = MaterialPair(1.0, 1.0, 2.0, 2.0)


def random_sym(rng, d=3):
    X = rng.standard_normal((d, d))
    return X + X.T


def random_rotation(rng):
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    return Q * np.sign(np.diag(R))


@st.composite
def admissible_pairs(draw):
    mu = draw(st.floats(0.1, 10))
    kap = draw(st.floats(0.1, 10))
    lam = kap - 2 * mu / 3
    dl = draw(st.floats(0.01, 20))
    dm = draw(st.floats(0.01, 20))
    soft, stiff = (lam, mu), (lam + dl, mu + dm)
    if draw(st.booleans()):
        soft, stiff = stiff, soft
    return MaterialPair(*soft, *stiff)


# -- basis -------------------------------------------------------------------

@pytest.mark.parametrize("d,n", [(3, 6), (2, 3)])
def test_basis(d, n):
    b = make_basis(d)
    assert b.dstar == n
    np.testing.assert_allclose(b.elements[0], np.eye(d) / np.sqrt(d), atol=1e-15)
    np.testing.assert_allclose(b.gram(), np.eye(n), atol=1e-14)
    for E in b.elements[1:]:
        assert abs(np.trace(E)) < 1e-15


def test_basis_bad_dimension():
    with pytest.raises(ValueError):
        make_basis(4)


def test_vec_is_isometry():
    rng = np.random.default_rng(0)
    for d in (2, 3):
        X = random_sym(rng, d)
        v = to_vec(X)
        assert np.isclose(v @ v, np.sum(X * X))
        np.testing.assert_allclose(from_vec(v, d), X, atol=1e-13)


# -- projectors ----------------------------------------------------------------

def test_lambda_project_examples():
    I = np.eye(3)
    np.testing.assert_allclose(lambda_project(I, 1), I)
    np.testing.assert_allclose(lambda_project(I, 2), 0 * I)
    np.testing.assert_allclose(lambda_project(np.diag([1.0, -1.0, 0.0]), 1), 0 * I)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projector_identities(seed):
    rng = np.random.default_rng(seed)
    X = random_sym(rng)
    P1 = lambda_project(X, 1)
    P2 = lambda_project(X, 2)
    scale = np.linalg.norm(X)
    assert np.linalg.norm(lambda_project(P1, 1) - P1) <= 1e-13 * scale
    assert np.linalg.norm(lambda_project(P2, 2) - P2) <= 1e-13 * scale
    assert np.linalg.norm(lambda_project(P2, 1)) <= 1e-13 * scale
    assert np.linalg.norm(lambda_project(P1, 2)) <= 1e-13 * scale


def test_projector_tensors_match_matrix_projection():
    rng = np.random.default_rng(1)
    X = random_sym(rng)
    for which in (1, 2):
        np.testing.assert_allclose(Tensor4.projector(which).apply(X),
                                   lambda_project(X, which), atol=1e-13)


# -- traces and isotropic tensors ------------------------------------------------

def test_tensor_trace_examples():
    assert tensor_trace(Tensor4.identity(3)) == pytest.approx(6)
    assert tensor_trace(Tensor4.projector(1)) == pytest.approx(1)
    assert tensor_trace(iso_tensor(1.0, 1.0)) == pytest.approx(15)


def test_trace_is_basis_independent():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((6, 6))
    T = Tensor4(A + A.T)
    full = T.full()
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    other = from_vec(Q.T)  # rows of Q^T give another orthonormal basis
    tr = sum(np.sum(np.einsum("ijpq,pq->ij", full, E) * E) for E in other)
    assert tr == pytest.approx(tensor_trace(T), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_block_decomposition(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((6, 6))
    T = Tensor4(A + A.T)
    L1, L2 = Tensor4.projector(1), Tensor4.projector(2)
    assert tensor_trace(T) == pytest.approx(
        tensor_trace(L1 @ T @ L1) + tensor_trace(L2 @ T @ L2), abs=1e-12)


def test_iso_tensor_examples():
    C0 = iso_tensor(1.0, 1.0)
    np.testing.assert_allclose(C0.apply(np.eye(3)), 5 * np.eye(3), atol=1e-13)
    X = np.diag([1.0, -1.0, 0.0]) + np.array([[0, 2, 0], [2, 0, 0], [0, 0, 0.0]])
    np.testing.assert_allclose(C0.apply(X), 2 * X, atol=1e-13)
    C1 = iso_tensor(PAIR, "inclusion")
    np.testing.assert_allclose((C1 - iso_tensor(PAIR, "matrix")).apply(np.eye(3)),
                               5 * np.eye(3), atol=1e-13)


def test_iso_tensor_matches_full_index_form():
    lam, mu = 0.7, 1.3
    d = np.eye(3)
    full = (lam * np.einsum("ij,kl->ijkl", d, d)
            + mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)))
    np.testing.assert_allclose(Tensor4.from_full(full).coeffs,
                               iso_tensor(lam, mu).coeffs, atol=1e-13)


def test_iso_tensor_rejects_nonconvex():
    with pytest.raises(AdmissibilityError):
        iso_tensor(1.0, -1.0)


def test_bstar_examples():
    I = np.eye(3)
    np.testing.assert_allclose(bstar(I, PAIR), 5 * I)
    X = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0.0]])
    np.testing.assert_allclose(bstar(X, PAIR), 2 * X)
    np.testing.assert_allclose(bstar(0 * I, PAIR), 0 * I)


def test_bstar_equals_contrast_tensor():
    rng = np.random.default_rng(3)
    B = random_sym(rng)
    pair = MaterialPair(0.4, 1.1, 2.2, 3.5)
    np.testing.assert_allclose(bstar(B, pair), contrast_tensor(pair).apply(B), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(admissible_pairs(), st.integers(0, 2**32 - 1))
def test_alpha_and_contrast_definiteness(pair, seed):
    pair.validate()
    assert pair.alpha > 1
    rng = np.random.default_rng(seed)
    B = random_sym(rng)
    assert pair.contrast_sign * np.sum(bstar(B, pair) * B) > 0


def test_kelvin_constants():
    assert PAIR.alpha1 == pytest.approx(2 / 3)
    assert PAIR.alpha2 == pytest.approx(1 / 3)
    assert PAIR.alpha == pytest.approx(3 / 2)
    assert PAIR.kappa_conv == pytest.approx(5 / 3)
    assert PAIR.kappa_paper == pytest.approx(5)


def test_pair_validation():
    with pytest.raises(AdmissibilityError):
        MaterialPair(1.0, 1.0, 2.0, 0.5).validate()  # mixed contrast
    with pytest.raises(AdmissibilityError):
        MaterialPair(1.0, 1.0, -3.0, 0.5).validate()  # kappa_t < 0
    with pytest.raises(AdmissibilityError):
        MaterialPair.from_json({"lambda": 1, "mu": 1})


def test_json_roundtrip():
    m = SymMat([[1.0, 2.0, 0.0], [2.0, 3.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.array_equal(SymMat.from_json(json.dumps(m.to_json())).entries, m.entries)
    T = iso_tensor(1.0, 2.0)
    assert np.array_equal(Tensor4.from_json(json.dumps(T.to_json())).coeffs, T.coeffs)
    assert MaterialPair.from_json(PAIR.to_json()) == PAIR
    with pytest.raises(ValueError):
        SymMat([[1.0, 2.0], [0.0, 1.0]])


# -- spectra --------------------------------------------------------------------

def test_eigen_class_examples():
    assert eigen_class(2 * np.eye(3)) == EigenClass.ALL_EQUAL
    assert eigen_class(np.diag([1.0, 2, 3])) == EigenClass.ALL_DISTINCT
    assert eigen_class(np.diag([1.0, 1, 3])) == EigenClass.DOUBLE


def test_discriminant_coefficients_normalized_form():
    # t^4 and t^2 coefficients of the normalized pencil, cross-checked with sympy
    a, b, c, dd, e, f = 0.3, -1.2, 0.7, 0.4, -0.9, 0.25
    B1 = np.array([[a, dd, e], [dd, b, f], [e, f, c]])
    coef = discriminant_poly(B1, np.diag([0.0, 0.0, 1.0]))
    assert coef[4] == pytest.approx(a * a + b * b - 2 * a * b + 4 * dd * dd)
    assert np.allclose(coef[5:], 0)
    B1[1, 1], B1[0, 1], B1[1, 0] = a, 0.0, 0.0
    coef = discriminant_poly(B1, np.diag([0.0, 0.0, 1.0]))
    assert coef[2] == pytest.approx((e * e + f * f) ** 2)


def test_pencil_paper_example():
    rep = pencil_check(np.diag([1.0, 1.0, 4.0]), np.diag([0.0, 0.0, 1.0]))
    assert rep.always_multiple
    D = rep.diagonalizer
    np.testing.assert_allclose(np.abs(D), np.eye(3), atol=1e-12)


def test_pencil_off_diagonal_example():
    B1 = np.array([[0.0, 1, 0], [1, 0, 0], [0, 0, 0]])
    B2 = np.diag([0.0, 0.0, 1.0])
    rep = pencil_check(B1, B2)
    assert not rep.always_multiple
    t = rep.witness_t
    ev = np.linalg.eigvalsh(B1 + t * B2)
    np.testing.assert_allclose(sorted(ev), sorted([1.0, -1.0, t]), atol=1e-12)
    assert np.diff(ev).min() > 1e-8
    # multiple exactly at t = +-1
    for tm in (1.0, -1.0):
        assert np.diff(np.linalg.eigvalsh(B1 + tm * B2)).min() < 1e-12


def test_pencil_identity_branch():
    rng = np.random.default_rng(5)
    Q = random_rotation(rng)
    B1 = Q @ np.diag([2.0, 2.0, -1.0]) @ Q.T
    rep = pencil_check(B1, 3 * np.eye(3))
    assert rep.always_multiple
    off = rep.diagonalizer @ B1 @ rep.diagonalizer.T
    assert np.abs(off - np.diag(np.diag(off))).max() < 1e-10
    rep = pencil_check(Q @ np.diag([1.0, 2.0, 3.0]) @ Q.T, 3 * np.eye(3))
    assert not rep.always_multiple and rep.witness_t is not None


def test_pencil_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        pencil_check(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0.0]]), np.eye(3))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pencil_positive_family(seed):
    rng = np.random.default_rng(seed)
    Q = random_rotation(rng)
    a, c, b, e = rng.uniform(-3, 3, 4)
    if abs(b - e) < 0.1:
        e = b + 1.0
    B1 = Q @ np.diag([a, a, c]) @ Q.T
    B2 = Q @ np.diag([b, b, e]) @ Q.T
    rep = pencil_check(B1, B2)
    assert rep.always_multiple
    D = rep.diagonalizer
    np.testing.assert_allclose(D @ D.T, np.eye(3), atol=1e-12)
    for B in (B1, B2):
        M = D @ B @ D.T
        assert np.abs(M - np.diag(np.diag(M))).max() < 1e-10


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pencil_negative_family(seed):
    rng = np.random.default_rng(seed)
    B1, B2 = random_sym(rng), random_sym(rng)
    rep = pencil_check(B1, B2)
    assert not rep.always_multiple
    ev = np.linalg.eigvalsh(B1 + rep.witness_t * B2)
    assert np.diff(ev).min() > 1e-8


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pencil_negative_double_b2(seed):
    # B2 with a double eigenvalue but B1 not sharing its eigenbasis
    rng = np.random.default_rng(seed)
    Q = random_rotation(rng)
    B2 = Q @ np.diag([1.0, 1.0, -2.0]) @ Q.T
    B1 = random_sym(rng)
    rep = pencil_check(B1, B2)
    assert not rep.always_multiple
    assert np.diff(np.linalg.eigvalsh(B1 + rep.witness_t * B2)).min() > 1e-8
