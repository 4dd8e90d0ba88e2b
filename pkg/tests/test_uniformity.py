import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from eshelby_lab.errors import GeometryError
from eshelby_lab.geometry import normalize_volume, parse_shape
from eshelby_lab.tensors import EigenClass, MaterialPair
from eshelby_lab.uniformity import (ellipsoid_moments, interior_strain_ellipsoid, relation_defect,
                                    uniformity_residual)

PAIR = MaterialPair(1.0, 1.0, 2.0, 2.0)
BALL = parse_shape("ball:1")
SHEAR = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]) / np.sqrt(2.0)
ELL = parse_shape("ellipsoid:1.3,0.9,0.6")


def test_ball_moments_closed_form():
    m = ellipsoid_moments(BALL)
    assert np.allclose(m.W, -2.0 / 3.0 * np.eye(3), atol=1e-12)
    # T_iikk pattern of the unit ball: -(2/15)(d_ij d_kl + d_ik d_jl + d_il d_jk)
    d = np.eye(3)
    T = -(2.0 / 15.0) * (np.einsum("ij,kl->ijkl", d, d) + np.einsum("ik,jl->ijkl", d, d)
                         + np.einsum("il,jk->ijkl", d, d))
    assert np.allclose(m.T, T, atol=1e-12)
    assert m.trace_defect < 1e-12


def test_analytic_and_quadrature_moments_agree():
    e = ELL.rotated(Rotation.from_euler("xyz", [0.3, -0.2, 0.5]).as_matrix())
    a = ellipsoid_moments(e)
    q = ellipsoid_moments(e, method="quadrature")
    assert np.abs(a.W - q.W).max() < 1e-6
    assert np.abs(a.T - q.T).max() < 1e-6
    assert np.trace(a.W) == pytest.approx(-2.0, abs=1e-12)


def test_ball_strain_ratios():
    assert np.allclose(interior_strain_ellipsoid(np.eye(3), BALL, PAIR).B, 9 / 14 * np.eye(3),
                       atol=1e-12)
    assert np.allclose(interior_strain_ellipsoid(SHEAR, BALL, PAIR).B, 45 / 67 * SHEAR, atol=1e-12)


def test_loading_linearity_and_frame_covariance():
    A1 = np.diag([1.0, -0.3, 0.2])
    A2 = np.array([[0.0, 0.4, 0.1], [0.4, 0.5, 0.0], [0.1, 0.0, -1.0]])
    B = lambda A, s=ELL: interior_strain_ellipsoid(A, s, PAIR).B
    assert np.allclose(B(A1 + 2 * A2), B(A1) + 2 * B(A2), atol=1e-12)
    Q = Rotation.from_euler("zyx", [0.7, 0.1, -0.4]).as_matrix()
    assert np.allclose(B(Q @ A1 @ Q.T, ELL.rotated(Q)), Q @ B(A1) @ Q.T, atol=1e-10)


def test_ellipsoid_relation_holds_pointwise():
    sol = interior_strain_ellipsoid(SHEAR, ELL, PAIR, check_samples=30)
    assert sol.residual < 1e-6
    assert sol.method == "ellipsoid-analytic"


def test_relation_defect_is_rigid_for_ellipsoid():
    B = interior_strain_ellipsoid(np.eye(3), ELL, PAIR).B
    X = np.array([[0.1, 0.0, 0.0], [0.0, 0.2, 0.1], [-0.3, 0.1, 0.2], [0.0, 0.0, 0.0]])
    d = relation_defect(ELL, PAIR, np.eye(3), B, X)
    # defect is v + R x; with R = 0 for a diagonal frame and loading it is constant
    assert np.abs(d - d[-1]).max() < 1e-6


def test_uniformity_residual_separates_shapes():
    e = normalize_volume(ELL)
    c = normalize_volume(parse_shape("cuboid:1,1,1"))
    se = uniformity_residual(e, np.eye(3), PAIR)
    sc = uniformity_residual(c, np.eye(3), PAIR)
    assert se.residual < 1e-6
    assert np.allclose(se.B, interior_strain_ellipsoid(np.eye(3), e, PAIR).B, atol=1e-6)
    assert sc.residual > 1e-2


def test_eigen_class_of_ball_and_spheroid():
    assert interior_strain_ellipsoid(np.eye(3), BALL, PAIR).eigen_class == EigenClass.ALL_EQUAL
    sph = parse_shape("ellipsoid:2,1,1")
    assert interior_strain_ellipsoid(np.eye(3), sph, PAIR).eigen_class == EigenClass.DOUBLE
    assert interior_strain_ellipsoid(np.eye(3), ELL, PAIR).eigen_class == EigenClass.ALL_DISTINCT


def test_errors():
    with pytest.raises(GeometryError):
        ellipsoid_moments(parse_shape("cuboid:1,1,1"))
    with pytest.raises(ValueError):
        interior_strain_ellipsoid(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
                                  BALL, PAIR)
    with pytest.raises(GeometryError):
        uniformity_residual(BALL, np.eye(3), PAIR, n_samples=10)
    with pytest.raises(ValueError):
        interior_strain_ellipsoid(np.eye(3), BALL, MaterialPair(1, 1, 2, 0.5))


def test_zero_loading_gives_zero_strain():
    sol = interior_strain_ellipsoid(np.zeros((3, 3)), ELL, PAIR)
    assert np.abs(sol.B).max() == 0.0
