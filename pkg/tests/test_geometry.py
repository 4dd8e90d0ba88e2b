import numpy as np
import pytest

from eshelby_lab.errors import GeometryError
from eshelby_lab.geometry import (
    Shape, icosphere, interior_samples, load_mesh, normalize_volume, parse_shape,
    surface_quadrature, volume_quadrature, voxelize, write_off,
)

SHAPES = [
    Shape("ball", (1.0,)),
    Shape("ellipsoid", (2.0, 1.0, 0.5)),
    Shape("cuboid", (1.0, 2.0, 0.5)),
    Shape("superellipsoid", (1.0, 1.5, 1.0, 4.0)),
]


def first_moment(q):
    return np.einsum("pi,pj,p->ij", q.normals, q.points, q.weights)


def test_normalize_ball():
    s = normalize_volume(Shape("ball", (1.0,)))
    assert s.body_dims[0] == pytest.approx((3 / (4 * np.pi)) ** (1 / 3), rel=1e-12)
    assert s.volume == pytest.approx(1.0, abs=1e-10)


def test_normalize_cube_and_ellipsoid():
    assert normalize_volume(Shape("cuboid", (1, 1, 1))).scale == pytest.approx(1.0, abs=1e-15)
    e = normalize_volume(Shape("ellipsoid", (2, 1, 1)))
    assert e.scale == pytest.approx((3 / (8 * np.pi)) ** (1 / 3), rel=1e-12)


def test_superellipsoid_volume_normalizes():
    s = normalize_volume(Shape("superellipsoid", (1, 2, 1, 3.0)))
    assert volume_quadrature(s, 4).volume == pytest.approx(1.0, abs=1e-8)


def test_ball_area_and_volume():
    b = Shape("ball", (1.0,))
    assert abs(surface_quadrature(b, 4).area - 4 * np.pi) < 1e-6
    assert abs(volume_quadrature(b, 4).volume - 4 / 3 * np.pi) < 1e-6


@pytest.mark.parametrize("shape", SHAPES, ids=lambda s: s.kind)
def test_closed_surface_and_divergence(shape):
    shape = normalize_volume(shape)
    q = surface_quadrature(shape, 4)
    assert np.abs(q.weights @ q.normals).max() < 1e-8
    assert np.abs(first_moment(q) - shape.volume * np.eye(3)).max() < 1e-8
    assert np.all(q.weights > 0)
    assert np.allclose(np.linalg.norm(q.normals, axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("shape", SHAPES, ids=lambda s: s.kind)
def test_volume_weights(shape):
    v = volume_quadrature(shape, 4)
    assert np.all(v.weights > 0)
    assert abs(v.volume - shape.volume) < 1e-8
    assert np.all(shape.inside(v.points))


def test_cube_first_moment():
    q = surface_quadrature(Shape("cuboid", (1, 1, 1)), 4)
    assert abs(first_moment(q)[0, 0] - 1.0) < 1e-8


@pytest.mark.parametrize("kind,params", [("ellipsoid", (1.5, 1.0, 0.8)), ("ball", (1.0,))])
def test_refinement_halves_error(kind, params):
    s = Shape(kind, params)
    errs = [np.abs(first_moment(surface_quadrature(s, L)) - s.volume * np.eye(3)).max()
            for L in (1, 2, 3)]
    assert errs[1] <= errs[0] / 2 and errs[2] <= errs[1] / 2


def test_rotation_moves_quadrature():
    Q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(3, 3)))
    s = Shape("ellipsoid", (2.0, 1.0, 0.5)).rotated(Q)
    q = surface_quadrature(s, 3)
    assert np.abs(first_moment(q) - s.volume * np.eye(3)).max() < 1e-6
    xb = s.to_body(q.points)
    assert np.allclose(np.sum((xb / [2.0, 1.0, 0.5]) ** 2, axis=1), 1.0)


def test_voxel_cube_exact():
    g = voxelize(Shape("cuboid", (1, 1, 1)), 16)
    assert g.volume == 1.0


@pytest.mark.parametrize("shape", SHAPES, ids=lambda s: s.kind)
def test_voxel_volume(shape):
    g = voxelize(normalize_volume(shape), 32)
    assert abs(g.volume - 1.0) < 1e-2
    assert g.fractions.min() >= 0 and g.fractions.max() <= 1


def test_off_icosphere(tmp_path):
    V, F = icosphere(3)
    p = tmp_path / "ico.off"
    write_off(p, V, F)
    m = load_mesh(p)
    assert m.volume == pytest.approx(4 / 3 * np.pi, rel=1e-2)
    q = surface_quadrature(m, 1)
    assert np.abs(first_moment(q) - m.volume * np.eye(3)).max() < 1e-10
    assert list(m.inside(np.array([[0, 0, 0], [1.2, 0, 0]]))) == [True, False]
    assert volume_quadrature(m, 2).volume == pytest.approx(m.volume, rel=1e-12)


def test_off_inverted_is_fixed(tmp_path):
    V, F = icosphere(1)
    p = tmp_path / "inv.off"
    write_off(p, V, F[:, ::-1])
    with pytest.warns(UserWarning, match="orientation"):
        m = load_mesh(p)
    assert m.volume > 0


def test_off_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mesh(tmp_path / "missing.off")
    bad = tmp_path / "bad.off"
    bad.write_text("PLY\n")
    with pytest.raises(GeometryError):
        load_mesh(bad)
    bad.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    with pytest.raises(GeometryError, match="closed"):
        load_mesh(bad)
    bad.write_text("OFF\n3 1 0\n0 0 0\n1 0\n")
    with pytest.raises(GeometryError):
        load_mesh(bad)


def test_parse_grammar():
    assert parse_shape("ball:0.5").volume == pytest.approx(4 / 3 * np.pi / 8)
    s = parse_shape("superellipsoid:1,1,1,4")
    assert s.kind == "superellipsoid" and s.params[3] == 4
    assert parse_shape(s.spec()).volume == pytest.approx(s.volume)
    for bad in ("ball", "blob:1", "ball:x", "cuboid:1,2", "superellipsoid:1,1,1,0.5", "ball:-1"):
        with pytest.raises(GeometryError):
            parse_shape(bad)


def test_interior_margin():
    s = normalize_volume(Shape("cuboid", (1, 1, 1)))
    pts = interior_samples(s, 100, margin=0.05, rng=1)
    assert np.all(np.abs(pts) <= 0.5 - 0.05 * s.diameter + 1e-12)
