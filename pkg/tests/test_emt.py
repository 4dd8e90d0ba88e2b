import csv

import numpy as np
import pytest

from eshelby_lab.emt import (bound_report, emt_constant_strain, emt_variational, report_bounds,
                             trace_bound_constants, write_sweep_csv)
from eshelby_lab.errors import NumericalError
from eshelby_lab.geometry import normalize_volume, parse_shape
from eshelby_lab.tensors import MaterialPair

PAIR = MaterialPair(1.0, 1.0, 2.0, 2.0)
BALL = parse_shape("ball:1")


def test_trace_bound_constants():
    K1, K2 = trace_bound_constants(PAIR)
    assert K1 == pytest.approx(14 / 45, abs=1e-15)
    assert K2 == pytest.approx(67 / 18, abs=1e-14)
    with pytest.raises(ValueError):
        trace_bound_constants(MaterialPair(1.0, 1.0, 1.0, 1.0))


def test_ball_attains_bounds_and_scales_with_volume():
    r1 = emt_constant_strain(BALL, PAIR)
    r2 = emt_constant_strain(parse_shape("ball:2"), PAIR)
    assert np.allclose(r2.M.coeffs, 8 * r1.M.coeffs, rtol=1e-12)
    br = report_bounds(r1, PAIR)
    assert br.tr1 == pytest.approx(14 / 45, abs=1e-12)
    assert br.tr2 == pytest.approx(67 / 18, abs=1e-12)
    assert br.trace_inv == pytest.approx(121 / 30, abs=1e-12)
    assert br.attained() and br.consistent


def test_emt_symmetric_and_signed():
    e = parse_shape("ellipsoid:1.4,1,0.5")
    for pair in (PAIR, PAIR.swapped()):
        r = emt_constant_strain(e, pair)
        assert r.symmetry_defect < 1e-12
        assert r.definiteness_sign == pair.contrast_sign
        assert np.all(np.sign(np.linalg.eigvalsh(r.M.coeffs)) == pair.contrast_sign)


def test_swapped_pair_flips_bound_signs():
    K1, K2 = trace_bound_constants(PAIR.swapped())
    assert K1 < 0 and K2 < 0
    r = emt_constant_strain(BALL, PAIR.swapped())
    br = report_bounds(r, PAIR.swapped())
    assert br.attained()


def test_quadrature_route_reports_error_estimate():
    e = normalize_volume(parse_shape("ellipsoid:1,0.8,0.6"))
    r = emt_constant_strain(e, PAIR, method="quadrature")
    assert r.reference is not None and 0 < r.error_estimate < 1e-5
    a = emt_constant_strain(e, PAIR)
    assert np.abs(r.M.coeffs - a.M.coeffs).max() < 1e-6
    br = report_bounds(r, PAIR)
    assert abs(br.gap1) < br.eps_num and abs(br.gap2) < br.eps_num


def test_variational_cube_gaps_positive():
    cube = normalize_volume(parse_shape("cuboid:1,1,1"))
    r = emt_variational(cube, PAIR, n=16)
    assert r.symmetry_defect < 1e-8 and r.definiteness_sign == 1
    br = bound_report(r.M, PAIR, r.volume)
    assert br.gap1 > 0 and br.gap2 > 0 and br.consistent
    rs = emt_variational(cube, PAIR.swapped(), n=16)
    bs = bound_report(rs.M, PAIR.swapped(), rs.volume)
    assert rs.definiteness_sign == -1
    assert bs.gap1 < 0 and bs.gap2 < 0 and bs.consistent


def test_variational_ball_bulk_eigenvalue():
    r = emt_variational(normalize_volume(BALL), PAIR, n=32)
    assert r.M.coeffs[0, 0] / r.volume == pytest.approx(45 / 14, rel=0.02)
    with pytest.raises(ValueError):
        emt_variational(BALL, PAIR, n=8)


def test_bound_report_rejects_singular():
    with pytest.raises(NumericalError):
        bound_report(np.diag([1.0, 1, 1, 1, 1, 0]), PAIR)


def test_sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, [(1.0, 0.0, 1e-3), (2.0, 1e-4, 2e-3)])
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["aspect_ratio", "gap1", "gap2"]
    assert [float(v) for v in rows[2]] == [2.0, 1e-4, 2e-3]
