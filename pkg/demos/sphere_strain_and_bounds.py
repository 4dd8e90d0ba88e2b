"""
Strain in a spherical inclusion and the trace bounds
====================================================

A stiff ball sits in a softer matrix.  Under a remote strain the strain
inside is uniform and the inverse moment tensor meets both trace bounds.
"""

import numpy as np

from eshelby_lab.emt import emt_constant_strain, report_bounds
from eshelby_lab.geometry import normalize_volume, parse_shape
from eshelby_lab.tensors import MaterialPair
from eshelby_lab.uniformity import interior_strain_ellipsoid

# matrix (lambda, mu) = (1, 1), inclusion (2, 2)
pair = MaterialPair(1.0, 1.0, 2.0, 2.0)
ball = normalize_volume(parse_shape("ball:1"))

# hydrostatic loading: the interior strain is a fixed fraction of it
B = interior_strain_ellipsoid(np.eye(3), ball, pair).B
print("B / A for A = I:", B[0, 0], "(9/14 =", 9 / 14, ")")

shear = np.zeros((3, 3))
shear[0, 1] = shear[1, 0] = 2 ** -0.5
B = interior_strain_ellipsoid(shear, ball, pair).B
print("B / A for a shear:", B[0, 1] / shear[0, 1], "(45/67 =", 45 / 67, ")")

# moment tensor and block traces of its inverse
report = emt_constant_strain(ball, pair)
br = report_bounds(report, pair)
print(f"tr1 = {br.tr1:.12f}  K1 = {br.K1:.12f}")
print(f"tr2 = {br.tr2:.12f}  K2 = {br.K2:.12f}")
print("attained:", br.attained())
