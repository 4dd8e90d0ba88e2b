"""
Which shapes carry a uniform interior strain?
=============================================

For each shape we fit the best uniform strain to the boundary-integral
representation of the interior displacement and report the misfit.  It
drops to quadrature precision for ellipsoids only.  The interior
Newtonian potential tells the same story: it is a quadratic exactly for
ellipsoids.
"""

import numpy as np

from eshelby_lab.geometry import interior_samples, normalize_volume, parse_shape
from eshelby_lab.potentials import quadratic_fit_w
from eshelby_lab.tensors import MaterialPair
from eshelby_lab.uniformity import uniformity_residual

pair = MaterialPair(1.0, 1.0, 2.0, 2.0)
A = np.diag([1.0, 0.2, -0.4])

for text in ["ellipsoid:1.5,1,0.6", "cuboid:1,1,1", "superellipsoid:1,1,1,4",
             "cuboid:2,1,1"]:
    shape = normalize_volume(parse_shape(text))
    sol = uniformity_residual(shape, A, pair)
    fit = quadratic_fit_w(shape, interior_samples(shape, 60, rng=0))
    print(f"{text:24s} strain misfit {sol.residual:9.2e}   "
          f"quadratic misfit of w {fit.rel_residual:9.2e}   {sol.eigen_class.value}")
