"""
Pencils with a permanently repeated eigenvalue
==============================================

If ``B1 + t B2`` has a repeated eigenvalue for every real ``t``, the two
matrices share an eigenbasis.  The check works on the discriminant of the
characteristic polynomial, a polynomial of degree six in ``t``.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from eshelby_lab.tensors import pencil_check

Q = Rotation.from_euler("xyz", [0.4, -0.3, 1.1]).as_matrix()
B1 = Q @ np.diag([1.0, 1.0, 4.0]) @ Q.T
B2 = Q @ np.diag([0.0, 0.0, 1.0]) @ Q.T

rep = pencil_check(B1, B2)
print("always multiple:", rep.always_multiple)
# the returned frame diagonalizes both matrices at once
D = rep.diagonalizer
print(np.round(D @ B1 @ D.T, 12))
print(np.round(D @ B2 @ D.T, 12))

# tilt B2 out of the shared frame: the spectrum separates for some t
G = Rotation.from_euler("zx", [0.3, 0.5]).as_matrix()
B2_tilted = G @ B2 @ G.T
rep = pencil_check(B1, B2_tilted)
print("always multiple:", rep.always_multiple, " simple spectrum at t =", rep.witness_t)
print("eigenvalues there:", np.linalg.eigvalsh(B1 + rep.witness_t * B2_tilted))
