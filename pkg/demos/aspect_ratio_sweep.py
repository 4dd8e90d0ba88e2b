"""
Bound gaps along a family of elongated shapes
=============================================

Spheroids of any elongation sit exactly on the bounds; stretched cubes
stay strictly inside.  The rows are written as CSV, ready for plotting.
"""

import tempfile
from pathlib import Path

from eshelby_lab.emt import bound_report, emt_constant_strain, emt_variational, write_sweep_csv
from eshelby_lab.geometry import normalize_volume, parse_shape
from eshelby_lab.tensors import MaterialPair

pair = MaterialPair(1.0, 1.0, 2.0, 2.0)
ratios = [1.0, 1.5, 2.0, 3.0]
out = Path(tempfile.mkdtemp())

rows = []
for r in ratios:
    s = normalize_volume(parse_shape(f"ellipsoid:{r},1,1"))
    br = bound_report(emt_constant_strain(s, pair).M, pair, s.volume)
    rows.append((r, br.gap1, br.gap2))
write_sweep_csv(out / "spheroids.csv", rows)

rows = []
for r in ratios:
    s = normalize_volume(parse_shape(f"cuboid:{r},1,1"))
    rep = emt_variational(s, pair, n=16)
    br = bound_report(rep.M, pair, rep.volume)
    rows.append((r, br.gap1, br.gap2))
write_sweep_csv(out / "cuboids.csv", rows)

for name in ("spheroids.csv", "cuboids.csv"):
    print(name)
    print((out / name).read_text())

# the same spheroid curve from the command line:
#   eshelby-lab sweep --family ellipsoid --ratios 1,1.5,2,3 --csv spheroids.csv
