"""Newton basins of z^3 - 1, and of a cluster system restricted to a line.

Newton's method partitions the complex plane into basins of attraction, one
per root, with a fractal boundary along the Julia set.  The scan below colors
each pixel by the root its center converges to and writes a binary PPM image
(viewable with most image tools, or convertible via ImageMagick).

The same machinery applies to a multivariate cluster system restricted to a
complex line t = base + z * direction: Newton runs on the direction-projected
scalar residual.  That is a visualization heuristic -- the scalar basins need
not reflect roots of the full system -- but for the Hubbard dimer along the
diagonal direction the projected residual is a quadratic whose two roots are
genuine full-system points.
"""

import numpy as np

from ccroots.basins import basin_scan, parse_univariate, render_ppm, slice_scan
from ccroots.ccpoly import cc_system_for_rank
from ccroots.model import build_hubbard

# --- the classic cubic ---------------------------------------------------------

coeffs, var = parse_univariate("z^3 - 1")
print(f"polynomial in {var}: coefficients (low to high) = {coeffs.tolist()}")

grid = basin_scan(coeffs, (-1.5, 1.5, -1.5, 1.5), 481, max_iters=64,
                  label="z^3 - 1")
print(f"scanned {grid.nx} x {grid.ny} pixels")
print("registered roots:")
for k, r in enumerate(grid.roots):
    print(f"  root {k}: {r:+.12f}")
converged = int((grid.root_index >= 0).sum())
print(f"converged pixels: {converged}/{grid.nx * grid.ny}")

with open("newton_fractal_cubic.ppm", "wb") as fh:
    fh.write(render_ppm(grid))
print("wrote newton_fractal_cubic.ppm")

# --- a cluster system sliced along its diagonal ---------------------------------

model = build_hubbard(2, 1.0, 4.0, 1, 1)
system = cc_system_for_rank(model, 2).polynomials
direction = [1.0, 1.0, 1.0]

sliced = slice_scan(system, [0.0, 0.0, 0.0], direction, (-2.0, 2.0, -2.0, 2.0),
                    481, max_iters=64, label="dimer diagonal")
print(f"\ndimer residual projected on direction {direction}:")
for k, r in enumerate(sliced.roots):
    print(f"  root {k}: z = {r:+.12f}")
converged = int((sliced.root_index >= 0).sum())
print(f"converged pixels: {converged}/{sliced.nx * sliced.ny}")

with open("newton_fractal_dimer_slice.ppm", "wb") as fh:
    fh.write(render_ppm(sliced))
print("wrote newton_fractal_dimer_slice.ppm")
