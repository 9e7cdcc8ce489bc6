# coding: utf-8

# # The graphical solution
#
# Roots of the secular equation are the crossings of the kernel curve
# V_nn(eta) with the straight line eta - P0_n.  Between two poles the curve
# falls from +inf to -inf while the line rises, so there is exactly one
# crossing per interval: the roots interlace with the poles.  This demo
# prints a coarse text plot of the curve near the shared root.

import numpy as np

from reduction_lab import FIX_TS, build_two_slit, channel_constants, find_roots, solve_auxiliary
from reduction_lab.secular import curve_data

problem = build_two_slit(FIX_TS)
constants = channel_constants(problem, solve_auxiliary(problem), 0)
roots = find_roots(constants)

print("poles:", np.round(constants.positions, 6))
print("roots:", np.round(roots.roots, 6))

# ## Interlacing

for k, x in enumerate(constants.positions):
    print(f"  {roots.roots[k]: .6f} < pole {x: .6f} < {roots.roots[k + 1]: .6f}")

# ## Text plot of kernel (*) and line (-) on [-3, 3]

rows = curve_data(constants, -3.0, 3.0, 61)
width, clip = 61, 3.0
for eta, kernel, line in rows:
    canvas = [" "] * width
    for value, mark in ((line, "-"), (kernel, "*")):
        if abs(value) <= clip:
            canvas[int(round((value + clip) / (2 * clip) * (width - 1)))] = mark
    print(f"{eta: 5.2f} |{''.join(canvas)}|")
