"""A rank-two binary Darboux transform of the free operator.

Starting from ``q = 0`` with the 2x2 parameter matrix ``A`` built on
``mu = i``, the transformed potential behaves like ``12/x**2`` near the
origin (Bessel index 3) and its Weyl function is a rational multiple of the
free one. The transfer matrix determinant has the closed form
``((z + i)/(z - i))**2``.

Run with ``python3 demos/rank_two_gbdt.py``.
"""

import numpy as np

from commute import WeylFunction, lan2
from commute._numerics import branch_sqrt
from commute.gbdt import transfer_matrix

for d in (0.0, 0.5):
    ex = lan2(1j, d)
    x = 1e-2
    print(f"d = {d}: x^2 q(x) at x = {x} is {ex.potential(x) * x * x:.4f}")
    z, xv = 0.7 + 1.3j, 2.0
    det = transfer_matrix(ex.state, z, xv).det
    print(f"  det w_A({z}, {xv}) = {det:.10f}, closed form {((z + 1j) / (z - 1j)) ** 2:.10f}")
    zs = np.array([2j, -1 + 1j, 2 + 0.5j])  # off the zeros at +-i
    M = WeylFunction.numeric(ex.system, ex.potential)(zs)
    closed = -(zs - 1j) ** 2 * (zs + 1j) ** 2 / (1j * branch_sqrt(zs) + d)
    print(f"  max relative Weyl error {np.max(np.abs(M / closed - 1)):.1e}")
