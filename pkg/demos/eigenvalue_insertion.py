"""Inserting an eigenvalue below the free spectrum by double commutation.

The free half-line operator has purely absolutely continuous spectrum on
``[0, inf)``. Double commutation at ``lam = -1`` with weight ``gamma`` adds a
point mass ``gamma`` at ``-1`` to the spectral measure while leaving the rest
untouched, so the new Weyl function is ``M(z) - gamma/(z + 1)``.

Run with ``python3 demos/eigenvalue_insertion.py``.
"""

import numpy as np

from commute import FreeSystem, WeylFunction, double_commute, free, free_weyl, spectral_measure

q = free()
fs = FreeSystem(q)
for gamma in (0.5, 1.0, 2.0):
    r = double_commute(q, fs, -1.0, gamma)
    M = WeylFunction.numeric(r.fs_new, r.q_new)
    z = np.array([1j, 0.5 + 2j])
    err = np.max(np.abs(M(z) - (free_weyl(z) - gamma / (z + 1))))
    mass = spectral_measure(M, -1.05, -0.95).total
    print(f"gamma = {gamma}: Weyl identity error {err:.1e}, "
          f"measured mass near -1 = {mass:.5f}")

# The new potential is a well that binds the inserted state and decays quickly
r = double_commute(q, fs, -1.0, 1.0)
xs = np.array([0.25, 0.5, 1.0, 2.0, 4.0])
print("\nx      q_new(x)")
for xv, qv in zip(xs, r.q_new(xs)):
    print(f"{xv:<6} {qv: .6e}")
