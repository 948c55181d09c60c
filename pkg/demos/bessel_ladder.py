"""Climbing and descending the Bessel index by single commutation.

Factoring ``H_l = -d^2/dx^2 + l(l+1)/x^2`` at ``lam = 0`` with the regular
solution ``x**(l+1)`` produces the operator with index ``l + 1``; using the
singular solution instead goes down to ``l - 1``. On the Weyl side the upward
step multiplies ``M`` by ``z``.

Run with ``python3 demos/bessel_ladder.py``.
"""

import numpy as np

from commute import BesselSystem, WeylFunction, bessel, commute_phi, commute_theta

z = np.array([1j, -1 + 0.5j, 2 + 1j])
x0 = 1e-2

for l in (1, 2, 3):
    q = bessel(l)
    fs = BesselSystem(q)
    up = commute_phi(q, fs, 0.0)
    down = commute_theta(q, fs, 0.0)
    print(f"l = {l}: x^2 q_up({x0}) = {up.q_new(x0) * x0**2:.8f} (expect {(l + 1) * (l + 2)}), "
          f"x^2 q_down({x0}) = {down.q_new(x0) * x0**2:.8f} (expect {(l - 1) * l})")

q = bessel(1)
fs = BesselSystem(q)
up = commute_phi(q, fs, 0.0)
M = WeylFunction.numeric(fs, q)(z)
M_up = WeylFunction.numeric(up.fs_new, up.q_new)(z)
print("\nWeyl function after the upward step against z * M(z):")
for zi, a, b in zip(z, M_up, z * M):
    print(f"  z = {zi:>8}: {a:.10f}  vs  {b:.10f}")
