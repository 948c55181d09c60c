"""Small numerical kernels used across the package.

The square-root branch lives here so that every module agrees on it: the
root is chosen with nonnegative imaginary part, which makes ``exp(1j*sqrt(z)*x)``
decay for every non-real ``z`` and gives ``sqrt(t) > 0`` as the boundary value
from the upper half-plane on the positive axis.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss


def branch_sqrt(z):
    """Square root with ``Im(sqrt(z)) >= 0``.

    On the negative axis this agrees with the principal root (``sqrt(-1) = 1j``);
    in the upper half-plane it is the principal root; in the lower half-plane
    it is minus the principal root.
    """
    s = np.sqrt(np.asarray(z, dtype=complex))
    s = np.where(s.imag < 0, -s, s)
    return s[()] if s.ndim == 0 else s


def removable(f, z, center, radius, n=48):
    """Evaluate an analytic ``f`` near a removable singularity at ``center``.

    Uses Cauchy's integral formula on the circle ``|zeta - center| = radius``
    discretized by the trapezoidal rule, which converges geometrically for
    ``|z - center| < radius``.

    Parameters
    ----------
    f : callable
        Maps a 1-D complex array ``zeta`` to an array whose leading axis
        matches ``zeta``.
    z : array_like
        Points inside the circle.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    t = 2 * np.pi * (np.arange(n) + 0.5) / n
    zeta = center + radius * np.exp(1j * t)
    fz = np.asarray(f(zeta))
    trailing = fz.shape[1:]
    kernel = (zeta - center)[:, None] / (zeta[:, None] - z[None, :])  # (n, len(z))
    out = np.einsum("kz,km->zm", kernel, fz.reshape(n, -1)) / n
    return out.reshape((len(z),) + trailing)


def gauss_legendre(order):
    """Nodes and weights on [0, 1]."""
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def adaptive_integral(f, a, b, rtol=1e-9, atol=1e-12, order=16, initial_panels=8, max_rounds=40):
    """Adaptive composite Gauss-Legendre quadrature with batched evaluation.

    Every refinement round calls ``f`` once on all new nodes, so an expensive
    vectorized integrand (for example a Weyl function solving one ODE system
    for all nodes at once) is evaluated ``O(rounds)`` times rather than once
    per node.

    Returns
    -------
    value : float or complex
    error : float
        Sum of the accepted panel error estimates.
    converged : bool
    """
    xs, ws = gauss_legendre(order)

    def panel_integrals(lo, hi):
        width = hi - lo
        nodes = lo[:, None] + width[:, None] * xs[None, :]
        vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape)
        return (vals * ws[None, :]).sum(axis=1) * width

    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    est = panel_integrals(lo, hi)
    total = 0.0
    error = 0.0
    length = b - a
    for _ in range(max_rounds):
        if lo.size == 0:
            return total, error, True
        mid = 0.5 * (lo + hi)
        kids = panel_integrals(np.concatenate([lo, mid]), np.concatenate([mid, hi]))
        k = lo.size
        refined = kids[:k] + kids[k:]
        diff = np.abs(refined - est)
        scale = max(atol, rtol * abs(total + refined.sum()))
        ok = diff <= scale * (hi - lo) / length
        total = total + refined[ok].sum()
        error += diff[ok].sum()
        lo = np.concatenate([lo[~ok], mid[~ok]])
        hi = np.concatenate([mid[~ok], hi[~ok]])
        est = np.concatenate([kids[:k][~ok], kids[k:][~ok]])
    total = total + est.sum()
    return total, error + float(np.abs(est).sum()), False
