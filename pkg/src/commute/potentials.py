"""Model potentials for ``tau = -d^2/dx^2 + q(x)`` on an interval ``(a, b)``.

Potentials are immutable, cheap to evaluate and hold no caches. A potential
built by :func:`bessel` records its singularity index ``l`` together with a
:class:`Perturbation` whose ``series`` field lists the Taylor coefficients of
``x * q_pert(x)`` at the origin; the Frobenius machinery in :mod:`commute.ode`
needs these coefficients to launch solutions at the singular endpoint.
"""

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError

ENDPOINT_CLASSES = ("regular", "limit-circle", "limit-point")
DEFAULT_X_MAX = 40.0


@dataclass(frozen=True)
class Perturbation:
    """A perturbation ``q_pert`` of the Bessel potential.

    Parameters
    ----------
    func : callable
        Vectorized ``x -> q_pert(x)``.
    series : tuple of float, optional
        Taylor coefficients ``p_j`` with ``x * q_pert(x) = sum_j p_j x**j``
        near 0. ``None`` means unknown; they are then fitted numerically.
    """

    func: Callable
    series: tuple | None = None
    name: str = "custom"

    def __call__(self, x):
        return self.func(x)


def _zeros(x):
    return np.zeros_like(np.asarray(x, dtype=float))


ZERO = Perturbation(_zeros, (), "none")


def exponential_perturbation(strength=1.0, rate=1.0, nterms=60):
    """``q_pert(x) = strength * exp(-rate * x)``."""
    s, r = float(strength), float(rate)
    series = [0.0] + [s * (-r) ** j / math.factorial(j) for j in range(nterms - 1)]
    return Perturbation(lambda x: s * np.exp(-r * np.asarray(x, dtype=float)), tuple(series),
                        f"exp({s:g},{r:g})")


def inverse_perturbation(strength):
    """``q_pert(x) = strength / x`` (a Coulomb tail when ``strength < 0``)."""
    s = float(strength)
    return Perturbation(lambda x: s / np.asarray(x, dtype=float), (s,), f"inverse({s:g})")


@dataclass(frozen=True, eq=False)
class Potential:
    """Real potential ``q`` on ``domain = (a, b)``.

    ``b = inf`` is explicit; routines that integrate towards ``b`` stop at
    ``x_max``. Endpoint classes are declared by the constructor or the caller,
    never computed.
    """

    func: Callable
    domain: tuple = (0.0, math.inf)
    l: float | None = None
    perturbation: Perturbation | None = None
    endpoint_class: tuple = ("limit-point", "limit-point")
    kind: str = "custom"
    params: Mapping = field(default_factory=dict)
    x_max: float = DEFAULT_X_MAX

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise DomainError(f"empty domain {self.domain}")
        for c in self.endpoint_class:
            if c not in ENDPOINT_CLASSES:
                raise DomainError(f"unknown endpoint class {c!r}")
        if self.l is not None and a != 0.0:
            raise DomainError("a singularity index requires a = 0")

    def __call__(self, x):
        # hot path for the integrators: no validation
        return self.func(x)

    def eval(self, x):
        """Evaluate ``q`` with domain and finiteness checks."""
        x = np.asarray(x, dtype=float)
        a, b = self.domain
        if np.any(x <= a) or np.any(x >= b):
            raise DomainError(f"x outside the open interval ({a}, {b})")
        q = np.asarray(self.func(x), dtype=float)
        if not np.all(np.isfinite(q)):
            raise DomainError("potential is not finite on the requested points")
        return q[()] if q.ndim == 0 else q

    def contains(self, x):
        a, b = self.domain
        return a < x < b

    @property
    def upper_cutoff(self):
        """Right end of the integration range: ``b`` when finite, else ``x_max``."""
        return min(self.domain[1], self.x_max)

    def describe(self):
        d = {"kind": self.kind, "domain": list(self.domain), "x_max": self.x_max}
        if self.l is not None:
            d["l"] = self.l
        d.update(self.params)
        return d


def bessel(l, q_pert=None, *, x_max=DEFAULT_X_MAX, kind="bessel"):
    """``q(x) = l(l+1)/x**2 + q_pert(x)`` on ``(0, inf)``.

    ``q_pert`` may be a :class:`Perturbation`, a plain callable (its series is
    then fitted when needed) or ``None`` for the unperturbed operator.
    """
    l = float(l)
    if l < -0.5:
        raise DomainError(f"Bessel index must satisfy l >= -1/2, got {l}")
    if q_pert is None:
        pert = ZERO
    elif isinstance(q_pert, Perturbation):
        pert = q_pert
    else:
        pert = Perturbation(q_pert, None)
    c = l * (l + 1.0)
    pf = pert.func
    if pert is ZERO:
        def func(x):
            x = np.asarray(x, dtype=float)
            return c / (x * x)
    else:
        def func(x):
            x = np.asarray(x, dtype=float)
            return c / (x * x) + pf(x)
    left = "limit-point" if l >= 0.5 else "limit-circle"
    return Potential(func, (0.0, math.inf), l, pert, (left, "limit-point"), kind,
                     {"l": l, "perturbation": pert.name}, x_max)


def coulomb(l, gamma, *, x_max=DEFAULT_X_MAX):
    """``q(x) = l(l+1)/x**2 - gamma/x`` on ``(0, inf)``, ``l`` a nonnegative integer."""
    if int(l) != l or l < 0:
        raise DomainError(f"Coulomb angular momentum must be a nonnegative integer, got {l}")
    p = bessel(int(l), inverse_perturbation(-float(gamma)), x_max=x_max, kind="coulomb")
    return Potential(p.func, p.domain, p.l, p.perturbation, p.endpoint_class, "coulomb",
                     {"l": int(l), "gamma": float(gamma)}, x_max)


def free(*, x_max=DEFAULT_X_MAX):
    """``q = 0`` on ``(0, inf)`` with a regular endpoint at 0 (the ``l = 0`` view)."""
    return Potential(_zeros, (0.0, math.inf), 0.0, ZERO, ("regular", "limit-point"), "free",
                     {}, x_max)


def tabulated(samples, interpolation="linear", *, domain=None, x_max=DEFAULT_X_MAX):
    """Interpolate ``(x, q)`` samples; evaluating outside the sample range is an error."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise DomainError("samples must be a sequence of at least two (x, q) pairs")
    xs, qs = pts[:, 0], pts[:, 1]
    if np.any(np.diff(xs) <= 0):
        raise DomainError("sample abscissae must be strictly increasing")
    lo, hi = xs[0], xs[-1]
    if interpolation == "linear":
        def interp(x):
            return np.interp(x, xs, qs)
    elif interpolation == "cubic":
        interp = CubicSpline(xs, qs)
    else:
        raise DomainError(f"unknown interpolation {interpolation!r}")

    def func(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError(f"tabulated potential evaluated outside [{lo}, {hi}]")
        return np.asarray(interp(x), dtype=float)

    if domain is None:
        domain = (lo, hi)
    a, b = domain
    if lo < a or hi > b:
        raise DomainError("samples must lie inside the domain")
    return Potential(func, (float(a), float(b)), None, None, ("regular", "regular"), "tabulated",
                     {"interpolation": interpolation, "n_samples": len(xs)}, x_max)


def _parse_samples(text):
    pairs = []
    for chunk in text.replace(";", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            x, q = chunk.split(":")
            pairs.append((float(x), float(q)))
        except ValueError as exc:
            raise ConfigError(f"bad sample {chunk!r}; expected x:q") from exc
    return pairs


def from_config(section):
    """Build a potential from a flat ``key = value`` mapping.

    Recognized keys: ``kind`` (bessel, coulomb, tabulated, free), ``l``,
    ``gamma``, ``perturbation`` (none, exp, inverse), ``pert_strength``,
    ``pert_rate``, ``samples`` (``x:q, x:q, ...``), ``samples_file``,
    ``interpolation`` and ``x_max``.
    """
    s = dict(section)
    kind = s.get("kind", "").strip().lower()
    try:
        x_max = float(s.get("x_max", DEFAULT_X_MAX))
        if kind == "free":
            return free(x_max=x_max)
        if kind == "coulomb":
            return coulomb(int(s["l"]), float(s.get("gamma", 0.0)), x_max=x_max)
        if kind == "bessel":
            pk = s.get("perturbation", "none").strip().lower()
            strength = float(s.get("pert_strength", 1.0))
            if pk == "none":
                pert = None
            elif pk == "exp":
                pert = exponential_perturbation(strength, float(s.get("pert_rate", 1.0)))
            elif pk == "inverse":
                pert = inverse_perturbation(strength)
            else:
                raise ConfigError(f"unknown perturbation {pk!r}")
            return bessel(float(s["l"]), pert, x_max=x_max)
        if kind == "tabulated":
            if "samples" in s:
                pairs = _parse_samples(s["samples"])
            elif "samples_file" in s:
                pairs = np.loadtxt(s["samples_file"], delimiter=",", ndmin=2)
            else:
                raise ConfigError("tabulated potential needs samples or samples_file")
            return tabulated(pairs, s.get("interpolation", "linear").strip(), x_max=x_max)
    except KeyError as exc:
        raise ConfigError(f"potential section is missing {exc.args[0]!r}") from exc
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(f"bad numeric value in potential section: {exc}") from exc
    raise ConfigError(f"unknown potential kind {kind!r}")
