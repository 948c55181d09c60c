"""Run configurations: an INI-style text file with one section per concern.

Example::

    [potential]
    kind = bessel
    l = 1

    [transform.1]
    type = single
    kind = phi
    lambda = 0

    [grid]
    z = 1j, -1+1j
    x = 0.5, 1, 2

Transform sections are applied in the order of their numeric suffix. A
``gbdt`` step is only valid as the first step on ``kind = free`` and takes
either ``example = lan1|lan2`` with its parameters or ``seed = <file>``.
Everything is parsed and validated before any numerical work starts.
"""

import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .potentials import from_config

TRANSFORM_TYPES = ("single", "double", "gbdt")
DEFAULT_Z = "-2:2:5 x 0.5:4:5"
DEFAULT_X = "0.1:5:50"


def parse_complex(text):
    t = text.strip().replace(" ", "").replace("i", "j")
    if not t:
        raise ConfigError("empty complex number")
    try:
        return complex(t)
    except ValueError as exc:
        raise ConfigError(f"bad complex number {text!r}") from exc


def _range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range {text!r} must read start:stop:count")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}") from exc
    if n < 1:
        raise ConfigError("range count must be positive")
    return np.linspace(a, b, n)


def parse_z_grid(text):
    """A comma list of complex numbers, or a rectangle ``re0:re1:n x im0:im1:m``.

    The rectangle is ordered with the real part varying slowest.
    """
    text = text.strip()
    if " x " in text:
        re_part, im_part = text.split(" x ", 1)
        re, im = _range(re_part), _range(im_part)
        return (re[:, None] + 1j * im[None, :]).ravel()
    return np.array([parse_complex(t) for t in text.split(",") if t.strip()], dtype=complex)


def parse_x_grid(text):
    """A comma list of abscissae or a range ``start:stop:count``."""
    text = text.strip()
    if ":" in text:
        x = _range(text)
    else:
        try:
            x = np.array([float(t) for t in text.split(",") if t.strip()])
        except ValueError as exc:
            raise ConfigError(f"bad x grid {text!r}") from exc
    if x.size == 0:
        raise ConfigError("empty x grid")
    return x


def _float(sec, key, default=None):
    if key not in sec:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    try:
        return float(sec[key])
    except ValueError as exc:
        raise ConfigError(f"{key} = {sec[key]!r} is not a number") from exc


def read_seed_file(path):
    """GBDT seed file: keys ``n``, ``A``, ``Lambda0`` and ``S0``.

    Matrices are row-major lists of complex entries written as ``re,im``
    pairs separated by whitespace or semicolons, e.g.
    ``A = 0,1 1,0 ; 0,0 0,1`` for ``[[1j, 1], [0, 1j]]``.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read seed file {path!r}: {exc.strerror}") from exc
    data = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"bad seed line {line!r}")
        k, v = line.split("=", 1)
        data[k.strip()] = v.strip()
    try:
        n = int(data["n"])
    except (KeyError, ValueError) as exc:
        raise ConfigError("seed file needs an integer n") from exc
    if not 1 <= n <= 8:
        raise ConfigError("seed size n must lie in 1..8")

    def matrix(key, shape):
        if key not in data:
            raise ConfigError(f"seed file is missing {key}")
        pairs = re.split(r"[\s;]+", data[key].strip())
        try:
            vals = [complex(float(p.split(",")[0]), float(p.split(",")[1])) for p in pairs if p]
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{key} entries must be re,im pairs") from exc
        if len(vals) != shape[0] * shape[1]:
            raise ConfigError(f"{key} needs {shape[0] * shape[1]} entries, got {len(vals)}")
        return np.array(vals).reshape(shape)

    return matrix("A", (n, n)), matrix("Lambda0", (n, 2)), matrix("S0", (n, n))


@dataclass
class TransformStep:
    type: str
    params: dict

    def describe(self):
        return {"type": self.type, **{k: v for k, v in self.params.items()
                                      if not isinstance(v, np.ndarray)}}


@dataclass
class RunConfig:
    potential: dict
    steps: list = field(default_factory=list)
    z: np.ndarray = None
    x: np.ndarray = None
    tol: float = 1e-8
    measure: dict = field(default_factory=dict)
    out: str | None = None
    source: str | None = None


def _step(section, name):
    kind = section.get("type", "").strip().lower()
    if kind not in TRANSFORM_TYPES:
        raise ConfigError(f"[{name}] type must be one of {', '.join(TRANSFORM_TYPES)}")
    p = {}
    if kind == "single":
        k = section.get("kind", "phi").strip().lower()
        if k not in ("phi", "theta"):
            raise ConfigError(f"[{name}] kind must be phi or theta")
        p = {"kind": k, "lambda": _float(section, "lambda", 0.0)}
    elif kind == "double":
        from .double import parse_gamma

        try:
            gamma = parse_gamma(section.get("gamma", "1"))
        except DomainError as exc:
            raise ConfigError(f"[{name}] {exc}") from exc
        p = {"lambda": _float(section, "lambda"), "gamma": gamma}
    else:
        if "seed" in section:
            from .gbdt import GBDTSeed, validate_seed

            A, L, S = read_seed_file(section["seed"])
            try:
                validate_seed(GBDTSeed(A, L, S))
            except DomainError as exc:
                raise ConfigError(f"[{name}] invalid seed: {exc}") from exc
            p = {"seed": section["seed"], "A": A, "Lambda0": L, "S0": S}
        else:
            ex = section.get("example", "").strip().lower()
            if ex == "lan1":
                p = {"example": ex, "A": parse_complex(section.get("A", "1j")),
                     "v1": _float(section, "v1", 0.0)}
                if p["A"] == 0:
                    raise ConfigError(f"[{name}] lan1 needs A != 0")
            elif ex == "lan2":
                p = {"example": ex, "mu": parse_complex(section.get("mu", "1j")),
                     "d": _float(section, "d", 0.0)}
                if p["mu"].imag == 0:
                    raise ConfigError(f"[{name}] lan2 needs a non-real mu")
            else:
                raise ConfigError(f"[{name}] gbdt needs seed = <file> or example = lan1|lan2")
    return TransformStep(kind, p)


def parse_config(text, source=None):
    """Parse and validate a run configuration.

    Raises
    ------
    ConfigError
        For syntax errors, unknown keys or violated preconditions.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    if not cp.has_section("potential"):
        raise ConfigError("config needs a [potential] section")
    known = {"potential", "grid", "tolerances", "measure", "output"}
    steps = []
    for name in cp.sections():
        if name.startswith("transform"):
            m = re.fullmatch(r"transform(?:\.(\d+))?", name)
            if not m:
                raise ConfigError(f"bad section name [{name}]; use [transform.N]")
            steps.append((int(m.group(1) or 0), name))
        elif name not in known:
            raise ConfigError(f"unknown section [{name}]")
    pot = dict(cp["potential"])
    from_config(pot)  # validates the potential section
    chain = [_step(cp[name], name) for _, name in sorted(steps)]
    grid = cp["grid"] if cp.has_section("grid") else {}
    cfg = RunConfig(pot, chain, parse_z_grid(grid.get("z", DEFAULT_Z)),
                    parse_x_grid(grid.get("x", DEFAULT_X)), source=source)
    if cp.has_section("tolerances"):
        cfg.tol = _float(cp["tolerances"], "tol", 1e-8)
    if cp.has_section("measure"):
        m = cp["measure"]
        cfg.measure = {"x0": _float(m, "x0"), "x1": _float(m, "x1"),
                       "bins": int(_float(m, "bins", 1.0)),
                       "eps": tuple(float(e) for e in m.get("eps", "0.1,0.01,0.001").split(","))}
        if not cfg.measure["x0"] < cfg.measure["x1"]:
            raise ConfigError("[measure] needs x0 < x1")
    if cp.has_section("output"):
        cfg.out = cp["output"].get("dir")
    validate(cfg)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return parse_config(text, source=str(path))


def validate(cfg):
    """Check chain preconditions that do not need numerics."""
    kind = cfg.potential.get("kind", "").strip().lower()
    for i, step in enumerate(cfg.steps):
        if step.type == "gbdt" and (i != 0 or kind != "free"):
            raise ConfigError("a gbdt step must be the first step on a free potential")
    if np.any(cfg.x <= 0) and kind != "tabulated":
        raise ConfigError("x grid must be positive")
    if not cfg.tol > 0 or not math.isfinite(cfg.tol):
        raise ConfigError("tol must be positive")


def build_operator(cfg):
    """Apply the transform chain.

    Returns
    -------
    q, fs : final potential and fundamental system
    results : list of TransformResult or ExplicitExample
    """
    from . import double, gbdt, single
    from .ode import fundamental_system

    q = from_config(cfg.potential)
    if q.kind == "free":
        fs = fundamental_system(q, "regular", c=0.0)
    elif q.l is not None:
        fs = fundamental_system(q, "singular_bessel")
    else:
        fs = fundamental_system(q, "regular", c=q.domain[0])
    results = []
    for step in cfg.steps:
        p = step.params
        if step.type == "single":
            f = single.commute_phi if p["kind"] == "phi" else single.commute_theta
            r = f(q, fs, p["lambda"])
        elif step.type == "double":
            r = double.double_commute(q, fs, p["lambda"], p["gamma"])
        else:
            if "example" in p:
                r = gbdt.lan1(p["A"], p["v1"]) if p["example"] == "lan1" else gbdt.lan2(p["mu"],
                                                                                          p["d"])
                q, fs = r.potential, r.system
                results.append(r)
                continue
            seed = gbdt.GBDTSeed(p["A"], p["Lambda0"], p["S0"])
            state = gbdt.propagate(seed, q)
            r = state
            q, fs = gbdt.transformed_potential(state), None
            results.append(r)
            continue
        q, fs = r.q_new, r.fs_new
        results.append(r)
    return q, fs, results
