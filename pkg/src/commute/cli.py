"""Command-line front end.

Exit codes: 0 success, 1 failed verification, 2 configuration error (nothing
is written), 3 numerical failure. Errors are reported on stderr as one JSON
object naming the failing module.
"""

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import tables
from .config import (RunConfig, build_operator, load_config, parse_complex, parse_x_grid,
                     parse_z_grid, TransformStep)
from .errors import CommuteError, ConfigError, DomainError

THREADS_ENV = "COMMUTE_THREADS"
EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
Z_CHUNK = 4


def _threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be positive")
    return n


def _map_z(func, z, threads, axis=0):
    """Apply a vectorized ``func`` over fixed chunks of ``z`` and join along ``axis``.

    The chunking does not depend on ``threads``: batched integrations share
    step-size control, so equal chunks keep the output byte-identical.
    """
    chunks = [z[i:i + Z_CHUNK] for i in range(0, z.size, Z_CHUNK)] or [z]
    if threads == 1 or len(chunks) == 1:
        parts = [func(c) for c in chunks]
    else:
        with ThreadPoolExecutor(min(threads, len(chunks))) as pool:
            parts = list(pool.map(func, chunks))
    return np.concatenate(parts, axis=axis)


class Output:
    """Collects tables in memory and writes them only after the run succeeded."""

    def __init__(self, out, as_json):
        self.dir = Path(out) if out else Path(".")
        self.as_json = as_json
        self.tables = []
        self.docs = []

    def table(self, name, header, rows, meta=None):
        self.tables.append((name, header, [list(r) for r in rows], meta))

    def doc(self, name, obj):
        self.docs.append((name, obj))

    def flush(self):
        self.dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, header, rows, meta in self.tables:
            path = self.dir / f"{name}.csv"
            tables.write_csv(path, header, rows)
            written.append(str(path))
            if self.as_json:
                jpath = self.dir / f"{name}.json"
                tables.write_json(jpath, header, rows, meta)
                written.append(str(jpath))
        for name, obj in self.docs:
            path = self.dir / f"{name}.json"
            with open(path, "w") as fh:
                json.dump(obj, fh, indent=1, default=str)
                fh.write("\n")
            written.append(str(path))
        return written


def _potential_rows(q, x):
    return [[t, v] for t, v in zip(x, np.asarray(q.eval(x), dtype=float))]


def _solution_rows(fs, z, x, threads):
    header = ["re_z", "im_z", "x"]
    for n in ("phi", "dphi", "theta", "dtheta"):
        header += tables.complex_columns(n)

    def block(zc):
        return np.asarray(fs.evaluate(zc, x), dtype=complex)  # (4, nz, nx)

    r = _map_z(block, z, threads, axis=1)
    r = r.reshape(4, z.size, x.size)
    rows = []
    for i, zz in enumerate(z):
        for j, t in enumerate(x):
            row = [zz.real, zz.imag, t]
            for k in range(4):
                row += tables.split_complex(r[k, i, j])
            rows.append(row)
    return header, rows


def _weyl_values(q, fs, z, threads):
    from .weyl import weyl_values

    if fs is None:
        raise ConfigError("the final operator has no fundamental system (generic GBDT seed); "
                          "Weyl functions need lan1/lan2 or single/double steps")
    if q.endpoint_class[1] != "limit-point":
        raise ConfigError("Weyl functions need a limit-point endpoint at b")
    return _map_z(lambda zc: np.atleast_1d(weyl_values(fs, q, zc)), z, threads)


def _weyl_rows(z, M):
    return [[a.real, a.imag, m.real, m.imag] for a, m in zip(z, M)]


WEYL_HEADER = tables.complex_columns("z") + tables.complex_columns("M")


def _grids(args, cfg):
    z = parse_z_grid(args.z) if getattr(args, "z", None) else cfg.z
    x = parse_x_grid(args.x_grid) if getattr(args, "x_grid", None) else cfg.x
    if np.any(x <= 0) and cfg.potential.get("kind") != "tabulated":
        raise ConfigError("x grid must be positive")
    return z, np.asarray(x, dtype=float)


def _load(args, required=True):
    if args.config:
        return load_config(args.config)
    if required:
        raise ConfigError("--config is required")
    from .config import parse_config

    return parse_config("[potential]\nkind = free\n")


def _describe_chain(cfg, results):
    out = []
    for step, r in zip(cfg.steps, results):
        d = step.describe()
        if hasattr(r, "describe"):
            d.update(r.describe())
        out.append(d)
    return out


def cmd_sample(args, out):
    cfg = _load(args)
    z, x = _grids(args, cfg)
    threads = _threads()
    q, fs, results = build_operator(cfg)
    out.table("potential", ["x", "q"], _potential_rows(q, x), {"potential": q.describe()})
    if fs is not None:
        header, rows = _solution_rows(fs, z, x, threads)
        out.table("solutions", header, rows)
    out.doc("run", {"potential": cfg.potential, "chain": _describe_chain(cfg, results)})


def _transform_step(args):
    from .double import parse_gamma

    if args.which == "single":
        return TransformStep("single", {"kind": args.kind, "lambda": args.lam})
    if args.which == "double":
        try:
            gamma = parse_gamma(args.gamma)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        return TransformStep("double", {"lambda": args.lam, "gamma": gamma})
    if args.seed:
        from .config import read_seed_file
        from .gbdt import GBDTSeed, validate_seed

        A, L, S = read_seed_file(args.seed)
        try:
            validate_seed(GBDTSeed(A, L, S))
        except DomainError as exc:
            raise ConfigError(f"invalid seed: {exc}") from exc
        return TransformStep("gbdt", {"seed": args.seed, "A": A, "Lambda0": L, "S0": S})
    if args.example == "lan1":
        return TransformStep("gbdt", {"example": "lan1", "A": parse_complex(args.A),
                                      "v1": args.v1})
    if args.example == "lan2":
        mu = parse_complex(args.mu)
        if mu.imag == 0:
            raise ConfigError("lan2 needs a non-real mu")
        return TransformStep("gbdt", {"example": "lan2", "mu": mu, "d": args.d})
    raise ConfigError("transform gbdt needs --seed <file> or --example lan1|lan2")


def cmd_transform(args, out):
    from .config import validate

    cfg = _load(args, required=args.which != "gbdt")
    cfg.steps = list(cfg.steps) + [_transform_step(args)]
    validate(cfg)
    z, x = _grids(args, cfg)
    threads = _threads()
    q, fs, results = build_operator(cfg)
    last = results[-1]
    out.table("q_new", ["x", "q_new"], _potential_rows(q, x), {"potential": q.describe()})
    desc = {"potential": cfg.potential, "chain": _describe_chain(cfg, results)}
    if fs is not None:
        header, rows = _solution_rows(fs, z, x, threads)
        out.table("fs_new", header, rows)
    if args.which == "gbdt":
        from . import gbdt

        state = last.state if hasattr(last, "state") else last
        zz = z[np.min(np.abs(z[:, None] - np.linalg.eigvals(state.seed.A)[None, :]), axis=1)
               > gbdt.SPECTRUM_GUARD]
        w = gbdt.transfer_values(state, zz, x)
        header = ["re_z", "im_z", "x"]
        for a in ("11", "12", "21", "22"):
            header += tables.complex_columns("w" + a)
        rows = []
        for i, zv in enumerate(zz):
            for j, t in enumerate(x):
                row = [zv.real, zv.imag, t]
                for v in w[i, j].ravel():
                    row += tables.split_complex(v)
                rows.append(row)
        out.table("w_A", header, rows)
        if hasattr(last, "weyl"):
            desc["weyl"] = dict(last.weyl.provenance)
            out.table("weyl_closed_form", WEYL_HEADER, _weyl_rows(z, last.weyl(z)))
    else:
        desc["weyl_map"] = last.weyl_map.formula
        desc["measure_map"] = last.measure_map.formula
    out.doc("transform", desc)
    print(json.dumps({"transform": desc["chain"][-1],
                      "weyl_map": desc.get("weyl_map", desc.get("weyl"))}, default=str))


def branch_report(q, fs, z, threads, tol):
    """Conjugation residual ``|M(conj z) - conj M(z)|`` and the sign of ``Im M`` on ``Im z > 0``."""
    from ._numerics import branch_sqrt

    M = _weyl_values(q, fs, z, threads)
    Mc = _weyl_values(q, fs, np.conj(z), threads)
    conj = float(np.max(np.abs(Mc - np.conj(M)) / (1 + np.abs(M))))
    root = branch_sqrt(z)
    return {"conjugation_residual": conj, "sqrt_branch_ok": bool(np.all(root.imag >= 0)),
            "passed": bool(conj <= tol and np.all(root.imag >= 0)), "tol": tol,
            "sqrt_z": [[a.real, a.imag, r.real, r.imag] for a, r in zip(z, root)]}


def cmd_weyl(args, out):
    cfg = _load(args)
    z, _ = _grids(args, cfg)
    threads = _threads()
    q, fs, results = build_operator(cfg)
    M = _weyl_values(q, fs, z, threads)
    meta = {"potential": q.describe(), "chain": _describe_chain(cfg, results)}
    out.table("weyl", WEYL_HEADER, _weyl_rows(z, M), meta)
    if args.branch_check:
        rep = branch_report(q, fs, z, threads, args.tol if args.tol else cfg.tol)
        out.doc("branch_check", rep)
        print(json.dumps({k: v for k, v in rep.items() if k != "sqrt_z"}))
        if not rep["passed"]:
            raise NumericalCheckFailed("branch check failed", rep)


def cmd_measure(args, out):
    from .weyl import WeylFunction, spectral_measure

    cfg = _load(args)
    m = dict(cfg.measure)
    for key in ("x0", "x1"):
        if getattr(args, key) is not None:
            m[key] = getattr(args, key)
    if args.bins is not None:
        m["bins"] = args.bins
    if "x0" not in m or "x1" not in m:
        raise ConfigError("measure needs x0 and x1 ([measure] section or --x0/--x1)")
    if not m["x0"] < m["x1"]:
        raise ConfigError("measure needs x0 < x1")
    q, fs, _ = build_operator(cfg)
    _weyl_values(q, fs, np.array([1j]), 1)  # precondition check
    est = spectral_measure(WeylFunction.numeric(fs, q), m["x0"], m["x1"],
                           m.get("eps", (1e-1, 1e-2, 1e-3)), int(m.get("bins", 1)))
    header = ["x0", "x1", "mass"] + [f"mass_eps_{e:.3g}" for e in est.epsilon_schedule]
    rows = [[a, b, v, *r] for (a, b, v), r in zip(est.intervals, est.raw)]
    out.table("measure", header, rows, {"converged": est.converged, "signed": est.signed})
    print(json.dumps({"total": est.total, "converged": est.converged}))


def cmd_verify(args, out):
    from . import verify

    tol = args.tol if args.tol else 1e-8
    failed = []

    def report(c):
        print(c.line(), flush=True)
        if not c.passed:
            failed.append(c)

    checks = verify.run(args.suite, tol, report)
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if args.out:
        out.table("verify", ["suite", "check", "residual", "tol", "passed"],
                  [[c.suite, c.name, c.residual, c.tol, int(c.passed)] for c in checks])
    return EXIT_VERIFY if failed else EXIT_OK


class NumericalCheckFailed(CommuteError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


def _failing_module(exc):
    tb = exc.__traceback__
    module = None
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("commute"):
            module = name
        tb = tb.tb_next
    return module


def _error(code, exc):
    rep = {"status": "error", "exit_code": code, "error": type(exc).__name__,
           "module": _failing_module(exc), "message": str(exc)}
    if getattr(exc, "x", None) is not None:
        rep["x"] = exc.x
    print(json.dumps(rep), file=sys.stderr)
    return code


def _common(p):
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--tol", type=float, help="tolerance for checks")
    p.add_argument("--z", help="z grid: 'a,b,...' or 're0:re1:n x im0:im1:m'")
    p.add_argument("--x-grid", dest="x_grid", help="x grid: 'a,b,...' or 'start:stop:count'")
    p.add_argument("--json", action="store_true", help="also write JSON mirrors of the tables")


def build_parser():
    parser = argparse.ArgumentParser(prog="commute", description="Commutation methods for "
                                     "Schroedinger operators with strongly singular potentials.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sample", help="sample the potential and (phi, theta)")
    _common(p)
    p.set_defaults(func=cmd_sample)
    p = sub.add_parser("transform", help="apply one more transform and sample the result")
    tsub = p.add_subparsers(dest="which", required=True)
    s = tsub.add_parser("single")
    _common(s)
    s.add_argument("--kind", choices=("phi", "theta"), default="phi")
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    s.set_defaults(func=cmd_transform)
    s = tsub.add_parser("double")
    _common(s)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--gamma", default="1", help="positive number or inf")
    s.set_defaults(func=cmd_transform)
    s = tsub.add_parser("gbdt")
    _common(s)
    s.add_argument("--seed", help="seed file with n, A, Lambda0, S0")
    s.add_argument("--example", choices=("lan1", "lan2"))
    s.add_argument("--A", default="1j", help="lan1: scalar A")
    s.add_argument("--v1", type=float, default=0.0, help="lan1: real v1")
    s.add_argument("--mu", default="1j", help="lan2: non-real mu")
    s.add_argument("--d", type=float, default=0.0, help="lan2: real d")
    s.set_defaults(func=cmd_transform)
    p = sub.add_parser("weyl", help="singular Weyl function on a z grid")
    _common(p)
    p.add_argument("--branch-check", dest="branch_check", action="store_true",
                   help="check M(conj z) = conj M(z) and the sqrt branch")
    p.set_defaults(func=cmd_weyl)
    p = sub.add_parser("measure", help="spectral measure of intervals by Stieltjes inversion")
    _common(p)
    p.add_argument("--x0", type=float)
    p.add_argument("--x1", type=float)
    p.add_argument("--bins", type=int)
    p.set_defaults(func=cmd_measure)
    p = sub.add_parser("verify", help="run self-check suites")
    p.add_argument("suite", nargs="?", default="all",
                   choices=("wronskian", "single", "double", "gbdt", "measure", "all"))
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify, json=False)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(getattr(args, "out", None), getattr(args, "json", False))
    try:
        code = args.func(args, out)
        out.flush()
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    except NumericalCheckFailed as exc:
        out.flush()
        return _error(EXIT_NUMERIC, exc)
    except (CommuteError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error(EXIT_NUMERIC, exc)
    except Exception as exc:  # anything else is a bug; keep the contract and show where
        traceback.print_exc(file=sys.stderr)
        return _error(EXIT_NUMERIC, exc)
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
