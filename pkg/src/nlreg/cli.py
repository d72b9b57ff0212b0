"""Command-line front end.

    nlreg <command> --config run.ini [--out DIR] [--seed N] [--threads N] [--tolerance T]

The config is an INI file (one level of sections).  Every command writes CSV
tables plus ``manifest.txt`` into the output directory; files are written to
a temporary name and renamed into place.  Exit codes: 0 success, 2 bad
configuration or input, 3 numerical failure, 4 a verified invariant failed.
"""
import argparse
import configparser
import csv
import hashlib
import io
import os
import platform
import sys
import tempfile

import numpy as np

from . import __version__, hot
from .analysis import (CACCIOPPOLI_HEADER, COUNTEREXAMPLE_HEADER, FIT_HEADER, caccioppoli_check,
                       counterexample_suite, fit_regularity_exponent)
from .errors import ConfigError, NlregError, NumericalFailure, VerificationFailure
from .increments import Domain1D, GridFunction, discrete_parts_check
from .kernels import (frac_laplacian_kernel, holder_coefficient_kernel, truncated_kernel,
                      verify_bounds, verify_holder)
from .seminorms import CSV_HEADER, besov, gagliardo, modulus_curve, nikolskii
from .solver import Singularity, WeakProblem, assemble, residual, solve

COMMANDS = ("seminorm", "solve", "caccioppoli", "fit-exponent", "counterexample",
            "verify-kernel", "parts-identity")

_MISSING = object()


# ---------------------------------------------------------------- built-ins


def _bump(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, x, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe * safe)), 0.0)


def _builtin_function(name, power):
    table = {
        "x_plus": lambda x: np.maximum(np.asarray(x, dtype=float), 0.0),
        "x_plus_power": lambda x: np.where(np.asarray(x) > 0, np.abs(x) ** power, 0.0),
        "linear": lambda x: np.asarray(x, dtype=float),
        "bump": _bump,
        "capped_square": lambda x: np.minimum(np.asarray(x, dtype=float) ** 2, 1.0),
        "constant": lambda x: np.ones_like(np.asarray(x, dtype=float)),
    }
    if name not in table:
        raise ConfigError(f"unknown builtin function {name!r}; choose from {sorted(table)}")
    return table[name]


def decaying_sine(x, y):
    """2 + sin(x + y) exp(-(x² + y²)): symmetric, between 1 and 3."""
    return 2.0 + np.sin(x + y) * np.exp(-(x * x + y * y))


def oscillating_sine(x, y):
    """2 + sin(x + y); its exterior integrals are not resolvable (exit code 3)."""
    return 2.0 + np.sin(x + y)


# tag -> (coefficient, lam, Lam, declared Hölder constant)
_COEFFICIENTS = {"decaying-sine": (decaying_sine, 1.0, 3.0, 4.0),
                 "oscillating-sine": (oscillating_sine, 1.0, 3.0, 2.0)}


# ---------------------------------------------------------------- config access


class Config:
    def __init__(self, parser: configparser.ConfigParser, args):
        self.p = parser
        self.args = args

    def get(self, section, key, kind=str, default=_MISSING):
        if not self.p.has_option(section, key):
            if default is _MISSING:
                raise ConfigError(f"missing [{section}] {key}")
            return default
        raw = self.p.get(section, key).strip()
        try:
            if kind is bool:
                return self.p.getboolean(section, key)
            if kind == "floats":
                return tuple(float(v) for v in raw.replace(",", " ").split())
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None

    def require(self, *sections):
        for s in sections:
            if not self.p.has_section(s):
                raise ConfigError(f"config lacks the [{s}] section")

    @property
    def seed(self):
        if self.args.seed is not None:
            return int(self.args.seed)
        return self.get("analysis", "seed", int, 0)

    @property
    def tolerance(self):
        tol = self.args.tolerance if self.args.tolerance is not None else self.get(
            "analysis", "tolerance", float, 1e-8)
        if not tol > 0:
            raise ConfigError("tolerance must be positive")
        return tol


def _kernel(cfg: Config):
    cfg.require("kernel")
    family = cfg.get("kernel", "family", str, "fractional")
    s = cfg.get("kernel", "s", float)
    if family == "fractional":
        return frac_laplacian_kernel(s)
    if family == "truncated":
        return truncated_kernel(s, cfg.get("kernel", "cutoff", float))
    if family == "holder":
        tag = cfg.get("kernel", "coefficient", str, "decaying-sine")
        if tag not in _COEFFICIENTS:
            raise ConfigError(f"unknown coefficient {tag!r}")
        a, lam, Lam, Gamma = _COEFFICIENTS[tag]
        return holder_coefficient_kernel(s, a, cfg.get("kernel", "lam", float, lam),
                                         cfg.get("kernel", "Lam", float, Lam),
                                         cfg.get("kernel", "Gamma", float, Gamma), name=tag)
    raise ConfigError(f"unknown kernel family {family!r}")


def _domain(cfg: Config):
    cfg.require("domain")
    a, b = cfg.get("domain", "a", float), cfg.get("domain", "b", float)
    if not b > a:
        raise ConfigError("domain needs a < b")
    if cfg.p.has_option("domain", "n_intervals"):
        n = cfg.get("domain", "n_intervals", int)
    else:
        n = int(round((b - a) / cfg.get("domain", "mesh_size", float)))
    return Domain1D(a, b), n


def _rhs(cfg: Config):
    cfg.require("rhs")
    kind = cfg.get("rhs", "expression", str)
    if kind == "zero":
        return 0.0, ()
    if kind == "constant":
        return cfg.get("rhs", "value", float, 1.0), ()
    if kind == "abs-power":
        loc = cfg.get("rhs", "location", float, 0.0)
        e = cfg.get("rhs", "exponent", float)
        return (lambda x: np.abs(np.asarray(x) - loc) ** -e), (Singularity(loc, e),)
    if kind == "gaussian":
        return (lambda x: np.exp(-np.asarray(x) ** 2)), ()
    raise ConfigError(f"unknown rhs expression {kind!r}")


def _problem(cfg: Config):
    dom, n = _domain(cfg)
    f, sing = _rhs(cfg)
    return WeakProblem(_kernel(cfg), dom, f, n, sing)


def _function(cfg: Config):
    cfg.require("function")
    name = cfg.get("function", "builtin", str)
    f = _builtin_function(name, cfg.get("function", "power", float, 0.5))
    a, b = cfg.get("function", "a", float, -1.0), cfg.get("function", "b", float, 1.0)
    n = cfg.get("function", "n_intervals", int, 1024)
    ext = cfg.get("function", "exterior", str, "zero")
    if ext not in ("zero", "tail"):
        raise ConfigError("exterior must be 'zero' or 'tail'")
    return GridFunction.from_function(f, a, b, n, exterior=ext)


def _interval(cfg, section, key, default=_MISSING):
    v = cfg.get(section, key, "floats", default)
    if v is None:
        return None
    if len(v) != 2 or not v[1] > v[0]:
        raise ConfigError(f"[{section}] {key} must be two increasing numbers")
    return v


# ---------------------------------------------------------------- output


def _csv_bytes(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue().encode()


def _atomic_write(path, data: bytes):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Outputs:
    def __init__(self, directory):
        self.dir = directory
        self.files = {}

    def csv(self, name, header, rows):
        data = _csv_bytes(header, rows)
        _atomic_write(os.path.join(self.dir, name), data)
        self.files[name] = hashlib.sha256(data).hexdigest()


# ---------------------------------------------------------------- commands


def cmd_seminorm(cfg: Config, out: Outputs):
    u = _function(cfg)
    kind = cfg.get("analysis", "kind", str, "gagliardo")
    U = Domain1D(*_interval(cfg, "analysis", "omega_prime", (u.lo, u.hi)))
    s = cfg.get("analysis", "s", float, 0.5)
    p = cfg.get("analysis", "p", float, 2.0)
    l = cfg.get("analysis", "l", int, 2)
    reports = []
    if kind == "gagliardo":
        rep = gagliardo(u, U, s, p)
        reports.append(rep)
        if p == 2.0 and cfg.get("analysis", "check", bool, True):
            brute = gagliardo(u, U, s, 2.0, method="bruteforce").value
            if abs(brute - rep.value) > max(cfg.tolerance, 1e-6) * max(abs(brute), 1e-300) + 1e-12:
                raise VerificationFailure(f"panel {rep.value} vs element-pair sum {brute}")
    elif kind == "nikolskii":
        reports.append(nikolskii(u, U, s, p, l, seed=cfg.seed))
    elif kind == "besov":
        lam = cfg.get("analysis", "lambda", float, 2.0)
        reports.append(besov(u, U, s, p, lam, l, seed=cfg.seed) if np.isinf(lam) else besov(u, U, s, p, lam, l))
    elif kind == "modulus":
        etas = cfg.get("analysis", "etas", "floats", tuple(2.0 ** -np.arange(1, 9)))
        omega, _, _ = modulus_curve(u, U, p, l, etas)
        out.csv("modulus.csv", ("eta", "omega"), zip(etas, omega))
        return
    else:
        raise ConfigError(f"unknown seminorm kind {kind!r}")
    out.csv("seminorms.csv", CSV_HEADER, [r.csv_row() for r in reports])


def _assembled(cfg: Config):
    pb = _problem(cfg)
    sys_ = assemble(pb, tol=max(cfg.tolerance, 1e-8))
    A = sys_.matrix
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > cfg.tolerance * float(np.max(np.abs(A))):
        raise VerificationFailure(f"stiffness matrix asymmetric by {asym}")
    return pb, sys_


def cmd_solve(cfg: Config, out: Outputs):
    pb, sys_ = _assembled(cfg)
    u = solve(pb, sys_)
    out.csv("solution.csv", ("node_x", "value"), zip(u.nodes, u.values))
    res = residual(u, pb, system=sys_)
    out.csv("solve_summary.csv", ("n_intervals", "h", "residual"), [(pb.n_intervals, pb.h, res)])


def cmd_caccioppoli(cfg: Config, out: Outputs):
    pb, sys_ = _assembled(cfg)
    u = solve(pb, sys_)
    x0 = cfg.get("analysis", "x0", float, 0.5 * (pb.domain.lo + pb.domain.hi))
    r = cfg.get("analysis", "r", float)
    pts = [sg.location for sg in pb.singularities]
    rep = caccioppoli_check(u, pb.rhs, pb.domain, x0, r, pb.kernel, pts)
    out.csv("caccioppoli.csv", CACCIOPPOLI_HEADER, rep.csv_rows())


def cmd_fit_exponent(cfg: Config, out: Outputs):
    source = cfg.get("analysis", "source", str, "function")
    if source == "solution":
        pb, sys_ = _assembled(cfg)
        u = solve(pb, sys_)
    elif source == "function":
        u = _function(cfg)
    else:
        raise ConfigError("source must be 'function' or 'solution'")
    Up = Domain1D(*_interval(cfg, "analysis", "omega_prime"))
    window = _interval(cfg, "analysis", "window", None)
    fit = fit_regularity_exponent(u, Up, cfg.get("analysis", "l", int, 2), cfg.get("analysis", "p", float, 2.0),
                                  window)
    out.csv("fit.csv", FIT_HEADER, fit.csv_rows())
    lo = cfg.get("analysis", "min_slope", float, None)
    if lo is not None and fit.slope < lo:
        raise VerificationFailure(f"fitted slope {fit.slope} below {lo}")


def cmd_counterexample(cfg: Config, out: Outputs):
    s = cfg.get("analysis", "s", float) if cfg.p.has_option("analysis", "s") else cfg.get("kernel", "s", float)
    k0, k1 = (int(v) for v in cfg.get("analysis", "eps_levels", "floats", (2.0, 20.0)))
    eps = 2.0 ** -np.arange(k0, k1 + 1, dtype=float)
    rep = counterexample_suite(s, eps)
    out.csv("counterexample.csv", COUNTEREXAMPLE_HEADER, rep.csv_rows())
    out.csv("energy.csv", ("eps", "energy", "lower_bound"),
            [(e, E, lb) for (e, E), lb in zip(rep.energy_table, rep.lower_bounds)])
    energies = [E for _, E in rep.energy_table]
    if not all(b > a for a, b in zip(energies, energies[1:])):
        raise VerificationFailure("energy not increasing as eps decreases")
    if not rep.lower_bound_check:
        raise VerificationFailure("energy falls below the lower bound")


def cmd_verify_kernel(cfg: Config, out: Outputs):
    K = _kernel(cfg)
    n = cfg.get("analysis", "samples", int, 100_000)
    b = verify_bounds(K, n, cfg.seed)
    h = verify_holder(K, n, cfg.seed)
    out.csv("kernel_check.csv",
            ("kernel", "samples", "near_min", "near_max", "far_max", "violations",
             "gamma_estimate", "gamma_declared", "gamma_diverging"),
            [(K.name, n, b.near_min, b.near_max, b.far_max, b.violations, h.estimate, h.declared,
              int(h.diverging))])
    if not b.passed:
        raise VerificationFailure(f"{b.violations} bound violations")
    if not h.passed:
        raise VerificationFailure(f"Hölder estimate {h.estimate} exceeds declared {h.declared}")


def random_parts_case(rng, n_u=32, n_v=12):
    """Random (u, v, R, z) for the integration-by-parts identity."""
    R = float(rng.uniform(0.2, 0.5))
    z = float(rng.uniform(-0.5, 0.5) * R)
    a = rng.normal(size=3)
    u = GridFunction.from_function(
        lambda x: a[0] * np.sin(x + a[1]) + a[2] * np.cos(2 * x) * np.exp(-x * x / 8.0),
        -12 * R, 12 * R, n_u)
    c = rng.normal(size=2)
    v = GridFunction.from_function(lambda x: _bump(x / (2 * R)) * (1.0 + c[0] * x + c[1] * x * x),
                                   -2 * R, 2 * R, n_v)
    return u, v, R, z


def cmd_parts_identity(cfg: Config, out: Outputs):
    K = _kernel(cfg)
    cases = cfg.get("analysis", "cases", int, 5)
    factor = cfg.get("analysis", "gap_factor", float, 10.0)
    rng = np.random.default_rng(cfg.seed)
    rows, bad = [], 0
    for i in range(cases):
        u, v, R, z = random_parts_case(rng)
        chk = discrete_parts_check(u, v, K, R, z)
        ok = abs(chk.gap) <= factor * chk.quad_error
        bad += not ok
        rows.append((i, R, z, chk.lhs, chk.rhs, chk.gap, chk.quad_error, int(ok)))
    out.csv("parts_identity.csv", ("case", "R", "z", "lhs", "rhs", "gap", "quad_error", "ok"), rows)
    if bad:
        raise VerificationFailure(f"{bad} of {cases} cases exceed {factor} x quadrature error")


_DISPATCH = {
    "seminorm": cmd_seminorm,
    "solve": cmd_solve,
    "caccioppoli": cmd_caccioppoli,
    "fit-exponent": cmd_fit_exponent,
    "counterexample": cmd_counterexample,
    "verify-kernel": cmd_verify_kernel,
    "parts-identity": cmd_parts_identity,
}


# ---------------------------------------------------------------- entry point


def _versions():
    import scipy

    v = {"nlreg": __version__, "python": platform.python_version(), "numpy": np.__version__,
         "scipy": scipy.__version__}
    try:
        import numba
        v["numba"] = numba.__version__
    except ImportError:  # pragma: no cover
        v["numba"] = "absent"
    return v


def _manifest(cfg: Config, command, config_bytes, out: Outputs, status):
    lines = [f"command = {command}",
             f"config_sha256 = {hashlib.sha256(config_bytes).hexdigest()}",
             f"seed = {cfg.seed}",
             f"tolerance = {cfg.tolerance!r}",
             f"threads = {cfg.args.threads if cfg.args.threads else 'default'}",
             f"backend = {hot.BACKEND}",
             f"status = {status}"]
    lines += [f"version.{k} = {v}" for k, v in _versions().items()]
    lines += [f"output.{name} = {digest}" for name, digest in sorted(out.files.items())]
    _atomic_write(os.path.join(out.dir, "manifest.txt"), ("\n".join(lines) + "\n").encode())


def build_parser():
    ap = argparse.ArgumentParser(prog="nlreg", description="Nonlocal regularity experiments.")
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="command to run (defaults to [run] command in the config)")
    ap.add_argument("--config", required=True, help="INI config file")
    ap.add_argument("--out", help="output directory (overrides [output] directory)")
    ap.add_argument("--seed", type=int, help="random seed override")
    ap.add_argument("--threads", type=int, help="worker threads for the numba backend")
    ap.add_argument("--tolerance", type=float, help="verification tolerance override")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, "rb") as fh:
            raw = fh.read()
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string(raw.decode())
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        cfg = Config(parser, args)
        command = args.command or cfg.get("run", "command", str)
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be non-negative")
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads must be at least 1")
            if hot.BACKEND == "numba":
                import numba
                numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        _ = cfg.tolerance
        directory = args.out or cfg.get("output", "directory", str, ".")
        os.makedirs(directory, exist_ok=True)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Outputs(directory)
    status, code = "ok", 0
    try:
        _DISPATCH[command](cfg, out)
    except VerificationFailure as exc:
        status, code = f"verification failure: {exc}", 4
    except NumericalFailure as exc:
        status, code = f"numerical failure: {exc}", 3
    except (ConfigError, NlregError, ValueError) as exc:
        status, code = f"input error: {exc}", 2
    _manifest(cfg, command, raw, out, status.replace("\n", " "))
    if code:
        print(status, file=sys.stderr)
    return code


def main():  # pragma: no cover
    sys.exit(run())
