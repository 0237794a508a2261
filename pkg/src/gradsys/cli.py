"""Batch runner: ``gradsys run CONFIG`` and ``gradsys sweep CONFIG``.

A config is ``key = value`` text under ``[section]`` headers; section names
are free and all keys share one namespace.  Recognized keys:

``kind``        fixed_point | bilaplacian | thresholds | witness
``dim, n``      grid dimension (1 or 2) and nodes per axis
``p, q, m, sigma, N``  exponents (``N`` defaults to ``dim``)
``lambda, alpha``      data weights
``f, g``        function descriptors, e.g. ``one`` or ``gauss:0.2``
``c_tilde``     fixed constant, or ``calibrate = yes`` (the default)
``tol, max_iter, seed, out_dir``

Sweeps add ``lambdas`` and ``alphas`` (comma lists) or
``bisect = lambda`` with ``lambda_lo``, ``lambda_hi``, ``rel_width``, and
optionally ``workers``.

Exit status is 0 on success, 2 when a run diverges and 1 on any error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .exponents import Exponents, check_admissibility
from .grid import build_grid, lp_norm, sample
from .schauder import (
    ProblemData,
    Verdict,
    calibrate_c_tilde,
    iterate_to_fixed_point,
    pi_report,
    thresholds_from,
)

log = logging.getLogger("gradsys")

EXIT_OK, EXIT_ERROR, EXIT_DIVERGED = 0, 1, 2
KINDS = ("fixed_point", "bilaplacian", "thresholds", "witness")


class ConfigError(Exception):
    """Bad config; the message carries ``path:line`` when known."""


class Config:
    """Flat view of a sectioned ``key = value`` file with line lookup."""

    def __init__(self, path):
        self.path = Path(path)
        try:
            self.lines = self.path.read_text().splitlines()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
        parser.optionxform = str  # ``n`` (nodes) and ``N`` (dimension) differ
        try:
            parser.read_string("\n".join(self.lines), source=str(path))
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            if line is None and getattr(exc, "errors", None):
                line = exc.errors[0][0]
            first = str(exc).splitlines()[0]
            where = f"{path}:{line}" if line else str(path)
            raise ConfigError(f"{where}: malformed config: {first}") from None
        self.values = {}
        for section in parser.sections():
            for key, value in parser[section].items():
                if key in self.values:
                    raise ConfigError(f"{self.where(key)}: key {key!r} given twice")
                self.values[key] = value.strip()

    def where(self, key: str) -> str:
        pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
        for k, line in enumerate(self.lines, start=1):
            if pat.match(line):
                return f"{self.path}:{k}"
        return str(self.path)

    def has(self, key: str) -> bool:
        return key in self.values

    def str(self, key: str, default=None) -> str:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"{self.path}: missing key {key!r}")
            return default
        return self.values[key]

    def num(self, key: str, default=None, kind=float):
        raw = self.str(key, None if default is None else str(default))
        try:
            return kind(raw)
        except ValueError:
            raise ConfigError(f"{self.where(key)}: {key} = {raw!r} is not a number") from None

    def flag(self, key: str, default: bool) -> bool:
        raw = self.str(key, "yes" if default else "no").lower()
        if raw in ("1", "yes", "true", "on"):
            return True
        if raw in ("0", "no", "false", "off"):
            return False
        raise ConfigError(f"{self.where(key)}: {key} = {raw!r} is not a yes/no flag")

    def nums(self, key: str) -> list:
        raw = self.str(key, "")
        try:
            return [float(x) for x in raw.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"{self.where(key)}: {key} must be a comma list of numbers") from None


# --------------------------------------------------------------------------
# problem assembly


def _grid(cfg: Config):
    try:
        return build_grid(cfg.num("dim", 2, int), cfg.num("n", 33, int))
    except ValueError as exc:
        raise ConfigError(f"{cfg.where('n')}: {exc}") from None


def _field(cfg: Config, grid, key: str, default: str):
    try:
        return sample(grid, cfg.str(key, default))
    except (ValueError, OSError) as exc:
        raise ConfigError(f"{cfg.where(key)}: {exc}") from None


def _exponents(cfg: Config, grid) -> Exponents:
    try:
        e = Exponents(cfg.num("p", 2.0), cfg.num("q", 2.0), cfg.num("m", 2.0),
                      cfg.num("sigma", 2.0), cfg.num("N", grid.dim))
    except ValueError as exc:
        raise ConfigError(f"{cfg.path}: {exc}") from None
    verdict = check_admissibility(e)
    if not verdict.admissible:
        raise ConfigError(f"{cfg.path}: inadmissible exponents: {verdict.explain()}")
    return e


def _problem(cfg: Config, lam=None, alpha=None) -> ProblemData:
    grid = _grid(cfg)
    e = _exponents(cfg, grid)
    return ProblemData(
        _field(cfg, grid, "f", "one"),
        _field(cfg, grid, "g", "one"),
        cfg.num("lambda", 0.0) if lam is None else lam,
        cfg.num("alpha", 0.0) if alpha is None else alpha,
        e,
        tol=cfg.num("tol", 1e-8),
        max_iter=cfg.num("max_iter", 200, int),
    )


def _constants(cfg: Config, d: ProblemData):
    if cfg.has("c_tilde"):
        c = cfg.num("c_tilde")
        if not c > 0:
            raise ConfigError(f"{cfg.where('c_tilde')}: c_tilde must be positive")
    elif cfg.flag("calibrate", True):
        c = calibrate_c_tilde(d, seed=cfg.num("seed", 0, int))
    else:
        raise ConfigError(f"{cfg.path}: give c_tilde or set calibrate = yes")
    return thresholds_from(d.exponents.pq, c)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    log.info("wrote %s", path)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


# --------------------------------------------------------------------------
# experiments


def _run_fixed_point(cfg: Config, out: Path) -> int:
    d = _problem(cfg)
    t = _constants(cfg, d)
    res = iterate_to_fixed_point(d, t)
    rep = res.report
    with open(out / "trace.csv", "w", newline="") as fh:
        rep.write_csv(fh)
    pi = pi_report(d, t)
    summary = [
        ("verdict", rep.verdict.value),
        ("iterations", rep.iterations),
        ("r", d.r),
        ("c_tilde", t.c_tilde),
        ("ell", t.ell),
        ("lambda_star", t.lambda_star),
        ("in_E_all_iterations", rep.in_E_all_iterations),
        ("pi_proof", pi["proof"]),
        ("pi_stated", pi["stated"]),
    ]
    _write_rows(out / "summary.csv", ("key", "value"), [(k, _fmt(v)) for k, v in summary])
    log.info("verdict %s after %d iterations", rep.verdict.value, rep.iterations)
    return _exit_for(rep.verdict)


def _exit_for(verdict: Verdict) -> int:
    if verdict is Verdict.DIVERGED:
        return EXIT_DIVERGED
    if verdict is Verdict.MAX_ITER:
        log.warning("iteration cap reached without convergence")
    return EXIT_OK


def _run_bilaplacian(cfg: Config, out: Path) -> int:
    from .bilaplacian import cross_validate, solve_bilaplacian

    grid = _grid(cfg)
    f = _field(cfg, grid, "f", "one")
    lam, p = cfg.num("lambda", 0.0), cfg.num("p", 2.0)
    try:
        t = thresholds_from(p, cfg.num("c_tilde")) if cfg.has("c_tilde") else None
        res = solve_bilaplacian(f, lam, p, t, tol=cfg.num("tol", 1e-8), m=cfg.num("m", 2.0),
                                n_dim=cfg.num("N", grid.dim), max_iter=cfg.num("max_iter", 200, int))
    except ValueError as exc:
        raise ConfigError(f"{cfg.path}: {exc}") from None
    with open(out / "trace.csv", "w", newline="") as fh:
        res.report.write_csv(fh)
    rows = [("verdict", res.verdict.value), ("iterations", res.report.iterations),
            ("m0", res.m0), ("sigma0", res.sigma0)]
    if res.converged:
        rows.append(("cross_residual", cross_validate(res, f, lam, p)))
        rows.append(("splitting_residual", res.splitting_residual()))
    _write_rows(out / "summary.csv", ("key", "value"), [(k, _fmt(v)) for k, v in rows])
    return _exit_for(res.verdict)


def _family(cfg: Config, grid):
    from .thresholds import default_family

    powers = [int(x) for x in cfg.nums("powers")] or [2, 3, 4, 6]
    return default_family(grid, powers, cfg.flag("bump", True))


def _threshold_rows(cfg: Config, grid) -> list:
    from .thresholds import family_table

    fam = _family(cfg, grid)
    f, g = _field(cfg, grid, "f", "one"), _field(cfg, grid, "g", "one")
    p, q = cfg.num("p", 2.0), cfg.num("q", 2.0)
    rows = []
    try:
        if q == 1:
            rows += [("alpha",) + r for r in family_table("G_alpha", g, fam, p)]
            rows += [("lambda",) + r for r in family_table("G_lambda", f, fam, p)]
        else:
            rows += [("alpha",) + r for r in family_table("F", g, fam, p, q)]
            rows += [("lambda",) + r for r in family_table("F", f, fam, p, q)]
        rows += [("capacity",) + r for r in family_table("Q", f, fam, p)]
    except ValueError as exc:
        raise ConfigError(f"{cfg.path}: {exc}") from None
    return rows


def _best(rows, target) -> float:
    vals = [r[5] for r in rows if r[0] == target and not math.isnan(r[5])]
    return min(vals) if vals else math.nan


def _run_thresholds(cfg: Config, out: Path) -> int:
    from .thresholds import TABLE_COLUMNS

    rows = _threshold_rows(cfg, _grid(cfg))
    _write_rows(out / "thresholds.csv", ("target",) + TABLE_COLUMNS,
                [tuple(_fmt(x) for x in r) for r in rows])
    summary = [(f"{t}_upper", _fmt(_best(rows, t))) for t in ("alpha", "lambda", "capacity")]
    _write_rows(out / "summary.csv", ("key", "value"), summary)
    return EXIT_OK


def _run_witness(cfg: Config, out: Path) -> int:
    from .thresholds import WitnessParams, build_witness, witness_divergence_study

    try:
        wp = WitnessParams(cfg.num("N", 7, int), cfg.num("p", 2.0), cfg.num("eps", 0.5),
                           cfg.num("gamma", 3.0))
    except ValueError as exc:
        raise ConfigError(f"{cfg.path}: {exc}") from None
    k_lo, k_hi = cfg.num("k_min", 3, int), cfg.num("k_max", 10, int)
    cutoffs = [2.0 ** -k for k in range(k_lo, k_hi + 1)]
    st = witness_divergence_study(wp, cutoffs)
    rows = [(_fmt(c), _fmt(n), _fmt(d), _fmt(r))
            for c, n, d, r in zip(st.cutoffs, st.numerators, st.denominators, st.ratios)]
    _write_rows(out / "witness.csv", ("cutoff", "numerator", "denominator", "ratio"), rows)
    w = build_witness(wp)
    _write_rows(out / "summary.csv", ("key", "value"),
                [("theta", _fmt(wp.theta)), ("f_exponent", _fmt(wp.f_exponent)),
                 ("m_max", _fmt(w.m_max)), ("numerator_spread", _fmt(st.numerator_spread()))])
    return EXIT_OK


RUNNERS = {
    "fixed_point": _run_fixed_point,
    "bilaplacian": _run_bilaplacian,
    "thresholds": _run_thresholds,
    "witness": _run_witness,
}


# --------------------------------------------------------------------------
# sweeps


def _point(args) -> tuple:
    """One sweep point; module level so worker processes can pickle it."""
    path, lam, alpha, c_tilde = args
    cfg = Config(path)
    d = _problem(cfg, lam, alpha)
    t = thresholds_from(d.exponents.pq, c_tilde)
    rep = iterate_to_fixed_point(d, t).report
    pi = pi_report(d, t)
    return (lam, alpha, rep.verdict.value, rep.iterations, pi["proof"], pi["stated"])


def _evaluate(points: list, workers: int) -> list:
    if workers <= 1:
        return [_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_point, points))


def _bisect(cfg: Config, c_tilde: float, workers: int) -> list:
    lo, hi = cfg.num("lambda_lo"), cfg.num("lambda_hi")
    width = cfg.num("rel_width", 1e-2)
    alpha = cfg.num("alpha", 0.0)
    if not 0 <= lo < hi:
        raise ConfigError(f"{cfg.where('lambda_hi')}: need 0 <= lambda_lo < lambda_hi")
    path = str(cfg.path)
    rows = _evaluate([(path, lo, alpha, c_tilde), (path, hi, alpha, c_tilde)], workers)
    if rows[0][2] != Verdict.CONVERGED.value or rows[1][2] == Verdict.CONVERGED.value:
        raise ConfigError(f"{cfg.path}: lambda_lo must converge and lambda_hi must not")
    for _ in range(200):
        if hi - lo <= width * lo:
            break
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        row = _point((path, mid, alpha, c_tilde))
        rows.append(row)
        if row[2] == Verdict.CONVERGED.value:
            lo = mid
        else:
            hi = mid
    log.info("bisection bracket [%g, %g]", lo, hi)
    return rows


def sweep(config: str, out_dir: str | None = None) -> int:
    cfg = Config(config)
    out = _out_dir(cfg, out_dir)
    base = _problem(cfg)
    if cfg.has("c_tilde"):
        c_tilde = cfg.num("c_tilde")
    else:
        c_tilde = calibrate_c_tilde(base, seed=cfg.num("seed", 0, int))
    t = thresholds_from(base.exponents.pq, c_tilde)
    workers = cfg.num("workers", 1, int)
    if cfg.str("bisect", "") == "lambda":
        rows = _bisect(cfg, c_tilde, workers)
    else:
        lams = cfg.nums("lambdas") if cfg.has("lambdas") else [cfg.num("lambda", 0.0)]
        alphas = cfg.nums("alphas") if cfg.has("alphas") else [cfg.num("alpha", 0.0)]
        points = [(str(cfg.path), lam, a, c_tilde) for lam in lams for a in alphas]
        if not points:
            raise ConfigError(f"{cfg.path}: empty sweep grid")
        rows = _evaluate(points, workers)
    _write_rows(out / "sweep.csv",
                ("index", "lambda", "alpha", "verdict", "iterations", "pi_proof", "pi_stated"),
                [(k,) + tuple(_fmt(x) for x in r) for k, r in enumerate(rows)])

    # analytic boundary of the smallness region on both axes, next to the dual bounds
    e = base.exponents
    fm, gs = lp_norm(base.f, e.m), lp_norm(base.g, e.sigma)
    lam_pi = t.pi_bound / fm if fm > 0 else math.inf
    alpha_pi = (t.pi_bound / gs ** e.p) ** (1.0 / e.p) if gs > 0 else math.inf
    dual = _threshold_rows(cfg, base.grid)
    bounds = [("c_tilde", c_tilde), ("pi_lambda_axis", lam_pi), ("pi_alpha_axis", alpha_pi),
              ("lambda_star_upper", _best(dual, "lambda")),
              ("alpha_star_upper", _best(dual, "alpha"))]
    _write_rows(out / "bounds.csv", ("key", "value"), [(k, _fmt(v)) for k, v in bounds])
    return EXIT_OK


def _out_dir(cfg: Config, override: str | None) -> Path:
    out = Path(override or cfg.str("out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def run(config: str, out_dir: str | None = None) -> int:
    cfg = Config(config)
    kind = cfg.str("kind", "fixed_point")
    if kind not in RUNNERS:
        raise ConfigError(f"{cfg.where('kind')}: unknown experiment kind {kind!r}"
                          f" (expected one of {', '.join(KINDS)})")
    return RUNNERS[kind](cfg, _out_dir(cfg, out_dir))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gradsys", description=__doc__.splitlines()[0])
    ap.add_argument("--verbose", action="store_true", help="log progress to stderr")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides out_dir)")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("config", metavar="CONFIG")
        sp.add_argument("--out", metavar="DIR", dest="out_sub", help=argparse.SUPPRESS)
        sp.add_argument("--verbose", action="store_true", dest="verbose_sub", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    verbose = args.verbose or args.verbose_sub
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    out = args.out_sub or args.out
    try:
        if args.command == "run":
            return run(args.config, out)
        return sweep(args.config, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # solver failures are reported, not dumped
        if verbose:
            log.exception("run failed")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
