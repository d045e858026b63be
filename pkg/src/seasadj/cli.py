"""
Command-line front end.

Four subcommands share one configuration path: flat ``key=value`` files
with dotted keys, overridden by flags. Everything is validated before
any fitting starts.

    seasadj decompose data.csv --m1 2 --m3 2 --out run1
    seasadj scan data.csv --m1 1,2 --m3 0-6 --jobs 2 --out run2
    seasadj sweep data.csv --m3 8 --penalty L2 --out run3
    seasadj forecast data.csv --m3 2 --horizon 24 --out run4

Exit status: 0 success, 2 configuration error, 3 input/output error,
4 estimation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .arparam import RootBounds, default_root_bounds
from .estimate import (
    FitOptions,
    default_lambda_grid,
    fit,
    lambda_sweep,
    order_scan,
)
from .exceptions import SeasAdjError, SpecificationError, UsageError
from .model import DecompSpec
from .statespace import forecast

__all__ = ["SeriesFile", "InputError", "read_series", "load_config", "main"]

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_ESTIMATION = 0, 2, 3, 4


class InputError(SeasAdjError):
    """Unreadable or malformed series file."""


# ----------------------------------------------------------------------
# ingestion


@dataclass
class SeriesFile:
    values: np.ndarray
    labels: Optional[List[str]]
    name: str


def _split(line: str) -> List[str]:
    if "," in line:
        return next(csv.reader([line]))
    return line.split()


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_series(path, column=None) -> SeriesFile:
    """Read one numeric column from a delimited text file.

    Comma-separated lines are split with :mod:`csv`; anything else on
    whitespace. A first row with a non-numeric cell in the selected column
    is a header. Empty cells become NaN.

    Parameters
    ----------
    path : path-like
    column : int or str, optional
        Zero-based index or header name. Defaults to the last column.

    Raises
    ------
    InputError
        Missing or empty file, unknown column, or a non-numeric cell
        (the message names the data row and column).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise InputError(f"{path} is empty")
    rows = [_split(ln) for ln in lines]
    width = max(len(r) for r in rows)

    header = None
    first = rows[0]
    if any(c.strip() and not _is_number(c) for c in first):
        header = [c.strip() for c in first]
        rows = rows[1:]
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if header is None or column not in header:
            raise InputError(f"column {column!r} not found in header of {path}")
        col = header.index(column)
    else:
        col = width - 1 if column is None else int(column)
        if not -width <= col < width:
            raise InputError(f"column {col} out of range for {path} ({width} columns)")
        col %= width
    if not rows:
        raise InputError(f"{path} has a header but no data")

    values = np.empty(len(rows))
    labels = [] if width > 1 and col != 0 else None
    for i, r in enumerate(rows):
        cell = r[col].strip() if col < len(r) else ""
        if cell == "":
            values[i] = np.nan
        else:
            try:
                values[i] = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: data row {i}, column {col}: cannot parse {cell!r} as a number"
                ) from None
            if not np.isfinite(values[i]):
                raise InputError(f"{path}: data row {i}, column {col}: non-finite value")
        if labels is not None:
            labels.append(r[0].strip() if r else "")
    if np.all(np.isnan(values)):
        raise InputError(f"{path}: column {col} has no values")
    return SeriesFile(values, labels, path.stem)


# ----------------------------------------------------------------------
# configuration

# flag dest -> dotted config key
_FLAG_KEYS = {
    "m1": "spec.m1",
    "m2": "spec.m2",
    "period": "spec.period",
    "m3": "spec.m3",
    "ar_type": "spec.ar_type",
    "noise_mode": "spec.noise_mode",
    "penalty": "spec.penalty",
    "lam": "spec.lambda",
    "parcor_cap": "spec.parcor_cap",
    "lambda_grid": "sweep.grid",
    "mr": "bounds.m_r",
    "mi": "bounds.m_i",
    "r_min": "bounds.r_min",
    "r_max": "bounds.r_max",
    "theta_min": "bounds.theta_min",
    "theta_max": "bounds.theta_max",
    "horizon": "forecast.horizon",
    "jobs": "run.jobs",
    "out": "output.dir",
    "column": "data.column",
}

_KNOWN_KEYS = set(_FLAG_KEYS.values()) | {
    "bounds.negative_real",
    "fit.method",
    "fit.n_starts",
    "fit.maxiter",
    "fit.burn_in",
    "fit.ar_init",
    "fit.literal_count",
}


def load_config(path) -> Dict[str, str]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecificationError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise SpecificationError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


def _int(cfg, key, default):
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise SpecificationError(f"{key} must be an integer, got {cfg[key]!r}") from None


def _float(cfg, key, default):
    if key not in cfg:
        return default
    try:
        v = float(cfg[key])
    except ValueError:
        raise SpecificationError(f"{key} must be a number, got {cfg[key]!r}") from None
    if not math.isfinite(v):
        raise SpecificationError(f"{key} must be finite")
    return v


def _bool(cfg, key, default):
    if key not in cfg:
        return default
    v = cfg[key].lower()
    if v in ("1", "true", "yes"):
        return True
    if v in ("0", "false", "no"):
        return False
    raise SpecificationError(f"{key} must be true or false, got {cfg[key]!r}")


def _int_list(cfg, key, default) -> List[int]:
    """``"0-6"``, ``"1,2"`` or ``"0,2-4"``."""
    if key not in cfg:
        return list(default)
    out = []
    try:
        for part in cfg[key].split(","):
            part = part.strip()
            if "-" in part[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise SpecificationError(f"{key} must be integers or ranges, got {cfg[key]!r}") from None
    if not out:
        raise SpecificationError(f"{key} is empty")
    return sorted(set(out))


@dataclass
class RunConfig:
    spec: DecompSpec
    options: FitOptions
    out_dir: Path
    column: Optional[str] = None
    grid: Optional[np.ndarray] = None
    horizon: int = 12
    jobs: int = 1
    m1_set: List[int] = field(default_factory=list)
    m3_set: List[int] = field(default_factory=list)
    root_orders: List[Tuple[int, int]] = field(default_factory=list)


def _bounds(cfg, m_r, m_i, period) -> RootBounds:
    base = default_root_bounds(m_r, m_i, period)
    return RootBounds(
        m_r, m_i,
        _float(cfg, "bounds.r_min", base.r_min),
        _float(cfg, "bounds.r_max", base.r_max),
        _float(cfg, "bounds.theta_min", base.theta_min),
        _float(cfg, "bounds.theta_max", base.theta_max),
        _bool(cfg, "bounds.negative_real", False),
    )


def build_run_config(command: str, cfg: Dict[str, str]) -> RunConfig:
    """Turn merged key/value settings into validated objects.

    Raises
    ------
    SpecificationError
        On any malformed or inconsistent setting.
    """
    scan = command == "scan"
    period = _int(cfg, "spec.period", 12)
    ar_type = _int(cfg, "spec.ar_type", 1)
    m1_set = _int_list(cfg, "spec.m1", [2]) if scan else [_int(cfg, "spec.m1", 2)]
    m3_set = _int_list(cfg, "spec.m3", [0]) if scan else [_int(cfg, "spec.m3", 0)]
    penalty = cfg.get("spec.penalty", "L2" if command == "sweep" else "none")

    root_orders: List[Tuple[int, int]] = []
    bounds = None
    if ar_type == 2:
        if scan:
            mrs = _int_list(cfg, "bounds.m_r", [0, 1])
            mis = _int_list(cfg, "bounds.m_i", [0, 1])
            root_orders = [(r, i) for i in mis for r in mrs if r + i > 0]
            if not root_orders:
                raise SpecificationError("scan needs at least one nonzero (mr, mi) pair")
            bounds = _bounds(cfg, root_orders[0][0], root_orders[0][1], period)
            m3_set = sorted({r + 2 * i for r, i in root_orders})
        else:
            if "bounds.m_r" not in cfg and "bounds.m_i" not in cfg:
                raise SpecificationError("ar_type 2 needs --mr and/or --mi")
            m_r, m_i = _int(cfg, "bounds.m_r", 0), _int(cfg, "bounds.m_i", 0)
            bounds = _bounds(cfg, m_r, m_i, period)
            if "spec.m3" in cfg and m3_set[0] != bounds.m3:
                raise SpecificationError(
                    f"m3={m3_set[0]} disagrees with mr + 2*mi = {bounds.m3}")
            m3_set = [bounds.m3]

    spec = DecompSpec(
        m1=m1_set[0] if not scan else max(m1_set),
        m2=_int(cfg, "spec.m2", 1),
        period=period,
        m3=bounds.m3 if bounds is not None else m3_set[0],
        noise_mode=cfg.get("spec.noise_mode", "with_noise"),
        ar_type=ar_type,
        bounds=bounds,
        parcor_cap=_float(cfg, "spec.parcor_cap", 0.9),
        penalty=penalty,
        lam=_float(cfg, "spec.lambda", 0.0),
    )
    if scan and ar_type == 1:
        for m1 in m1_set:
            for m3 in m3_set:
                spec.replace(m1=m1, m3=m3)
    if command == "sweep" and spec.penalty not in ("L1", "L2"):
        raise SpecificationError("sweep needs --penalty L1 or L2")

    burn = cfg.get("fit.burn_in")
    options = FitOptions(
        method=cfg.get("fit.method", "nelder-mead"),
        n_starts=_int(cfg, "fit.n_starts", 5),
        maxiter=_int(cfg, "fit.maxiter", 5000),
        ar_init=cfg.get("fit.ar_init", "stationary"),
        burn_in=None if burn is None else _int(cfg, "fit.burn_in", 0),
        literal_count=_bool(cfg, "fit.literal_count", False),
    )

    grid = None
    if "sweep.grid" in cfg and cfg["sweep.grid"].strip().lower() != "default":
        try:
            grid = np.array([float(v) for v in cfg["sweep.grid"].split(",")])
        except ValueError:
            raise SpecificationError(f"bad lambda grid {cfg['sweep.grid']!r}") from None
        if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
            raise SpecificationError("lambda grid must be nonnegative and strictly increasing")
    elif command == "sweep":
        grid = default_lambda_grid()

    horizon = _int(cfg, "forecast.horizon", 12)
    if horizon < 1:
        raise SpecificationError("horizon must be at least 1")
    jobs = _int(cfg, "run.jobs", 1)
    if jobs < 1:
        raise SpecificationError("jobs must be at least 1")
    return RunConfig(spec, options, Path(cfg.get("output.dir", ".")), cfg.get("data.column"),
                     grid, horizon, jobs, m1_set, m3_set, root_orders)


# ----------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def _json_float(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _spec_dict(spec: DecompSpec) -> dict:
    d = dict(m1=spec.m1, m2=spec.m2, period=spec.period, m3=spec.m3,
             noise_mode=spec.noise_mode, ar_type=spec.ar_type,
             parcor_cap=spec.parcor_cap, penalty=spec.penalty, **{"lambda": spec.lam})
    if spec.bounds is not None:
        b = spec.bounds
        d["bounds"] = dict(m_r=b.m_r, m_i=b.m_i, r_min=b.r_min, r_max=b.r_max,
                           theta_min=b.theta_min, theta_max=b.theta_max,
                           negative_real=b.negative_real)
    return d


def _report(res) -> dict:
    return {
        "spec": _spec_dict(res.spec),
        "loglik": _json_float(res.loglik),
        "aic": _json_float(res.aic),
        "param_count": res.param_count,
        "sigma2_hat": _json_float(res.sigma2_hat),
        "R": _json_float(res.model.R),
        "variances": [_json_float(v) for v in res.variances],
        "ar_coeffs": [_json_float(v) for v in res.ar_coeffs],
        "parcor": [_json_float(v) for v in res.parcor],
        "roots": [{"modulus": _json_float(abs(z)), "argument": _json_float(np.angle(z))}
                  for z in res.roots],
        "theta": [_json_float(v) for v in res.theta_hat.theta],
        "converged": res.converged,
        "iterations": res.iterations,
    }


def _write_components(path: Path, y, comps) -> None:
    rows = ([i, _fmt(y[i]), _fmt(comps.trend[i]), _fmt(comps.seasonal[i]),
             _fmt(comps.ar[i]), _fmt(comps.noise[i])] for i in range(y.size))
    _write_csv(path, ["index", "y", "trend", "seasonal", "ar", "noise"], rows)


# ----------------------------------------------------------------------
# subcommands


def run_decompose(rc: RunConfig, series: SeriesFile) -> None:
    res = fit(rc.spec, series.values, rc.options)
    _write_components(rc.out_dir / "components.csv", series.values, res.components)
    with (rc.out_dir / "report.json").open("w") as fh:
        json.dump(_report(res), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_scan(rc: RunConfig, series: SeriesFile) -> None:
    tmpl = rc.spec
    tab = order_scan(tmpl, series.values, rc.m1_set,
                     m3_set=rc.m3_set if tmpl.ar_type == 1 else None,
                     root_orders=rc.root_orders or None, options=rc.options, jobs=rc.jobs)
    rows = ([r.m1, r.m2, r.m3, r.ar_type, r.m_r, r.m_i, _fmt(r.loglik), _fmt(r.aic),
             int(r.converged), "*" if r.is_min else "", r.status] for r in tab.rows)
    _write_csv(rc.out_dir / "scan.csv",
               ["m1", "m2", "m3", "ar_type", "m_r", "m_i", "loglik", "aic",
                "converged", "min_aic", "status"], rows)


def run_sweep(rc: RunConfig, series: SeriesFile) -> None:
    path = lambda_sweep(rc.spec, series.values, rc.grid, rc.options)
    rows = []
    n_v = len(path.points[0].theta) - rc.spec.m3 if path.points and path.points[0].theta.size else 0
    for p in path.points:
        lam = _fmt(p.lam)
        for j, b in enumerate(p.parcor, start=1):
            rows.append([lam, f"parcor_{j}", _fmt(b)])
        ar = p.theta[n_v:] if p.theta.size else np.full(rc.spec.m3, np.nan)
        for j, u in enumerate(ar, start=1):
            rows.append([lam, f"theta_ar_{j}", _fmt(u)])
        rows.append([lam, "loglik", _fmt(p.loglik)])
        rows.append([lam, "aic", _fmt(p.aic)])
        rows.append([lam, "objective", _fmt(p.objective)])
        rows.append([lam, "n_zero", str(p.n_zero)])
        rows.append([lam, "trend_sd", _fmt(p.trend_sd)])
        rows.append([lam, "ar_sd", _fmt(p.ar_sd)])
        rows.append([lam, "converged", str(int(p.converged))])
    _write_csv(rc.out_dir / "sweep.csv", ["lambda", "param", "value"], rows)


def run_forecast(rc: RunConfig, series: SeriesFile) -> None:
    res = fit(rc.spec, series.values, rc.options)
    out = forecast(res.model, res.last_filtered, rc.horizon, res.sigma2_hat)
    n = series.values.size
    rows = []
    for h, (m, v) in enumerate(out, start=1):
        sd = math.sqrt(max(v, 0.0))
        rows.append([n - 1 + h, h, _fmt(m), _fmt(v), _fmt(m - 1.959963984540054 * sd),
                     _fmt(m + 1.959963984540054 * sd)])
    _write_csv(rc.out_dir / "forecast.csv",
               ["index", "step", "mean", "variance", "lower95", "upper95"], rows)
    with (rc.out_dir / "report.json").open("w") as fh:
        json.dump(_report(res), fh, indent=2, sort_keys=True)
        fh.write("\n")


_COMMANDS = {
    "decompose": run_decompose,
    "scan": run_scan,
    "sweep": run_sweep,
    "forecast": run_forecast,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seasadj", description="State-space seasonal adjustment.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="delimited series file")
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--column", help="column index or header name (default: last)")
    common.add_argument("--m1", help="trend order (scan: list such as 1,2)")
    common.add_argument("--m2", help="seasonal order, 0 or 1")
    common.add_argument("--period")
    common.add_argument("--m3", help="AR order (scan: list or range such as 0-6)")
    common.add_argument("--ar-type", dest="ar_type", help="1 (PARCOR cap) or 2 (root box)")
    common.add_argument("--noise-mode", dest="noise_mode",
                        help="with_noise or noise_free")
    common.add_argument("--penalty", help="none, L1 or L2")
    common.add_argument("--lambda", dest="lam", help="penalty weight")
    common.add_argument("--lambda-grid", dest="lambda_grid",
                        help="comma-separated increasing grid, or 'default'")
    common.add_argument("--mr", help="real roots (ar-type 2)")
    common.add_argument("--mi", help="complex pairs (ar-type 2)")
    common.add_argument("--r-min", dest="r_min")
    common.add_argument("--r-max", dest="r_max")
    common.add_argument("--theta-min", dest="theta_min")
    common.add_argument("--theta-max", dest="theta_max")
    common.add_argument("--parcor-cap", dest="parcor_cap")
    common.add_argument("--horizon")
    common.add_argument("--jobs")
    common.add_argument("--out", help="output directory (default: current)")
    common.add_argument("-v", "--verbose", action="store_true")
    for name in _COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else {}
        for dest, key in _FLAG_KEYS.items():
            val = getattr(args, dest)
            if val is not None:
                cfg[key] = val
        rc = build_run_config(args.command, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SpecificationError, UsageError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        series = read_series(args.input, rc.column)
        rc.out_dir.mkdir(parents=True, exist_ok=True)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: cannot create {rc.out_dir}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO

    sp = rc.spec
    need = max(rc.m1_set) + sp.m2 * (sp.period - 1) + max(rc.m3_set)
    n_obs = int(np.count_nonzero(~np.isnan(series.values)))
    if n_obs <= need:
        print(f"configuration error: {n_obs} observations cannot support a "
              f"{need}-state model", file=sys.stderr)
        return EXIT_CONFIG

    try:
        _COMMANDS[args.command](rc, series)
    except OSError as exc:
        print(f"error: writing output failed: {exc}", file=sys.stderr)
        return EXIT_IO
    except SeasAdjError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
