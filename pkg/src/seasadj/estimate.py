"""
Maximum-likelihood and penalized estimation of Decomp models.

Parameter vector layout: ``theta = (log tau_1^2, ..., log tau_nv^2, u_1, ...)``
where the ``u`` block is the unconstrained AR vector consumed by
:func:`seasadj.arparam.transform_ar`. In noise-free mode the first active
variance is pinned to 1 and omitted from ``theta``.

The L1/L2 penalties act on the ``u`` block only.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg, optimize

from .arparam import (
    RootSet,
    ar_parcor,
    coeffs_to_roots,
    default_root_bounds,
    n_ar_params,
    transform_ar,
)
from .exceptions import EstimationError, SeasAdjError, UsageError
from .model import (
    ComponentSeries,
    DecompSpec,
    block_slices,
    build_state_space,
    default_init,
    extract_components,
    n_variances,
    state_dimension,
)
from .statespace import (
    FilterInit,
    FilterOutput,
    StateSpaceModel,
    _loglik,
    default_floor,
    fixed_interval_smooth,
    innovations,
    kalman_filter,
    log_likelihood,
)

__all__ = [
    "ParamSchema",
    "ParamVector",
    "FitOptions",
    "FitResult",
    "ScanRow",
    "ScanTable",
    "PathPoint",
    "LambdaPath",
    "param_count",
    "aic",
    "penalty_value",
    "unpack",
    "objective",
    "fit",
    "order_scan",
    "default_lambda_grid",
    "lambda_sweep",
]

logger = logging.getLogger(__name__)

FAIL_VALUE = 1e10
ZERO_TOL = 1e-6
_LOGVAR_CLIP = 60.0


@dataclass(frozen=True)
class ParamSchema:
    n_v: int
    n_ar: int
    ar_type: int

    @classmethod
    def for_spec(cls, spec: DecompSpec) -> "ParamSchema":
        nv = n_variances(spec) - (spec.noise_mode == "noise_free")
        return cls(nv, n_ar_params(spec), spec.ar_type)

    @property
    def size(self) -> int:
        return self.n_v + self.n_ar


@dataclass
class ParamVector:
    theta: np.ndarray
    schema: ParamSchema

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if self.theta.size != self.schema.size:
            raise UsageError(
                f"theta has length {self.theta.size}, schema needs {self.schema.size}"
            )

    @property
    def log_variances(self) -> np.ndarray:
        return self.theta[: self.schema.n_v]

    @property
    def ar_part(self) -> np.ndarray:
        return self.theta[self.schema.n_v:]


@dataclass
class FitOptions:
    """Optimizer and filter settings for :func:`fit`.

    ``ar_init`` selects the prior for the AR block: ``"stationary"`` uses
    the AR model's own stationary covariance, ``"diffuse"`` treats it like
    the trend and seasonal states. ``burn_in=None`` conditions on the
    first d observations, d being the number of diffuse states, which
    makes the likelihood insensitive to the prior scale.
    """

    method: str = "nelder-mead"
    n_starts: int = 5
    maxiter: int = 5000
    ftol: float = 1e-8
    xtol: float = 1e-4
    restarts: int = 2
    fd_step: float = 1e-5
    init_scale: float = 1e4
    ar_init: str = "stationary"
    burn_in: Optional[int] = None
    theta0: Optional[Sequence[float]] = None
    init: Optional[FilterInit] = None
    literal_count: bool = False

    def __post_init__(self):
        if self.method not in ("nelder-mead", "bfgs"):
            raise UsageError(f"unknown optimizer {self.method!r}")
        if self.ar_init not in ("stationary", "diffuse"):
            raise UsageError(f"unknown ar_init {self.ar_init!r}")
        if self.n_starts < 1:
            raise UsageError("n_starts must be >= 1")


@dataclass
class FitResult:
    spec: DecompSpec
    theta_hat: ParamVector
    loglik: float
    aic: float
    sigma2_hat: float
    objective: float
    components: ComponentSeries
    ar_coeffs: np.ndarray
    parcor: np.ndarray
    roots: np.ndarray
    variances: np.ndarray
    converged: bool
    iterations: int
    nfev: int
    model: StateSpaceModel
    filter_output: FilterOutput
    rootset: Optional[RootSet] = None
    param_count: int = 0

    @property
    def last_filtered(self):
        fo = self.filter_output
        return fo.filt_mean[-1], fo.filt_cov[-1]


# ----------------------------------------------------------------------
# counting


def _id(m):
    return 1 if m > 0 else 0


def param_count(spec: DecompSpec, literal: bool = False) -> int:
    """Free-parameter count used in the AIC.

    ``id(m1) + id(m2) + id(m3) + m3``; with ``literal=True`` one extra
    parameter is added.
    """
    k = _id(spec.m1) + _id(spec.m2) + _id(spec.m3) + spec.m3
    return k + 1 if literal else k


def aic(loglik: float, k: int) -> float:
    return -2.0 * loglik + 2.0 * k


def penalty_value(spec: DecompSpec, ar_part) -> float:
    u = np.asarray(ar_part, dtype=float)
    if spec.penalty == "L2":
        return float(np.sum(u * u))
    if spec.penalty == "L1":
        return float(np.sum(np.abs(u)))
    return 0.0


# ----------------------------------------------------------------------
# objective


def unpack(spec: DecompSpec, theta):
    """Variances, AR coefficients and root set encoded by ``theta``."""
    schema = ParamSchema.for_spec(spec)
    pv = theta if isinstance(theta, ParamVector) else ParamVector(theta, schema)
    var = np.exp(np.clip(pv.log_variances, -_LOGVAR_CLIP, _LOGVAR_CLIP))
    if spec.noise_mode == "noise_free":
        var = np.concatenate([[1.0], var])
    a, rs = transform_ar(pv.ar_part, spec)
    return var, a, rs


def diffuse_count(spec: DecompSpec, options: FitOptions) -> int:
    """Number of states with a diffuse prior."""
    k = state_dimension(spec)
    if options.init is None and options.ar_init == "stationary":
        return k - spec.m3
    return k


def _ar_stationary_cov(spec, var, a):
    tau3 = var[-1]
    m = a.size
    C = np.zeros((m, m))
    C[0] = a
    C[1:, :-1] = np.eye(m - 1)
    Q = np.zeros((m, m))
    Q[0, 0] = tau3
    P = linalg.solve_discrete_lyapunov(C, Q)
    return 0.5 * (P + P.T)


class _Problem:
    """Cached pieces for repeated likelihood evaluation on one series."""

    def __init__(self, spec: DecompSpec, y, options: FitOptions):
        self.spec = spec
        self.y = np.asarray(y, dtype=float).reshape(-1)
        self.options = options
        self.schema = ParamSchema.for_spec(spec)
        self.floor = default_floor(self.y)
        self.base_init = options.init or default_init(spec, self.y, scale=options.init_scale)
        if self.base_init.mean0.size != state_dimension(spec):
            raise UsageError("supplied initial state does not match the model dimension")
        self.burn_in = diffuse_count(spec, options) if options.burn_in is None else options.burn_in
        self.used = ~np.isnan(self.y)
        self.used[: self.burn_in] = False
        self.nfev = 0

    def build(self, theta):
        var, a, rs = unpack(self.spec, theta)
        model = build_state_space(self.spec, var, a)
        init = self.base_init
        if (self.options.init is None and self.options.ar_init == "stationary"
                and self.spec.m3 > 0):
            cov0 = init.cov0.copy()
            _, _, sl = block_slices(self.spec)
            cov0[sl, sl] = _ar_stationary_cov(self.spec, var, a)
            init = FilterInit(init.mean0, cov0)
        return model, init, var, a, rs

    def loglik(self, theta) -> float:
        model, init, *_ = self.build(theta)
        eps, rvar, _, _, _ = innovations(model, self.y, init, floor=self.floor)
        return _loglik(eps, rvar, self.used)

    def penalized(self, theta) -> float:
        ll = self.loglik(theta)
        lam = self.spec.lam
        if lam == 0 or self.spec.penalty == "none":
            return -ll
        return -ll + lam * penalty_value(self.spec, theta[self.schema.n_v:])

    def __call__(self, theta) -> float:
        self.nfev += 1
        try:
            val = self.penalized(np.asarray(theta, dtype=float))
        except (SeasAdjError, np.linalg.LinAlgError, ValueError, FloatingPointError):
            return FAIL_VALUE
        if not np.isfinite(val):
            return FAIL_VALUE
        return val


def objective(spec: DecompSpec, y, theta, options: Optional[FitOptions] = None) -> float:
    """Penalized negative log-likelihood ``-loglik + lam * R(theta)``.

    Non-finite or degenerate evaluations return ``1e10`` so that
    optimizers stay total.
    """
    prob = _Problem(spec, y, options or FitOptions())
    if isinstance(theta, ParamVector):
        theta = theta.theta
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != prob.schema.size:
        raise UsageError(f"theta has length {theta.size}, schema needs {prob.schema.size}")
    return prob(theta)


# ----------------------------------------------------------------------
# optimization


def _starts(schema: ParamSchema, options: FitOptions) -> List[np.ndarray]:
    starts = []
    if options.theta0 is not None:
        t0 = np.asarray(options.theta0, dtype=float).reshape(-1)
        if t0.size != schema.size:
            raise UsageError(f"theta0 has length {t0.size}, schema needs {schema.size}")
        starts.append(t0)
    starts.append(np.zeros(schema.size))
    for seed in range(1, 5):
        rng = np.random.default_rng(seed)
        scale = np.r_[np.full(schema.n_v, 2.0), np.full(schema.n_ar, 1.0)]
        starts.append(rng.normal(size=schema.size) * scale)
    return starts[: options.n_starts]


def _central_grad(fun, x, rel):
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def _local_min(fun, x0, options: FitOptions):
    f0 = fun(x0)
    if x0.size == 0:
        return x0, f0, True, 0
    fatol = options.ftol * max(1.0, abs(f0))
    x, f, nit, ok = x0, f0, 0, False
    for _ in range(1 + options.restarts):
        if options.method == "nelder-mead":
            res = optimize.minimize(
                fun, x, method="Nelder-Mead",
                options=dict(maxiter=options.maxiter, maxfev=4 * options.maxiter,
                             xatol=options.xtol, fatol=fatol, adaptive=x.size > 4),
            )
        else:
            res = optimize.minimize(
                fun, x, method="BFGS",
                jac=lambda z: _central_grad(fun, z, options.fd_step),
                options=dict(maxiter=options.maxiter, gtol=1e-5),
            )
        nit += int(res.nit)
        improved = f - res.fun
        if res.fun <= f:
            x, f = np.asarray(res.x, dtype=float), float(res.fun)
        ok = bool(res.success)
        if improved <= fatol or nit >= options.maxiter:
            break
    return x, f, ok, nit


def fit(spec: DecompSpec, y, options: Optional[FitOptions] = None) -> FitResult:
    """Maximum-likelihood (or penalized) fit of a Decomp model.

    Runs a local optimizer from each deterministic start and keeps the
    best. The returned components are fixed-interval smoothed estimates
    at the optimum.

    Raises
    ------
    EstimationError
        If no start yields a finite objective.
    """
    options = options or FitOptions()
    y = np.asarray(y, dtype=float).reshape(-1)
    k = state_dimension(spec)
    if np.count_nonzero(~np.isnan(y)) <= k:
        raise UsageError(f"need more than {k} observations for a {k}-state model")
    prob = _Problem(spec, y, options)
    best = None
    iters = 0
    for x0 in _starts(prob.schema, options):
        if prob(x0) >= FAIL_VALUE:
            logger.debug("start %s gives no finite objective", x0)
            continue
        x, f, ok, nit = _local_min(prob, x0, options)
        iters += nit
        if best is None or f < best[1]:
            best = (x, f, ok)
    if best is None:
        raise EstimationError("no starting point produced a finite objective")
    x, f, ok = best
    if spec.penalty == "L1":
        ar = x[prob.schema.n_v:]
        ar[np.abs(ar) < ZERO_TOL] = 0.0
        f = prob(x)
    return _assemble(prob, x, f, ok, iters)


def _assemble(prob: _Problem, x, f, converged, iters) -> FitResult:
    spec, y = prob.spec, prob.y
    model, init, var, a, rs = prob.build(x)
    fo = kalman_filter(model, y, init, floor=prob.floor, start=prob.burn_in)
    ll = log_likelihood(fo)
    sm = fixed_interval_smooth(model, fo)
    comps = extract_components(spec, sm, y)
    k = param_count(spec, prob.options.literal_count)
    return FitResult(
        spec=spec,
        theta_hat=ParamVector(x, prob.schema),
        loglik=ll,
        aic=aic(ll, k),
        sigma2_hat=fo.sigma2_hat,
        objective=f,
        components=comps,
        ar_coeffs=a,
        parcor=ar_parcor(x[prob.schema.n_v:], spec),
        roots=coeffs_to_roots(a),
        variances=var,
        converged=bool(converged),
        iterations=iters,
        nfev=prob.nfev,
        model=model,
        filter_output=fo,
        rootset=rs,
        param_count=k,
    )


# ----------------------------------------------------------------------
# order scans


@dataclass
class ScanRow:
    m1: int
    m2: int
    m3: int
    ar_type: int
    m_r: int
    m_i: int
    loglik: float = np.nan
    aic: float = np.nan
    converged: bool = False
    status: str = "ok"
    is_min: bool = False


@dataclass
class ScanTable:
    rows: List[ScanRow]

    @property
    def best(self) -> ScanRow:
        return next(r for r in self.rows if r.is_min)


def _scan_one(args):
    spec, y, options = args
    try:
        res = fit(spec, y, options)
    except SeasAdjError as exc:
        return np.nan, np.nan, False, f"failed: {exc}"
    return res.loglik, res.aic, res.converged, "ok"


def order_scan(spec_template: DecompSpec, y, m1_set, m3_set=None, root_orders=None,
               options: Optional[FitOptions] = None, jobs: int = 1) -> ScanTable:
    """Fit every (m1, AR order) combination and flag the minimum AIC.

    Parameters
    ----------
    spec_template : DecompSpec
        Supplies m2, period, noise mode, AR type, bounds and penalty.
    m1_set : iterable of int
    m3_set : iterable of int
        AR orders for ``ar_type=1``.
    root_orders : iterable of (m_r, m_i)
        Root counts for ``ar_type=2``.
    jobs : int
        Worker processes; results do not depend on it.
    """
    m1_set = list(m1_set)
    if spec_template.ar_type == 1:
        if not m3_set:
            raise UsageError("m3_set must be non-empty")
        orders = [(m3, 0, 0) for m3 in m3_set]
    else:
        if not root_orders:
            raise UsageError("root_orders must be non-empty")
        orders = [(mr + 2 * mi, mr, mi) for mr, mi in root_orders]
    if not m1_set:
        raise UsageError("m1_set must be non-empty")
    tb = spec_template.bounds
    tasks, rows = [], []
    for m1 in sorted(m1_set):
        for m3, mr, mi in sorted(orders, key=lambda o: (o[0], o[1])):
            if spec_template.ar_type == 2:
                bd = (tb.with_orders(mr, mi) if tb is not None
                      else default_root_bounds(mr, mi, spec_template.period))
                spec = spec_template.replace(m1=m1, m3=m3, bounds=bd)
            else:
                spec = spec_template.replace(m1=m1, m3=m3)
            rows.append(ScanRow(m1, spec.m2, m3, spec.ar_type, mr, mi))
            tasks.append((spec, y, options))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_scan_one, tasks))
    else:
        results = [_scan_one(t) for t in tasks]
    for row, (ll, a, conv, status) in zip(rows, results):
        row.loglik, row.aic, row.converged, row.status = ll, a, conv, status
    finite = [i for i, r in enumerate(rows) if np.isfinite(r.aic)]
    if not finite:
        raise EstimationError("every fit in the scan failed")
    rows[min(finite, key=lambda i: rows[i].aic)].is_min = True
    return ScanTable(rows)


# ----------------------------------------------------------------------
# regularization paths


def default_lambda_grid() -> np.ndarray:
    """``0`` followed by ``10**(j/10)`` for ``j = -8..16``."""
    return np.concatenate([[0.0], 10.0 ** (np.arange(-8, 17) / 10.0)])


@dataclass
class PathPoint:
    lam: float
    theta: np.ndarray
    parcor: np.ndarray
    ar_coeffs: np.ndarray
    loglik: float
    aic: float
    objective: float
    converged: bool
    n_zero: int
    trend_sd: float
    ar_sd: float
    status: str = "ok"


@dataclass
class LambdaPath:
    spec: DecompSpec
    grid: np.ndarray
    points: List[PathPoint] = field(default_factory=list)


def lambda_sweep(spec: DecompSpec, y, grid=None,
                 options: Optional[FitOptions] = None) -> LambdaPath:
    """Fit along a penalty-weight grid with warm starts.

    The first grid point is fitted from the usual multi-start set; every
    later point starts only from the previous solution.
    """
    if spec.penalty not in ("L1", "L2"):
        raise UsageError("a lambda sweep needs penalty L1 or L2")
    grid = default_lambda_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid < 0):
        raise UsageError("lambda grid must be a non-empty list of nonnegative values")
    if np.any(np.diff(grid) <= 0):
        raise UsageError("lambda grid must be strictly increasing")
    options = options or FitOptions()
    path = LambdaPath(spec, grid)
    prev = None
    for lam in grid:
        s = spec.replace(lam=float(lam))
        opts = options if prev is None else replace(options, theta0=prev, n_starts=1)
        try:
            res = fit(s, y, opts)
        except SeasAdjError as exc:
            logger.warning("lambda=%g failed: %s", lam, exc)
            nan = np.full(spec.m3, np.nan)
            path.points.append(PathPoint(float(lam), np.array([]), nan, nan, np.nan,
                                         np.nan, np.nan, False, 0, np.nan, np.nan,
                                         status=f"failed: {exc}"))
            continue
        prev = res.theta_hat.theta
        ar = res.theta_hat.ar_part
        path.points.append(PathPoint(
            lam=float(lam), theta=res.theta_hat.theta.copy(), parcor=res.parcor,
            ar_coeffs=res.ar_coeffs, loglik=res.loglik, aic=res.aic,
            objective=res.objective, converged=res.converged,
            n_zero=int(np.sum(np.abs(ar) < 1e-3)),
            trend_sd=float(np.std(np.diff(res.components.trend))),
            ar_sd=float(np.std(res.components.ar)),
        ))
    return path
