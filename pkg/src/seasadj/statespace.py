"""
Linear-Gaussian state-space engine for scalar observations.

The model is

    x_n = F x_{n-1} + G v_n,      v_n ~ N(0, Q)
    y_n = H x_n + w_n,            w_n ~ N(0, R)

All variances (Q, R and the initial covariance) are *relative* to an
overall scale sigma^2 that is profiled out of the likelihood, so R = 1 is
the usual observation-noise model and R = 0 the noise-free one.

The inner recursion is compiled with numba and walks F as a sparse
triplet list, since the seasonal-adjustment transition matrices are
block companions with few nonzeros per row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numba
import numpy as np

from .exceptions import (
    DegenerateFitError,
    NumericalDegeneracyError,
    SpecificationError,
    UsageError,
)

__all__ = [
    "StateSpaceModel",
    "FilterInit",
    "FilterOutput",
    "SmoothedStates",
    "kalman_filter",
    "fixed_interval_smooth",
    "concentrated_scale",
    "log_likelihood",
    "forecast",
    "default_floor",
]

FLOOR_FACTOR = 1e-12
SYM_TOL = 1e-9


@dataclass(frozen=True)
class StateSpaceModel:
    """Time-invariant system matrices.

    Parameters
    ----------
    F : ndarray, shape (k, k)
        Transition matrix.
    G : ndarray, shape (k, q)
        Noise-loading matrix.
    H : ndarray, shape (k,)
        Observation row.
    Q : ndarray, shape (q, q)
        Diagonal system-noise covariance (relative units).
    R : float
        Observation-noise variance (relative units); 0 is allowed.
    """

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: float

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        G = np.asarray(self.G, dtype=float)
        if G.ndim == 1:
            G = G.reshape(-1, 1)
        H = np.asarray(self.H, dtype=float).reshape(-1)
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        k = F.shape[0]
        if F.shape != (k, k):
            raise SpecificationError(f"F must be square, got {F.shape}")
        if G.shape[0] != k:
            raise SpecificationError(f"G has {G.shape[0]} rows, expected {k}")
        q = G.shape[1]
        if Q.shape != (q, q):
            raise SpecificationError(f"Q must be {q}x{q}, got {Q.shape}")
        if H.shape != (k,):
            raise SpecificationError(f"H must have length {k}, got {H.shape[0]}")
        if np.any(Q != np.diag(np.diag(Q))):
            raise SpecificationError("Q must be diagonal")
        if np.any(np.diag(Q) < 0):
            raise SpecificationError("Q entries must be nonnegative")
        R = float(self.R)
        if not R >= 0:
            raise SpecificationError(f"R must be >= 0, got {R}")
        for name, arr in (("F", F), ("G", G), ("H", H), ("Q", Q)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "R", R)

    @property
    def k(self) -> int:
        return self.F.shape[0]

    @property
    def GQG(self) -> np.ndarray:
        return self.G @ self.Q @ self.G.T


@dataclass(frozen=True)
class FilterInit:
    """Initial state mean and covariance (relative units)."""

    mean0: np.ndarray
    cov0: np.ndarray

    def __post_init__(self):
        mean0 = np.asarray(self.mean0, dtype=float).reshape(-1)
        cov0 = np.atleast_2d(np.asarray(self.cov0, dtype=float))
        k = mean0.shape[0]
        if cov0.shape != (k, k):
            raise SpecificationError(f"cov0 must be {k}x{k}, got {cov0.shape}")
        if not np.allclose(cov0, cov0.T, atol=SYM_TOL, rtol=0):
            raise SpecificationError("cov0 must be symmetric")
        object.__setattr__(self, "mean0", mean0)
        object.__setattr__(self, "cov0", cov0)


@dataclass
class FilterOutput:
    """Everything the forward pass produces.

    ``eps`` is NaN at missing observations; ``rvar`` is always populated.
    Steps ``n < start`` and missing steps are excluded from the scale and
    the likelihood.
    """

    pred_mean: np.ndarray
    pred_cov: np.ndarray
    filt_mean: np.ndarray
    filt_cov: np.ndarray
    eps: np.ndarray
    rvar: np.ndarray
    sigma2_hat: float
    N: int
    floored: List[int] = field(default_factory=list)
    start: int = 0

    @property
    def used(self) -> np.ndarray:
        """Boolean mask of steps that enter the likelihood."""
        mask = ~np.isnan(self.eps)
        mask[: self.start] = False
        return mask


@dataclass
class SmoothedStates:
    smooth_mean: np.ndarray
    smooth_cov: np.ndarray


def default_floor(y) -> float:
    """Positivity floor for r_n, proportional to the sample variance of y."""
    v = np.nanvar(np.asarray(y, dtype=float))
    if not np.isfinite(v) or v <= 0:
        v = 1.0
    return FLOOR_FACTOR * v


@numba.njit(cache=True)
def _filter_core(rows, cols, vals, gqg, h, R, y, mean0, cov0, floor, store):
    N = y.shape[0]
    k = mean0.shape[0]
    nz = rows.shape[0]
    ns = N if store else 1
    pm = np.zeros((ns, k))
    pc = np.zeros((ns, k, k))
    fm = np.zeros((ns, k))
    fc = np.zeros((ns, k, k))
    eps = np.empty(N)
    rvar = np.empty(N)
    flags = np.zeros(N, dtype=np.int8)

    x = mean0.copy()
    V = cov0.copy()
    xp = np.empty(k)
    FV = np.empty((k, k))
    P = np.empty((k, k))
    pv = np.empty(k)
    K = np.empty(k)
    for n in range(N):
        # predict
        xp[:] = 0.0
        FV[:, :] = 0.0
        P[:, :] = 0.0
        for t in range(nz):
            i = rows[t]
            j = cols[t]
            v = vals[t]
            xp[i] += v * x[j]
            for c in range(k):
                FV[i, c] += v * V[j, c]
        for t in range(nz):
            i = rows[t]
            j = cols[t]
            v = vals[t]
            for r in range(k):
                P[r, i] += v * FV[r, j]
        for r in range(k):
            for c in range(r, k):
                s = 0.5 * (P[r, c] + P[c, r]) + gqg[r, c]
                P[r, c] = s
                P[c, r] = s
        # innovation
        yhat = 0.0
        for i in range(k):
            yhat += h[i] * xp[i]
            s = 0.0
            for j in range(k):
                s += P[i, j] * h[j]
            pv[i] = s
        rn = R
        for i in range(k):
            rn += h[i] * pv[i]
        obs = not np.isnan(y[n])
        if obs and rn < floor:
            rn = floor
            flags[n] = 1
        rvar[n] = rn
        si = n if store else 0
        if store:
            pm[si] = xp
            pc[si] = P
        if not obs:
            eps[n] = np.nan
            x[:] = xp
            V[:, :] = P
        else:
            if not (rn > 0.0) or not np.isfinite(rn):
                flags[n] = 2
                eps[n] = np.nan
                return pm, pc, fm, fc, eps, rvar, flags
            e = y[n] - yhat
            eps[n] = e
            for i in range(k):
                K[i] = pv[i] / rn
                x[i] = xp[i] + K[i] * e
            if R == 0.0:
                # Joseph form: (I - K h) P (I - K h)^T, two rank-one steps
                hp = 0.0
                for i in range(k):
                    hp += h[i] * pv[i]
                for i in range(k):
                    for j in range(k):
                        FV[i, j] = P[i, j] - K[i] * pv[j]
                for i in range(k):
                    ah = pv[i] - K[i] * hp
                    for j in range(k):
                        V[i, j] = FV[i, j] - ah * K[j]
            else:
                for i in range(k):
                    for j in range(k):
                        V[i, j] = P[i, j] - pv[i] * pv[j] / rn
            for i in range(k):
                for j in range(i + 1, k):
                    s = 0.5 * (V[i, j] + V[j, i])
                    V[i, j] = s
                    V[j, i] = s
        if store:
            fm[si] = x
            fc[si] = V
    if not store:
        fm[0] = x
        fc[0] = V
    return pm, pc, fm, fc, eps, rvar, flags


def _sparse(F):
    rows, cols = np.nonzero(F)
    return rows.astype(np.int64), cols.astype(np.int64), F[rows, cols].copy()


def _check_init(model, init):
    if init.mean0.shape[0] != model.k:
        raise SpecificationError(
            f"initial state has dimension {init.mean0.shape[0]}, model has {model.k}"
        )


def _run(model, y, init, floor, store):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] < 1:
        raise UsageError("series must contain at least one value")
    _check_init(model, init)
    if floor is None:
        floor = default_floor(y)
    rows, cols, vals = _sparse(model.F)
    out = _filter_core(
        rows, cols, vals, np.ascontiguousarray(model.GQG), model.H.copy(),
        float(model.R), y, init.mean0.copy(), init.cov0.copy(), float(floor), store,
    )
    flags = out[-1]
    bad = np.flatnonzero(flags == 2)
    if bad.size:
        n = int(bad[0])
        raise NumericalDegeneracyError(
            f"innovation variance non-positive at step {n} after flooring", step=n
        )
    return y, out


def kalman_filter(
    model: StateSpaceModel,
    y: Sequence[float],
    init: FilterInit,
    *,
    floor: Optional[float] = None,
    start: int = 0,
) -> FilterOutput:
    """Run the Kalman filter over ``y``.

    Parameters
    ----------
    model : StateSpaceModel
    y : array_like, shape (N,)
        Observations; NaN marks a missing value (update skipped).
    init : FilterInit
        Prior for the state at time 0 (before the first observation).
    floor : float, optional
        Lower bound applied to r_n at observed steps. Defaults to
        ``1e-12 * var(y)``. Floored steps are listed in ``floored``.
    start : int
        Number of leading steps excluded from the likelihood.

    Returns
    -------
    FilterOutput
    """
    y, (pm, pc, fm, fc, eps, rvar, flags) = _run(model, y, init, floor, True)
    fo = FilterOutput(
        pred_mean=pm, pred_cov=pc, filt_mean=fm, filt_cov=fc, eps=eps,
        rvar=rvar, sigma2_hat=np.nan, N=y.shape[0],
        floored=[int(i) for i in np.flatnonzero(flags == 1)], start=int(start),
    )
    fo.sigma2_hat = concentrated_scale(fo)
    return fo


def innovations(model, y, init, *, floor=None):
    """Innovations and their variances only (no stored covariances).

    This is the fast path used inside the optimizer.

    Returns
    -------
    eps, rvar, floored, last_mean, last_cov
    """
    _, (pm, pc, fm, fc, eps, rvar, flags) = _run(model, y, init, floor, False)
    return eps, rvar, np.flatnonzero(flags == 1), fm[0], fc[0]


def _scale_terms(eps, rvar, used):
    e = eps[used]
    r = rvar[used]
    if np.any(~(r > 0)):
        raise NumericalDegeneracyError("innovation variance must be positive")
    return e, r


def concentrated_scale(fo: FilterOutput) -> float:
    """Profiled overall variance: mean of eps_n^2 / r_n over used steps."""
    e, r = _scale_terms(fo.eps, fo.rvar, fo.used)
    if e.size == 0:
        raise UsageError("no observations contribute to the likelihood")
    return float(np.mean(e * e / r))


def log_likelihood(fo: FilterOutput) -> float:
    """Concentrated Gaussian log-likelihood.

    ``-0.5 * (N log(2 pi s2) + sum log r_n + N)`` with ``s2`` the
    concentrated scale and N the number of contributing observations.
    """
    return _loglik(fo.eps, fo.rvar, fo.used, fo.sigma2_hat)


def _loglik(eps, rvar, used, s2=None):
    e, r = _scale_terms(eps, rvar, used)
    n = e.size
    if n == 0:
        raise UsageError("no observations contribute to the likelihood")
    if s2 is None:
        s2 = float(np.mean(e * e / r))
    if not s2 > 0:
        raise DegenerateFitError("concentrated scale is zero: the model interpolates y")
    return float(-0.5 * (n * np.log(2 * np.pi * s2) + np.sum(np.log(r)) + n))


def fixed_interval_smooth(model: StateSpaceModel, fo: FilterOutput) -> SmoothedStates:
    """Fixed-interval smoother over a stored filter run.

    Uses the backward information recursion

        u_{n-1} = H' eps_n / r_n + L_n' u_n,   U_{n-1} = H'H / r_n + L_n' U_n L_n
        x_{n|N} = x_{n|n-1} + V_{n|n-1} u_{n-1}
        V_{n|N} = V_{n|n-1} - V_{n|n-1} U_{n-1} V_{n|n-1}

    with ``L_n = F (I - K_n H)``. It gives the same estimates as the
    Rauch-Tung-Striebel form but never inverts V_{n+1|n}, so singular or
    nearly singular predicted covariances (zero-variance blocks, R = 0) are
    handled without a pseudo-inverse cutoff.
    """
    if fo is None or fo.pred_cov is None or fo.pred_mean.shape[0] != fo.N:
        raise UsageError("smoothing needs a stored filter run (kalman_filter output)")
    N, k = fo.pred_mean.shape
    F, h = model.F, model.H
    I = np.eye(k)
    xs = np.empty((N, k))
    Vs = np.empty((N, k, k))
    u = np.zeros(k)
    U = np.zeros((k, k))
    for n in range(N - 1, -1, -1):
        P = fo.pred_cov[n]
        if n < N - 1:
            u = F.T @ u
            U = F.T @ U @ F
        if not np.isnan(fo.eps[n]):
            rn = fo.rvar[n]
            K = P @ h / rn
            L = I - np.outer(K, h)
            u = h * (fo.eps[n] / rn) + L.T @ u
            U = np.outer(h, h) / rn + L.T @ U @ L
            U = 0.5 * (U + U.T)
        xs[n] = fo.pred_mean[n] + P @ u
        V = P - P @ U @ P
        Vs[n] = 0.5 * (V + V.T)
    Vs[-1] = fo.filt_cov[-1]
    return SmoothedStates(smooth_mean=xs, smooth_cov=Vs)


def forecast(
    model: StateSpaceModel,
    last_filtered: Tuple[np.ndarray, np.ndarray],
    horizon: int,
    sigma2_hat: float,
) -> List[Tuple[float, float]]:
    """Predict ``horizon`` steps ahead from the last filtered state.

    Returns a list of ``(mean, variance)`` pairs in data units; the
    variance is ``sigma2_hat * (R + H V H')``.
    """
    if int(horizon) < 1:
        raise UsageError("horizon must be a positive integer")
    mean = np.asarray(last_filtered[0], dtype=float).reshape(-1)
    cov = np.asarray(last_filtered[1], dtype=float)
    # predict-only steps are filter steps with missing observations
    init = FilterInit(mean, 0.5 * (cov + cov.T))
    y = np.full(int(horizon), np.nan)
    _, (pm, pc, *_) = _run(model, y, init, 0.0, True)
    H = model.H
    return [(float(H @ pm[h]), float(sigma2_hat * (model.R + H @ pc[h] @ H)))
            for h in range(int(horizon))]
