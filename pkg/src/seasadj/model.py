"""
Seasonal-adjustment model assembly.

The observation is ``y_n = T_n + S_n + p_n + w_n`` with a stochastic trend
of order ``m1``, a dummy-seasonal component of order ``m2`` and period
``period``, and a stationary AR(``m3``) component. State blocks are always
ordered (trend, seasonal, AR).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import comb

from .arparam import RootBounds, is_stationary
from .exceptions import ConstraintViolationError, SpecificationError, UsageError
from .statespace import FilterInit, SmoothedStates, StateSpaceModel

__all__ = [
    "DecompSpec",
    "ComponentSeries",
    "state_dimension",
    "n_variances",
    "build_state_space",
    "extract_components",
    "default_init",
    "block_slices",
]

NOISE_MODES = ("with_noise", "noise_free")
PENALTIES = ("none", "L1", "L2")


@dataclass(frozen=True)
class DecompSpec:
    """Model orders and estimation settings.

    Parameters
    ----------
    m1 : int
        Trend difference order, 0..3.
    m2 : int
        Seasonal order, 0 or 1.
    period : int
        Seasonal period (12 for monthly data).
    m3 : int
        AR order. For ``ar_type=2`` it must equal ``bounds.m3``.
    noise_mode : {"with_noise", "noise_free"}
    ar_type : {1, 2}
        1 = PARCOR-capped, 2 = root-box constrained.
    bounds : RootBounds, optional
        Required when ``ar_type=2`` and ``m3 > 0``.
    parcor_cap : float
        Upper bound on |PARCOR| for ``ar_type=1``.
    penalty : {"none", "L1", "L2"}
    lam : float
        Penalty weight.
    """

    m1: int = 2
    m2: int = 1
    period: int = 12
    m3: int = 0
    noise_mode: str = "with_noise"
    ar_type: int = 1
    bounds: Optional[RootBounds] = None
    parcor_cap: float = 0.9
    penalty: str = "none"
    lam: float = 0.0

    def __post_init__(self):
        for name in ("m1", "m2", "period", "m3", "ar_type"):
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "parcor_cap", float(self.parcor_cap))
        if not 0 <= self.m1 <= 3:
            raise SpecificationError(f"m1 must be in 0..3, got {self.m1}")
        if self.m2 not in (0, 1):
            raise SpecificationError(f"m2 must be 0 or 1, got {self.m2}")
        if self.m2 == 1 and self.period < 2:
            raise SpecificationError(f"seasonal period must be >= 2, got {self.period}")
        if self.m3 < 0:
            raise SpecificationError(f"m3 must be >= 0, got {self.m3}")
        if self.m1 + self.m2 * (self.period - 1) + self.m3 == 0:
            raise SpecificationError("model has an empty state")
        if self.noise_mode not in NOISE_MODES:
            raise SpecificationError(f"noise_mode must be one of {NOISE_MODES}")
        if self.ar_type not in (1, 2):
            raise SpecificationError(f"ar_type must be 1 or 2, got {self.ar_type}")
        if self.ar_type == 2 and self.m3 > 0:
            if self.bounds is None:
                raise SpecificationError("ar_type=2 requires root bounds")
            if self.bounds.m3 != self.m3:
                raise SpecificationError(
                    f"m3={self.m3} but bounds declare m_r + 2 m_i = {self.bounds.m3}"
                )
        if not 0 < self.parcor_cap <= 1:
            raise SpecificationError(f"parcor_cap must be in (0, 1], got {self.parcor_cap}")
        if self.penalty not in PENALTIES:
            raise SpecificationError(f"penalty must be one of {PENALTIES}")
        if not self.lam >= 0:
            raise SpecificationError(f"lambda must be >= 0, got {self.lam}")

    def replace(self, **changes) -> "DecompSpec":
        return replace(self, **changes)

    @property
    def active(self):
        """Indicator of (trend, seasonal, AR) being present."""
        return (self.m1 > 0, self.m2 > 0, self.m3 > 0)


@dataclass
class ComponentSeries:
    trend: np.ndarray
    seasonal: np.ndarray
    ar: np.ndarray
    noise: np.ndarray


def state_dimension(spec: DecompSpec) -> int:
    k = spec.m1 + spec.m2 * (spec.period - 1) + spec.m3
    if k == 0:
        raise SpecificationError("model has an empty state")
    return k


def n_variances(spec: DecompSpec) -> int:
    """Number of system-noise variances (one per active component)."""
    return int(sum(spec.active))


def block_slices(spec: DecompSpec):
    """State-index slices of the (trend, seasonal, AR) blocks."""
    ks = spec.m2 * (spec.period - 1)
    t = slice(0, spec.m1)
    s = slice(spec.m1, spec.m1 + ks)
    a = slice(spec.m1 + ks, spec.m1 + ks + spec.m3)
    return t, s, a


def _companion(first_row):
    m = len(first_row)
    C = np.zeros((m, m))
    C[0] = first_row
    C[1:, :-1] = np.eye(m - 1)
    return C


def _trend_row(m1):
    # (1 - B)^m1 T_n = v_n  =>  T_n = sum_j c_j T_{n-j}
    return [(-1) ** (j + 1) * comb(m1, j, exact=True) for j in range(1, m1 + 1)]


def build_state_space(spec: DecompSpec, variances, ar_coeffs) -> StateSpaceModel:
    """Block-diagonal state-space form of a Decomp model.

    Parameters
    ----------
    spec : DecompSpec
    variances : array_like
        One system-noise variance per active component, in
        (trend, seasonal, AR) order, relative to the overall scale.
    ar_coeffs : array_like
        ``m3`` stationary AR coefficients.

    Returns
    -------
    StateSpaceModel
        With ``R = 1`` (with_noise) or ``R = 0`` (noise_free).
    """
    k = state_dimension(spec)
    variances = np.asarray(variances, dtype=float).reshape(-1)
    ar_coeffs = np.asarray(ar_coeffs, dtype=float).reshape(-1)
    nv = n_variances(spec)
    if variances.size != nv:
        raise SpecificationError(f"expected {nv} variances, got {variances.size}")
    if ar_coeffs.size != spec.m3:
        raise SpecificationError(f"expected {spec.m3} AR coefficients, got {ar_coeffs.size}")
    if spec.m3 and not is_stationary(ar_coeffs):
        raise ConstraintViolationError(f"AR coefficients {ar_coeffs} are not stationary")

    F = np.zeros((k, k))
    G = np.zeros((k, nv))
    H = np.zeros(k)
    rows = [spec.m1 and _trend_row(spec.m1),
            spec.m2 and [-1.0] * (spec.period - 1),
            spec.m3 and list(ar_coeffs)]
    col = 0
    for sl, row in zip(block_slices(spec), rows):
        if sl.stop == sl.start:
            continue
        F[sl, sl] = _companion(row)
        G[sl.start, col] = 1.0
        H[sl.start] = 1.0
        col += 1
    R = 1.0 if spec.noise_mode == "with_noise" else 0.0
    return StateSpaceModel(F=F, G=G, H=H, Q=np.diag(variances), R=R)


def default_init(spec: DecompSpec, y, *, scale: float = 1e4, ar_cov=None) -> FilterInit:
    """Default filter prior.

    The first observed value is placed in every trend-state entry and the
    covariance is ``diag(scale * var(y))``. If ``ar_cov`` is given it
    replaces the AR block of the covariance (and the AR mean stays 0).
    """
    y = np.asarray(y, dtype=float)
    k = state_dimension(spec)
    obs = y[~np.isnan(y)]
    if obs.size == 0:
        raise UsageError("series has no observed values")
    v = float(np.var(obs))
    if v <= 0:
        v = 1.0
    mean0 = np.zeros(k)
    t, _, a = block_slices(spec)
    mean0[t] = obs[0]
    cov0 = np.eye(k) * scale * v
    if ar_cov is not None and spec.m3:
        cov0[a, a] = ar_cov
    return FilterInit(mean0, cov0)


def extract_components(spec: DecompSpec, sm: SmoothedStates, y) -> ComponentSeries:
    """Read trend, seasonal and AR series off the smoothed states.

    Noise is the residual ``y - trend - seasonal - ar`` (NaN where y is
    missing), so the four components add up to y by construction.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    X = np.asarray(sm.smooth_mean)
    k = state_dimension(spec)
    if X.ndim != 2 or X.shape != (y.size, k):
        raise UsageError(f"smoothed states have shape {X.shape}, expected ({y.size}, {k})")
    out = []
    for sl in block_slices(spec):
        out.append(X[:, sl.start].copy() if sl.stop > sl.start else np.zeros(y.size))
    trend, seasonal, ar = out
    noise = y - trend - seasonal - ar
    return ComponentSeries(trend, seasonal, ar, noise)
