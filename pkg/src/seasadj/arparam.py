"""
AR parameterizations.

Sign convention throughout: the AR model is ``p_n = sum_j a_j p_{n-j} + v_n``
with characteristic polynomial ``lambda^m - sum_j a_j lambda^{m-j}``.

Two constrained maps take an unconstrained optimizer vector to a
stationary coefficient vector:

* PARCOR type (``ar_type=1``): ``b_j = cap * tanh(u_j)`` then Levinson
  step-up.
* Root type (``ar_type=2``): each real root and each complex pair's
  modulus and argument are squeezed into a box by a logistic map, then
  the polynomial is expanded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from .exceptions import ConstraintViolationError, SpecificationError, UsageError

__all__ = [
    "RootBounds",
    "RootSet",
    "default_root_bounds",
    "roots_to_coeffs",
    "coeffs_to_roots",
    "roots_to_rootset",
    "parcor_to_coeffs",
    "coeffs_to_parcor",
    "is_stationary",
    "transform_ar",
    "ar_parcor",
    "n_ar_params",
]

STATIONARY_MARGIN = 1e-12
REAL_TOL = 1e-9
# beyond these the squashing functions round to their limits
_TANH_CLIP = 15.0
_LOGIT_CLIP = 30.0


@dataclass(frozen=True)
class RootBounds:
    """Box on characteristic-root modulus and argument.

    Real roots lie in ``(r_min, r_max)``, or ``(-r_max, r_max)`` when
    ``negative_real`` is set. Complex pairs have modulus in
    ``(r_min, r_max)`` and argument in ``(theta_min, theta_max)``.
    """

    m_r: int
    m_i: int
    r_min: float
    r_max: float
    theta_min: float
    theta_max: float
    negative_real: bool = False

    def __post_init__(self):
        if self.m_r < 0 or self.m_i < 0:
            raise SpecificationError("root counts must be nonnegative")
        if not 0 <= self.r_min < self.r_max < 1:
            raise SpecificationError(
                f"need 0 <= r_min < r_max < 1, got ({self.r_min}, {self.r_max})"
            )
        if not 0 < self.theta_min < self.theta_max <= np.pi:
            raise SpecificationError(
                f"need 0 < theta_min < theta_max <= pi, got "
                f"({self.theta_min}, {self.theta_max})"
            )

    @property
    def m3(self) -> int:
        return self.m_r + 2 * self.m_i

    @property
    def real_interval(self) -> Tuple[float, float]:
        if self.negative_real:
            return -self.r_max, self.r_max
        return self.r_min, self.r_max

    def with_orders(self, m_r: int, m_i: int) -> "RootBounds":
        return RootBounds(m_r, m_i, self.r_min, self.r_max, self.theta_min,
                          self.theta_max, self.negative_real)


def default_root_bounds(m_r: int, m_i: int, period: int) -> RootBounds:
    """Documented defaults: r in (0, 0.98), theta in (2 pi / (10 period), pi)."""
    return RootBounds(m_r, m_i, 0.0, 0.98, 2 * np.pi / (10 * period), np.pi)


@dataclass(frozen=True)
class RootSet:
    """Real roots and complex pairs, pairs sorted by (theta, r)."""

    real_roots: np.ndarray = field(default_factory=lambda: np.empty(0))
    moduli: np.ndarray = field(default_factory=lambda: np.empty(0))
    arguments: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        s = np.asarray(self.real_roots, dtype=float).reshape(-1)
        r = np.asarray(self.moduli, dtype=float).reshape(-1)
        th = np.asarray(self.arguments, dtype=float).reshape(-1)
        if r.shape != th.shape:
            raise SpecificationError("moduli and arguments must have equal length")
        order = np.lexsort((r, th))
        object.__setattr__(self, "real_roots", np.sort(s))
        object.__setattr__(self, "moduli", r[order])
        object.__setattr__(self, "arguments", th[order])

    @property
    def m3(self) -> int:
        return self.real_roots.size + 2 * self.moduli.size

    def complex_roots(self) -> np.ndarray:
        """All m3 roots in canonical order (see ``coeffs_to_roots``)."""
        pairs = self.moduli * np.exp(1j * self.arguments)
        both = np.concatenate([self.real_roots.astype(complex), pairs, pairs.conj()])
        return _canonical(both)

    def within(self, bounds: RootBounds) -> bool:
        lo, hi = bounds.real_interval
        return bool(
            np.all((self.real_roots > lo) & (self.real_roots < hi))
            and np.all((self.moduli > bounds.r_min) & (self.moduli < bounds.r_max))
            and np.all((self.arguments > bounds.theta_min)
                       & (self.arguments < bounds.theta_max))
        )


def _canonical(z: np.ndarray) -> np.ndarray:
    # ascending |arg|, then modulus; upper member of a pair first
    z = np.asarray(z, dtype=complex)
    order = np.lexsort((-z.imag, np.round(np.abs(z), 12), np.round(np.abs(np.angle(z)), 12)))
    return z[order]


def roots_to_coeffs(rs: RootSet) -> np.ndarray:
    """Expand the characteristic polynomial and return ``a_1..a_m``."""
    poly = np.array([1.0])
    for s in rs.real_roots:
        poly = np.convolve(poly, [1.0, -s])
    for r, th in zip(rs.moduli, rs.arguments):
        poly = np.convolve(poly, [1.0, -2.0 * r * np.cos(th), r * r])
    return -poly[1:]


def _companion(a: np.ndarray) -> np.ndarray:
    m = a.size
    C = np.zeros((m, m))
    C[0] = a
    C[1:, :-1] = np.eye(m - 1)
    return C


def coeffs_to_roots(a) -> np.ndarray:
    """Characteristic roots as companion-matrix eigenvalues.

    Conjugate pairs are adjacent (upper half-plane member first); the order
    is ascending absolute argument, then ascending modulus. Imaginary parts
    below 1e-9 relative are zeroed.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size == 0:
        return np.empty(0, dtype=complex)
    z = np.linalg.eigvals(_companion(a)).astype(complex)
    small = np.abs(z.imag) <= REAL_TOL * np.maximum(1.0, np.abs(z))
    z[small] = z[small].real
    return _canonical(z)


def roots_to_rootset(z) -> RootSet:
    """Split a conjugate-closed root array into a RootSet."""
    z = np.asarray(z, dtype=complex)
    real = np.abs(z.imag) <= REAL_TOL * np.maximum(1.0, np.abs(z))
    upper = (~real) & (z.imag > 0)
    if 2 * upper.sum() != (~real).sum():
        raise UsageError("complex roots are not closed under conjugation")
    return RootSet(z[real].real, np.abs(z[upper]), np.angle(z[upper]))


def parcor_to_coeffs(b) -> np.ndarray:
    """Levinson step-up from PARCORs to AR coefficients."""
    b = np.asarray(b, dtype=float).reshape(-1)
    if np.any(np.abs(b) >= 1):
        raise ConstraintViolationError(f"PARCORs must satisfy |b| < 1, got {b}")
    a = np.empty(0)
    for bm in b:
        a = np.concatenate([a - bm * a[::-1], [bm]])
    return a


def coeffs_to_parcor(a) -> np.ndarray:
    """Levinson step-down from AR coefficients to PARCORs.

    Raises
    ------
    ConstraintViolationError
        If some PARCOR reaches modulus 1, i.e. ``a`` is not stationary.
    """
    a = np.asarray(a, dtype=float).reshape(-1).copy()
    m = a.size
    b = np.empty(m)
    for order in range(m, 0, -1):
        bm = a[order - 1]
        if abs(bm) >= 1:
            raise ConstraintViolationError(
                f"coefficients are not stationary (PARCOR {order} = {bm:.6g})"
            )
        b[order - 1] = bm
        prev = a[: order - 1]
        a = (prev + bm * prev[::-1]) / (1 - bm * bm)
    return b


def is_stationary(a) -> bool:
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size == 0:
        return True
    if not np.all(np.isfinite(a)):
        return False
    return bool(np.max(np.abs(coeffs_to_roots(a))) < 1 - STATIONARY_MARGIN)


def n_ar_params(spec) -> int:
    """Length of the unconstrained AR block for a spec."""
    if spec.m3 == 0:
        return 0
    if spec.ar_type == 1:
        return spec.m3
    return spec.bounds.m_r + 2 * spec.bounds.m_i


def _squash(u, lo, hi):
    return lo + (hi - lo) * expit(np.clip(u, -_LOGIT_CLIP, _LOGIT_CLIP))


def transform_ar(u, spec) -> Tuple[np.ndarray, Optional[RootSet]]:
    """Map an unconstrained vector to stationary AR coefficients.

    Parameters
    ----------
    u : array_like
        ``m3`` entries for ``ar_type=1``; for ``ar_type=2`` the ``m_r``
        real-root entries followed by ``(modulus, argument)`` entries for
        each complex pair.
    spec : DecompSpec

    Returns
    -------
    a : ndarray
        AR coefficients.
    roots : RootSet or None
        The root set (``ar_type=2`` only).
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    need = n_ar_params(spec)
    if u.size != need:
        raise UsageError(f"expected {need} AR entries, got {u.size}")
    if need == 0:
        return np.empty(0), None
    if spec.ar_type == 1:
        return parcor_to_coeffs(ar_parcor(u, spec)), None
    bd = spec.bounds
    lo, hi = bd.real_interval
    s = _squash(u[: bd.m_r], lo, hi)
    pair = u[bd.m_r:].reshape(-1, 2)
    r = _squash(pair[:, 0], bd.r_min, bd.r_max)
    th = _squash(pair[:, 1], bd.theta_min, bd.theta_max)
    rs = RootSet(s, r, th)
    return roots_to_coeffs(rs), rs


def ar_parcor(u, spec) -> np.ndarray:
    """PARCORs of the model encoded by ``u``.

    For ``ar_type=1`` these are the capped values the transform feeds to
    the step-up recursion, so ``|b| <= parcor_cap`` holds exactly. A
    step-down from the coefficients would add rounding error that grows
    like ``prod 1 / (1 - b**2)``.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if spec.ar_type == 1:
        if u.size != n_ar_params(spec):
            raise UsageError(f"expected {n_ar_params(spec)} AR entries, got {u.size}")
        return spec.parcor_cap * np.tanh(np.clip(u, -_TANH_CLIP, _TANH_CLIP))
    return coeffs_to_parcor(transform_ar(u, spec)[0])
