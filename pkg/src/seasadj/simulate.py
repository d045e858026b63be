"""Simulation of Decomp series with known components."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ComponentSeries, DecompSpec, block_slices, build_state_space

__all__ = ["SimulatedSeries", "simulate", "synthetic_fixture", "FIXTURE_SPEC"]


@dataclass
class SimulatedSeries:
    y: np.ndarray
    components: ComponentSeries
    states: np.ndarray
    spec: DecompSpec
    variances: np.ndarray
    ar_coeffs: np.ndarray
    obs_var: float


def simulate(spec: DecompSpec, variances, ar_coeffs, N: int, *, obs_var: float = 1.0,
             level: float = 100.0, slope: float = 0.0, season=None,
             seed: int = 0) -> SimulatedSeries:
    """Draw a series from the state-space form of ``spec``.

    ``variances`` are absolute system-noise variances; ``obs_var`` is the
    observation-noise variance (ignored for noise-free specs). The trend
    starts at ``level`` with increment ``slope``; ``season`` optionally fixes
    the first ``period - 1`` seasonal states. The AR block starts at zero
    and is burned in for 200 steps.
    """
    rng = np.random.default_rng(seed)
    model = build_state_space(spec, variances, ar_coeffs)
    k = model.k
    t, s, a = block_slices(spec)
    x = np.zeros(k)
    if spec.m1:
        x[t] = level - slope * np.arange(spec.m1)
    if spec.m2:
        x[s] = season if season is not None else rng.normal(size=s.stop - s.start)
    sd = np.sqrt(np.diag(model.Q))
    if spec.m3:
        Fa = model.F[a, a]
        xa = np.zeros(spec.m3)
        for _ in range(200):
            xa = Fa @ xa
            xa[0] += sd[-1] * rng.normal()
        x[a] = xa
    R = obs_var if spec.noise_mode == "with_noise" else 0.0
    X = np.empty((N, k))
    y = np.empty(N)
    for n in range(N):
        x = model.F @ x + model.G @ (sd * rng.normal(size=sd.size))
        X[n] = x
        y[n] = model.H @ x + np.sqrt(R) * rng.normal()
    lead = [X[:, sl.start] if sl.stop > sl.start else np.zeros(N) for sl in (t, s, a)]
    noise = y - lead[0] - lead[1] - lead[2]
    return SimulatedSeries(y, ComponentSeries(*lead, noise), X, spec,
                           np.asarray(variances, float), np.asarray(ar_coeffs, float), R)


FIXTURE_SPEC = DecompSpec(m1=2, m2=1, period=12, m3=2)
FIXTURE_SEASON = np.array([8.0, 5.0, 1.0, -3.0, -6.0, -7.0, -5.0, -2.0, 1.0, 4.0, 6.0])


def synthetic_fixture(N: int = 300, seed: int = 20240601) -> SimulatedSeries:
    """Monthly series from a known (m1=2, m2=1, m3=2) model.

    Trend variance 0.01, seasonal variance 0.05, AR(2) with
    a = (0.9, -0.3) and innovation variance 1, observation variance 0.25.
    """
    return simulate(FIXTURE_SPEC, [0.01, 0.05, 1.0], [0.9, -0.3], N, obs_var=0.25,
                    level=100.0, slope=0.2, season=FIXTURE_SEASON, seed=seed)
