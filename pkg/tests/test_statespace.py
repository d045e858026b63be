import numpy as np
import pytest

from oracles import dense_profile_loglik, dense_smoothed_means, random_model
from seasadj.exceptions import (
    DegenerateFitError,
    NumericalDegeneracyError,
    SpecificationError,
    UsageError,
)
from seasadj.statespace import (
    FilterInit,
    FilterOutput,
    StateSpaceModel,
    concentrated_scale,
    fixed_interval_smooth,
    forecast,
    kalman_filter,
    log_likelihood,
)


def local_level(q=1.0, R=1.0):
    return StateSpaceModel(F=[[1.0]], G=[[1.0]], H=[1.0], Q=[[q]], R=R)


def _fo(eps, rvar):
    eps, rvar = np.asarray(eps, float), np.asarray(rvar, float)
    n = eps.size
    fo = FilterOutput(None, None, None, None, eps, rvar, np.nan, n)
    fo.sigma2_hat = concentrated_scale(fo)
    return fo


class TestFilterExamples:
    def test_zero_variance_state_pins_prediction(self):
        model = local_level(q=0.0, R=1.0)
        fo = kalman_filter(model, [3.0, 4.0], FilterInit([0.0], [[0.0]]))
        np.testing.assert_array_equal(fo.pred_mean[:, 0], [0.0, 0.0])
        np.testing.assert_array_equal(fo.eps, [3.0, 4.0])
        np.testing.assert_array_equal(fo.rvar, [1.0, 1.0])
        np.testing.assert_array_equal(fo.filt_mean[:, 0], [0.0, 0.0])

    def test_one_step_local_level(self):
        fo = kalman_filter(local_level(), [1.0], FilterInit([0.0], [[1.0]]))
        assert fo.rvar[0] == pytest.approx(3.0)
        assert fo.eps[0] == pytest.approx(1.0)
        assert fo.filt_mean[0, 0] == pytest.approx(2.0 / 3.0)

    def test_dimension_mismatch(self):
        with pytest.raises(SpecificationError):
            StateSpaceModel(F=np.eye(2), G=np.ones((3, 1)), H=[1, 0], Q=[[1]], R=1)
        with pytest.raises(SpecificationError):
            kalman_filter(local_level(), [1.0], FilterInit([0.0, 0.0], np.eye(2)))

    def test_negative_variances_rejected(self):
        with pytest.raises(SpecificationError):
            local_level(q=-1.0)
        with pytest.raises(SpecificationError):
            local_level(R=-0.1)

    def test_degenerate_innovation_reports_step(self):
        # H V H' = 0 and R = 0 with a zero floor
        model = StateSpaceModel(F=[[1.0]], G=[[1.0]], H=[1.0], Q=[[0.0]], R=0.0)
        with pytest.raises(NumericalDegeneracyError) as info:
            kalman_filter(model, [1.0, 2.0], FilterInit([0.0], [[0.0]]), floor=0.0)
        assert info.value.step == 0

    def test_floor_flags_step(self):
        model = StateSpaceModel(F=[[1.0]], G=[[1.0]], H=[1.0], Q=[[0.0]], R=0.0)
        fo = kalman_filter(model, [1.0, 2.0, 4.0], FilterInit([0.0], [[1.0]]))
        # after the first update the state is known exactly
        assert fo.floored == [1, 2]
        assert np.all(fo.rvar > 0)


class TestScaleAndLikelihood:
    def test_scale_arithmetic(self):
        assert concentrated_scale(_fo([1, 2], [1, 1])) == pytest.approx(2.5)
        assert concentrated_scale(_fo([0, 0], [1, 3])) == 0.0
        assert concentrated_scale(_fo([1, 1], [1, 4])) == pytest.approx(0.625)

    def test_scale_rejects_nonpositive_rvar(self):
        fo = FilterOutput(None, None, None, None, np.array([1.0]), np.array([0.0]), 1.0, 1)
        with pytest.raises(NumericalDegeneracyError):
            concentrated_scale(fo)

    def test_loglik_closed_forms(self):
        fo = _fo([1.0, 1.0], [1.0, 1.0])
        assert fo.sigma2_hat == 1.0
        assert log_likelihood(fo) == pytest.approx(-(np.log(2 * np.pi) + 1), abs=1e-12)
        assert log_likelihood(fo) == pytest.approx(-2.837877, abs=1e-6)
        fo = _fo([np.sqrt(np.e)], [np.e])
        assert fo.sigma2_hat == pytest.approx(1.0)
        assert log_likelihood(fo) == pytest.approx(-0.5 * (np.log(2 * np.pi) + 2), abs=1e-12)

    def test_zero_scale_is_degenerate(self):
        with pytest.raises(DegenerateFitError):
            log_likelihood(_fo([0.0, 0.0], [1.0, 1.0]))

    def test_missing_values_skip_update_and_likelihood(self):
        model = local_level(q=0.5)
        init = FilterInit([0.0], [[2.0]])
        y = np.array([1.0, np.nan, 2.5, 0.3])
        fo = kalman_filter(model, y, init)
        np.testing.assert_array_equal(fo.filt_mean[1], fo.pred_mean[1])
        np.testing.assert_array_equal(fo.filt_cov[1], fo.pred_cov[1])
        assert np.isnan(fo.eps[1])
        assert fo.used.sum() == 3
        assert log_likelihood(fo) == pytest.approx(dense_profile_loglik(model, init, y), abs=1e-10)

    def test_burn_in_excludes_leading_steps(self):
        model = local_level(q=0.5)
        init = FilterInit([0.0], [[2.0]])
        y = np.array([1.0, 1.5, 2.5, 0.3, 0.9])
        fo = kalman_filter(model, y, init, start=2)
        e, r = fo.eps[2:], fo.rvar[2:]
        s2 = np.mean(e ** 2 / r)
        assert fo.sigma2_hat == pytest.approx(s2)
        expect = -0.5 * (3 * np.log(2 * np.pi * s2) + np.sum(np.log(r)) + 3)
        assert log_likelihood(fo) == pytest.approx(expect)


@pytest.mark.parametrize("seed", range(15))
def test_filter_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    model, init = random_model(rng)
    N = int(rng.integers(1, 21))
    y = rng.normal(size=N) * 2
    fo = kalman_filter(model, y, init, floor=0.0)
    assert log_likelihood(fo) == pytest.approx(dense_profile_loglik(model, init, y), abs=1e-8)


@pytest.mark.parametrize("seed", range(15))
def test_smoother_matches_dense_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    model, init = random_model(rng)
    N = int(rng.integers(1, 21))
    y = rng.normal(size=N)
    fo = kalman_filter(model, y, init, floor=0.0)
    sm = fixed_interval_smooth(model, fo)
    np.testing.assert_allclose(sm.smooth_mean, dense_smoothed_means(model, init, y),
                               atol=1e-7, rtol=0)


@pytest.mark.parametrize("seed", range(10))
def test_covariance_properties(seed):
    rng = np.random.default_rng(200 + seed)
    model, init = random_model(rng)
    y = rng.normal(size=25)
    fo = kalman_filter(model, y, init, floor=0.0)
    sm = fixed_interval_smooth(model, fo)
    np.testing.assert_array_equal(sm.smooth_cov[-1], fo.filt_cov[-1])
    for stack in (fo.pred_cov, fo.filt_cov, sm.smooth_cov):
        for V in stack:
            assert np.max(np.abs(V - V.T)) <= 1e-9
            assert np.min(np.linalg.eigvalsh(V)) >= -1e-9 * max(1.0, np.abs(V).max())
    for Vf, Vs in zip(fo.filt_cov, sm.smooth_cov):
        assert np.min(np.linalg.eigvalsh(Vf - Vs)) >= -1e-9 * max(1.0, np.abs(Vf).max())


class TestSmoother:
    def test_constant_state(self):
        model = local_level(q=0.0, R=1.0)
        fo = kalman_filter(model, [1.0, 3.0, 2.0, 5.0], FilterInit([0.0], [[10.0]]))
        sm = fixed_interval_smooth(model, fo)
        np.testing.assert_allclose(sm.smooth_mean[:, 0], fo.filt_mean[-1, 0], rtol=1e-12)

    def test_single_step(self):
        model = local_level()
        fo = kalman_filter(model, [1.0], FilterInit([0.0], [[1.0]]))
        sm = fixed_interval_smooth(model, fo)
        np.testing.assert_array_equal(sm.smooth_mean[0], fo.filt_mean[0])

    def test_needs_stored_run(self):
        with pytest.raises(UsageError):
            fixed_interval_smooth(local_level(), None)


class TestForecast:
    def test_deterministic_level(self):
        model = local_level(q=0.0)
        out = forecast(model, (np.array([2.5]), np.array([[0.3]])), 5, 2.0)
        assert all(m == 2.5 for m, _ in out)
        assert all(v == pytest.approx(2.0 * 1.3) for _, v in out)

    def test_random_walk_variance_grows_affinely(self):
        q, c, s2 = 0.7, 0.2, 1.5
        model = local_level(q=q, R=0.0)
        out = forecast(model, (np.array([1.0]), np.array([[c]])), 6, s2)
        for h, (_, v) in enumerate(out, start=1):
            assert v == pytest.approx(s2 * (c + h * q))

    def test_seasonal_forecast_is_periodic(self):
        p = 4
        F = np.zeros((p - 1, p - 1))
        F[0] = -1.0
        F[1:, :-1] = np.eye(p - 2)
        H = np.eye(p - 1)[0]
        model = StateSpaceModel(F, H.reshape(-1, 1), H, [[0.0]], 1.0)
        out = forecast(model, (np.array([1.0, -2.0, 0.5]), np.zeros((3, 3))), 12, 1.0)
        means = np.array([m for m, _ in out])
        np.testing.assert_allclose(means[p:], means[:-p], atol=1e-12)
        assert means[:p].sum() == pytest.approx(0.0, abs=1e-12)

    def test_one_step_equals_filter_prediction(self):
        rng = np.random.default_rng(7)
        model, init = random_model(rng, k=4)
        y = rng.normal(size=12)
        fo = kalman_filter(model, np.r_[y, np.nan], init, floor=0.0)
        fo_short = kalman_filter(model, y, init, floor=0.0)
        (m, v), = forecast(model, (fo_short.filt_mean[-1], fo_short.filt_cov[-1]), 1, 1.0)
        assert m == model.H @ fo.pred_mean[-1]
        assert v == pytest.approx(model.R + model.H @ fo.pred_cov[-1] @ model.H, rel=1e-12)

    def test_zero_horizon(self):
        with pytest.raises(UsageError):
            forecast(local_level(), (np.zeros(1), np.eye(1)), 0, 1.0)
