import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import poly_from_roots
from seasadj.arparam import (
    RootBounds,
    RootSet,
    ar_parcor,
    coeffs_to_parcor,
    coeffs_to_roots,
    default_root_bounds,
    is_stationary,
    parcor_to_coeffs,
    roots_to_coeffs,
    roots_to_rootset,
    transform_ar,
)
from seasadj.exceptions import ConstraintViolationError, SpecificationError, UsageError
from seasadj.model import DecompSpec


def random_rootset(rng, max_m3=8, rmax=0.99):
    m_i = int(rng.integers(0, max_m3 // 2 + 1))
    m_r = int(rng.integers(0 if m_i else 1, max_m3 - 2 * m_i + 1))
    return RootSet(rng.uniform(-rmax, rmax, m_r), rng.uniform(0.05, rmax, m_i),
                   rng.uniform(0.05, np.pi - 0.05, m_i))


class TestRootsToCoeffs:
    def test_single_real_root(self):
        np.testing.assert_allclose(roots_to_coeffs(RootSet([0.5])), [0.5])

    def test_unit_pair_at_quarter_turn(self):
        np.testing.assert_allclose(roots_to_coeffs(RootSet([], [1.0], [np.pi / 2])),
                                   [0.0, -1.0], atol=1e-15)

    def test_two_real_roots(self):
        # (l - 0.5)(l + 0.3) = l^2 - 0.2 l - 0.15
        expect = -poly_from_roots([0.5, -0.3])[1:].real
        np.testing.assert_allclose(expect, [0.2, 0.15])
        np.testing.assert_allclose(roots_to_coeffs(RootSet([0.5, -0.3])), expect, atol=1e-15)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_complex_product_oracle(self, seed):
        rs = random_rootset(np.random.default_rng(seed))
        expect = -poly_from_roots(rs.complex_roots())[1:]
        assert np.max(np.abs(expect.imag)) < 1e-12
        np.testing.assert_allclose(roots_to_coeffs(rs), expect.real, atol=1e-12)


class TestCoeffsToRoots:
    def test_simple(self):
        np.testing.assert_allclose(coeffs_to_roots([0.5]), [0.5])
        z = coeffs_to_roots([0.0, -1.0])
        np.testing.assert_allclose(np.abs(z), [1.0, 1.0])
        np.testing.assert_allclose(np.angle(z), [np.pi / 2, -np.pi / 2])

    def test_empty(self):
        assert coeffs_to_roots([]).size == 0

    def test_pairs_adjacent(self):
        rs = RootSet([0.4], [0.8, 0.6], [2.0, 0.7])
        z = coeffs_to_roots(roots_to_coeffs(rs))
        np.testing.assert_allclose(z, rs.complex_roots(), atol=1e-10)
        assert z[1] == np.conj(z[2]) and z[3] == np.conj(z[4])

    @pytest.mark.parametrize("seed", range(30))
    def test_round_trip(self, seed):
        rs = random_rootset(np.random.default_rng(1000 + seed))
        back = roots_to_rootset(coeffs_to_roots(roots_to_coeffs(rs)))
        np.testing.assert_allclose(back.real_roots, rs.real_roots, atol=1e-9)
        np.testing.assert_allclose(back.moduli, rs.moduli, atol=1e-9)
        np.testing.assert_allclose(back.arguments, rs.arguments, atol=1e-9)


class TestParcor:
    def test_order_one(self):
        np.testing.assert_allclose(parcor_to_coeffs([0.5]), [0.5])
        np.testing.assert_allclose(coeffs_to_parcor([0.5]), [0.5])

    def test_order_two_against_step_down(self):
        # step-down by hand: b2 = a2 = 0.15, b1 = (a1 + b2 a1) / (1 - b2^2) = a1 / (1 - b2)
        b1 = 0.2 / 0.85
        assert b1 == pytest.approx(0.235294, abs=1e-6)
        np.testing.assert_allclose(parcor_to_coeffs([b1, 0.15]), [0.2, 0.15], atol=1e-15)
        np.testing.assert_allclose(coeffs_to_parcor([0.2, 0.15]), [b1, 0.15], atol=1e-15)

    def test_rejects_nonstationary(self):
        with pytest.raises(ConstraintViolationError):
            coeffs_to_parcor([1.2])
        with pytest.raises(ConstraintViolationError):
            parcor_to_coeffs([0.3, 1.0])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-0.999, 0.999), min_size=1, max_size=10))
    def test_parcor_image_is_stationary(self, b):
        a = parcor_to_coeffs(b)
        assert np.max(np.abs(coeffs_to_roots(a))) < 1
        # each step-down divides by 1 - b^2
        cond = np.prod(1.0 / (1.0 - np.square(b)))
        np.testing.assert_allclose(coeffs_to_parcor(a), b, atol=1e-13 * cond, rtol=0)
        np.testing.assert_allclose(parcor_to_coeffs(coeffs_to_parcor(a)), a,
                                   atol=1e-13 * cond, rtol=0)

    @pytest.mark.parametrize("seed", range(20))
    def test_nonstationary_rejected(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, 9))
        z = rng.uniform(0.1, 0.9, m).astype(complex)
        z[0] = rng.choice([-1, 1]) * rng.uniform(1.01, 2.0)
        a = -poly_from_roots(z)[1:].real
        assert not is_stationary(a)
        with pytest.raises(ConstraintViolationError):
            coeffs_to_parcor(a)


class TestStationary:
    def test_examples(self):
        assert is_stationary([0.5])
        assert not is_stationary([0.0, -1.0])
        assert not is_stationary([1.2])
        assert is_stationary([])


def type2_spec(m_r, m_i, **kw):
    bd = RootBounds(m_r, m_i, kw.pop("r_min", 0.1), kw.pop("r_max", 0.9),
                    kw.pop("theta_min", 0.2), kw.pop("theta_max", 2.5),
                    negative_real=kw.pop("negative_real", False))
    return DecompSpec(m1=1, m2=0, m3=bd.m3, ar_type=2, bounds=bd)


class TestTransform:
    def test_type1_zero_is_white_noise(self):
        a, rs = transform_ar(np.zeros(4), DecompSpec(m1=1, m2=0, m3=4))
        np.testing.assert_array_equal(a, 0.0)
        assert rs is None

    def test_type2_zero_is_midpoint(self):
        spec = type2_spec(1, 2)
        _, rs = transform_ar(np.zeros(5), spec)
        np.testing.assert_allclose(rs.real_roots, [0.5])
        np.testing.assert_allclose(rs.moduli, [0.5, 0.5])
        np.testing.assert_allclose(rs.arguments, [1.35, 1.35])

    def test_length_checked(self):
        with pytest.raises(UsageError):
            transform_ar(np.zeros(2), type2_spec(1, 1))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=5, max_size=5))
    def test_type2_respects_box(self, u):
        spec = type2_spec(1, 2)
        a, rs = transform_ar(u, spec)
        assert rs.within(spec.bounds)
        # repeated roots are only recoverable to ~sqrt(eps)
        back = roots_to_rootset(coeffs_to_roots(a))
        assert back.within(RootBounds(1, 2, 0.1 - 1e-6, 0.9 + 1e-6, 0.2 - 1e-6, 2.5 + 1e-6))
        assert is_stationary(a)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=10))
    def test_type1_respects_cap(self, u):
        spec = DecompSpec(m1=1, m2=0, m3=len(u), parcor_cap=0.9)
        a, _ = transform_ar(u, spec)
        b = coeffs_to_parcor(a)
        cond = np.prod(1.0 / (1.0 - np.square(b)))
        assert np.all(np.abs(b) <= 0.9 + 1e-13 * cond)
        assert is_stationary(a)

    def test_ar_parcor_is_exact_for_type1(self):
        spec = DecompSpec(m1=1, m2=0, m3=3, parcor_cap=0.8)
        u = np.array([40.0, -0.3, 0.0])
        b = ar_parcor(u, spec)
        np.testing.assert_allclose(b, 0.8 * np.tanh([15.0, -0.3, 0.0]))
        np.testing.assert_array_equal(parcor_to_coeffs(b), transform_ar(u, spec)[0])

    def test_negative_real_roots_allowed(self):
        spec = type2_spec(1, 0, negative_real=True)
        a, rs = transform_ar([-3.0], spec)
        assert -0.9 < rs.real_roots[0] < 0


class TestBounds:
    def test_validation(self):
        with pytest.raises(SpecificationError):
            RootBounds(1, 0, 0.5, 0.4, 0.1, 1.0)
        with pytest.raises(SpecificationError):
            RootBounds(1, 0, 0.0, 1.0, 0.1, 1.0)
        with pytest.raises(SpecificationError):
            RootBounds(1, 0, 0.0, 0.9, 0.0, 1.0)

    def test_defaults(self):
        bd = default_root_bounds(1, 2, 12)
        assert (bd.r_min, bd.r_max, bd.theta_max) == (0.0, 0.98, np.pi)
        assert bd.theta_min == pytest.approx(2 * np.pi / 120)
        assert bd.m3 == 5

    def test_rootset_canonical_order(self):
        rs = RootSet([0.3, -0.2], [0.5, 0.4, 0.6], [2.0, 1.0, 1.0])
        np.testing.assert_array_equal(rs.real_roots, [-0.2, 0.3])
        np.testing.assert_array_equal(rs.arguments, [1.0, 1.0, 2.0])
        np.testing.assert_array_equal(rs.moduli, [0.4, 0.6, 0.5])
