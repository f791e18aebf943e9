import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmmfit.piecewise import (
    MAX_DEGREE,
    PiecewisePolynomial,
    Polynomial,
    coefficient_bound_ok,
)

from conftest import random_pp
from oracles import grid_bisect_roots, trapezoid_l1


def const_pp(value, lo, hi):
    return PiecewisePolynomial([lo, hi], [Polynomial([value])])


def xsq_on_sym() -> PiecewisePolynomial:
    # x^2 on [-1, 1]: identity local map.
    return PiecewisePolynomial([-1.0, 1.0], [Polynomial([0.0, 0.0, 1.0])])


class TestEvaluate:
    def test_constant(self):
        assert const_pp(1.0, 0.0, 1.0).evaluate(0.5) == 1.0

    def test_xsq_identity_map(self):
        assert xsq_on_sym().evaluate(0.5) == pytest.approx(0.25, abs=1e-15)

    def test_outside_support_is_zero(self):
        p = const_pp(3.0, 0.0, 1.0)
        assert p.evaluate(-0.5) == 0.0
        assert p.evaluate(1.5) == 0.0

    def test_right_piece_owns_knot(self):
        p = PiecewisePolynomial([0.0, 1.0, 2.0], [Polynomial([1.0]), Polynomial([2.0])])
        assert p.evaluate(1.0) == 2.0
        assert p.evaluate(2.0) == 0.0  # right tail

    def test_vectorized(self):
        p = xsq_on_sym()
        xs = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
        np.testing.assert_allclose(p.evaluate(xs), [0.0, 0.25, 0.0, 0.25, 0.0], atol=1e-15)


class TestIntegrate:
    def test_xsq_on_unit(self):
        p = PiecewisePolynomial.from_global_coeffs([0.0, 1.0], [[0.0, 0.0, 1.0]])
        assert p.integrate(0.0, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_zero_pp(self):
        assert PiecewisePolynomial.zero().integrate(-5.0, 5.0) == 0.0

    def test_constant_partial(self):
        assert const_pp(2.0, 0.0, 3.0).integrate(1.0, 2.0) == pytest.approx(2.0)

    def test_rejects_reversed_bounds(self):
        with pytest.raises(ValueError):
            const_pp(1.0, 0.0, 1.0).integrate(1.0, 0.0)

    def test_additivity_random(self, rng):
        for _ in range(25):
            p = random_pp(rng, n_pieces=4, degree=5)
            a, c = sorted(rng.uniform(-3, 3, 2))
            b = rng.uniform(a, c)
            total = p.integrate(a, b) + p.integrate(b, c)
            ref = p.integrate(a, c)
            assert total == pytest.approx(ref, rel=1e-12, abs=1e-12)


class TestSubtract:
    def test_self_difference_is_zero(self, rng):
        p = random_pp(rng)
        d = p.subtract(p)
        assert set(p.breakpoints).issubset(set(d.breakpoints))
        xs = rng.uniform(*p.support, 50)
        np.testing.assert_allclose(d.evaluate(xs), 0.0, atol=1e-12)

    def test_shifted_indicators(self):
        p = const_pp(1.0, 0.0, 2.0)
        q = const_pp(1.0, 1.0, 3.0)
        d = p.subtract(q)
        assert d.evaluate(0.5) == pytest.approx(1.0)
        assert d.evaluate(1.5) == pytest.approx(0.0, abs=1e-15)
        assert d.evaluate(2.5) == pytest.approx(-1.0)

    def test_pointwise_random(self, rng):
        for _ in range(10):
            p = random_pp(rng, n_pieces=3, degree=5)
            q = random_pp(rng, n_pieces=4, degree=4)
            d = p.subtract(q)
            xs = rng.uniform(-2.5, 2.5, 100)
            np.testing.assert_allclose(
                d.evaluate(xs), p.evaluate(xs) - q.evaluate(xs), atol=1e-10
            )


class TestRealRoots:
    def test_parabola_minus_one(self):
        p = PiecewisePolynomial.from_global_coeffs([-2.0, 2.0], [[-1.0, 0.0, 1.0]])
        np.testing.assert_allclose(p.real_roots(), [-1.0, 1.0], atol=1e-10)

    def test_strictly_positive(self, rng):
        p = PiecewisePolynomial.from_global_coeffs([-1.0, 1.0], [[2.0, 0.0, 1.0]])
        assert p.real_roots() == []

    def test_cubic_matches_bisection_oracle(self):
        p = PiecewisePolynomial.from_global_coeffs([-2.0, 2.0], [[0.0, -1.0, 0.0, 1.0]])
        expected = grid_bisect_roots(lambda x: x**3 - x, -2.0, 2.0)
        got = p.real_roots()
        np.testing.assert_allclose(got, expected, atol=1e-9)
        np.testing.assert_allclose(got, [-1.0, 0.0, 1.0], atol=1e-9)

    def test_touch_zero_excluded(self):
        p = PiecewisePolynomial.from_global_coeffs([-1.0, 1.0], [[0.0, 0.0, 1.0]])
        assert p.real_roots() == []

    def test_jump_at_knot_included(self):
        p = PiecewisePolynomial(
            [0.0, 1.0, 2.0], [Polynomial([1.0]), Polynomial([-1.0])]
        )
        np.testing.assert_allclose(p.real_roots(), [1.0], atol=1e-12)

    def test_sign_constant_between_roots(self, rng):
        for _ in range(15):
            p = random_pp(rng, n_pieces=3, degree=5)
            cuts = [p.support[0]] + p.real_roots() + [p.support[1]]
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                pad = 1e-9 * (p.support[1] - p.support[0])
                xs = np.linspace(lo + pad, hi - pad, 1000)
                vals = p.evaluate(xs)
                assert not (np.any(vals > 1e-9) and np.any(vals < -1e-9))


class TestL1Norm:
    def test_abs_x(self):
        p = PiecewisePolynomial.from_global_coeffs([-1.0, 1.0], [[0.0, 1.0]])
        assert p.l1_norm() == pytest.approx(1.0, rel=1e-12)

    def test_nonnegative_equals_integral(self, rng):
        p = PiecewisePolynomial.from_global_coeffs([0.0, 2.0], [[1.0, 0.0, 1.0]])
        assert p.l1_norm() == pytest.approx(p.integrate(*p.support), rel=1e-12)

    def test_matches_trapezoid_oracle(self, rng):
        for _ in range(5):
            p = random_pp(rng, n_pieces=4, degree=5)
            ref = trapezoid_l1(p.evaluate, *p.support, cuts=p.breakpoints)
            assert p.l1_norm() == pytest.approx(ref, abs=1e-6)


class TestRescaleDomain:
    def test_zero_two_to_unit(self):
        p = const_pp(1.0, 0.0, 2.0)
        q, (alpha, beta) = p.rescale_domain((-1.0, 1.0))
        assert (alpha, beta) == (0.0, 2.0)
        assert q.support == (-1.0, 1.0)

    def test_identity_when_already_unit(self):
        p = const_pp(1.0, -1.0, 1.0)
        q, (alpha, beta) = p.rescale_domain((-1.0, 1.0))
        assert (alpha, beta) == (-1.0, 1.0)
        np.testing.assert_array_equal(q.breakpoints, p.breakpoints)

    def test_round_trip_values(self, rng):
        p = random_pp(rng, n_pieces=3, degree=4)
        q, (alpha, beta) = p.rescale_domain((-1.0, 1.0))
        back, _ = q.rescale_domain((alpha, beta))
        xs = rng.uniform(alpha, beta, 100)
        np.testing.assert_allclose(back.evaluate(xs), p.evaluate(xs), atol=1e-11)

    def test_integral_scales_with_width(self):
        p = const_pp(1.0, 0.0, 4.0)
        q, _ = p.rescale_domain((-1.0, 1.0))
        assert q.total_integral() == pytest.approx(2.0)


class TestValidation:
    def test_degree_cap(self):
        with pytest.raises(ValueError):
            Polynomial(np.ones(MAX_DEGREE + 2))

    def test_nonincreasing_breakpoints_rejected(self):
        with pytest.raises(ValueError):
            PiecewisePolynomial([0.0, 0.0], [Polynomial([1.0])])

    def test_nonfinite_coeffs_rejected(self):
        with pytest.raises(ValueError):
            Polynomial([1.0, np.inf])

    def test_piece_count_mismatch(self):
        with pytest.raises(ValueError):
            PiecewisePolynomial([0.0, 1.0], [Polynomial([1.0]), Polynomial([2.0])])


class TestCoefficientBound:
    def test_holds_for_nonnegative_pieces(self, rng):
        for _ in range(20):
            c = rng.uniform(0, 1, 4)
            poly = Polynomial([c[0], c[1], c[2] ** 2, 0.0, c[3]])  # even + positive mix
            vals = poly(np.linspace(-1, 1, 512))
            if vals.min() < 0:
                continue
            mass = np.trapezoid(vals, np.linspace(-1, 1, 512))
            assert coefficient_bound_ok(poly, mass)

    def test_flags_wild_coefficients(self):
        # Large oscillating coefficients with near-zero mass violate the bound.
        poly = Polynomial([1e6, 0.0, -1e6])
        assert not coefficient_bound_ok(poly, 1e-6)


@settings(max_examples=40, deadline=None)
@given(
    coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=6),
    a=st.floats(-0.99, 0.99),
    b=st.floats(-0.99, 0.99),
)
def test_hypothesis_integral_additivity(coeffs, a, b):
    p = PiecewisePolynomial([-1.0, 1.0], [Polynomial(coeffs)])
    lo, hi = min(a, b), max(a, b)
    whole = p.integrate(-1.0, 1.0)
    parts = p.integrate(-1.0, lo) + p.integrate(lo, hi) + p.integrate(hi, 1.0)
    assert parts == pytest.approx(whole, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    c1=st.lists(st.floats(-3, 3), min_size=1, max_size=5),
    c2=st.lists(st.floats(-3, 3), min_size=1, max_size=5),
    x=st.floats(-1.8, 1.8),
)
def test_hypothesis_subtract_pointwise(c1, c2, x):
    p = PiecewisePolynomial([-2.0, 0.5], [Polynomial(c1)])
    q = PiecewisePolynomial([-0.5, 2.0], [Polynomial(c2)])
    d = p.subtract(q)
    assert d.evaluate(x) == pytest.approx(
        p.evaluate(x) - q.evaluate(x), rel=1e-10, abs=1e-10
    )


def test_json_round_trip(rng):
    p = random_pp(rng)
    q = PiecewisePolynomial.from_json(p.to_json())
    assert q == p
    assert q.to_json() == p.to_json()
