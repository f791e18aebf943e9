import numpy as np
import pytest

from gmmfit.ak import ak_brute_force, ak_distance, ak_norm, sign_runs
from gmmfit.piecewise import PiecewisePolynomial, Polynomial

from conftest import random_pp
from oracles import dp_interval_norm


def step_pp(values, knots):
    return PiecewisePolynomial(knots, [Polynomial([v]) for v in values])


class TestSignRuns:
    def test_nonnegative_single_run(self):
        p = PiecewisePolynomial.from_global_coeffs([0.0, 2.0], [[1.0, 0.0, 1.0]])
        dec = sign_runs(p)
        assert len(dec.runs) == 1
        assert dec.runs[0].integral == pytest.approx(p.integrate(0.0, 2.0))

    def test_step_two_runs(self):
        p = step_pp([1.0, -1.0], [0.0, 1.0, 2.0])
        dec = sign_runs(p)
        assert [pytest.approx(r.integral) for r in dec.runs] == [1.0, -1.0]

    def test_signed_integrals_sum_to_total(self, rng):
        for _ in range(20):
            p = random_pp(rng, n_pieces=4, degree=5)
            dec = sign_runs(p)
            assert dec.integrals.sum() == pytest.approx(
                p.integrate(*p.support), abs=1e-10
            )

    def test_adjacent_runs_alternate(self, rng):
        for _ in range(20):
            p = random_pp(rng, n_pieces=4, degree=5)
            signs = np.sign(sign_runs(p).integrals)
            assert np.all(signs[:-1] * signs[1:] <= 0)


class TestAkNorm:
    def test_nonnegative_equals_l1(self, rng):
        p = PiecewisePolynomial.from_global_coeffs([0.0, 2.0], [[0.5, 0.0, 1.0]])
        for order in (1, 2, 5):
            assert ak_norm(p, order) == pytest.approx(p.l1_norm(), rel=1e-12)

    def test_three_alternating_runs_order_two(self):
        # runs +0.5, -0.3, +0.2 on unit-width steps
        p = step_pp([0.5, -0.3, 0.2], [0.0, 1.0, 2.0, 3.0])
        assert ak_norm(p, 2) == pytest.approx(0.8, abs=1e-12)
        ref = ak_brute_force(p, 2, grid=3001)
        assert ak_norm(p, 2) == pytest.approx(ref, abs=1e-3)

    def test_order_at_least_runs_gives_l1(self, rng):
        p = step_pp([0.5, -0.3, 0.2], [0.0, 1.0, 2.0, 3.0])
        assert ak_norm(p, 3) == pytest.approx(1.0, abs=1e-12)
        assert ak_norm(p, 7) == pytest.approx(p.l1_norm(), abs=1e-12)

    def test_spanning_beats_top_runs(self):
        # One interval over +1, -0.001, +1 collects 1.999: the optimum needs
        # blocks of consecutive runs, not the largest single runs.
        p = step_pp([1.0, -0.01, 1.0], [0.0, 1.0, 1.1, 2.1])
        got = ak_norm(p, 1)
        assert got == pytest.approx(1.0 + 1.0 - 0.001, abs=1e-12)
        assert got == pytest.approx(ak_brute_force(p, 1, 4201), abs=1e-3)

    def test_monotone_in_order_and_below_l1(self, rng):
        for _ in range(20):
            p = random_pp(rng, n_pieces=4, degree=5)
            l1 = p.l1_norm()
            prev = 0.0
            for order in (1, 2, 3, 4, 8):
                val = ak_norm(p, order)
                assert val >= prev - 1e-12
                assert val <= l1 + 1e-9
                prev = val

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            ak_norm(PiecewisePolynomial.zero(), 0)


class TestAkDistance:
    def test_identical_inputs(self, rng):
        p = random_pp(rng)
        assert ak_distance(p, p, 3) == pytest.approx(0.0, abs=1e-12)

    def test_bounded_by_l1_of_difference(self, rng):
        for _ in range(10):
            p = random_pp(rng, n_pieces=3)
            q = random_pp(rng, n_pieces=3)
            d = p.subtract(q)
            for order in (1, 2, 4):
                assert ak_distance(p, q, order) <= d.l1_norm() + 1e-9

    def test_triangle_inequality(self, rng):
        for _ in range(15):
            p, q, r = (random_pp(rng, n_pieces=3, degree=4) for _ in range(3))
            for order in (1, 3):
                lhs = ak_distance(p, r, order)
                rhs = ak_distance(p, q, order) + ak_distance(q, r, order)
                assert lhs <= rhs + 1e-9


def test_mixture_approximant_distance_tracks_l1(rng):
    # two 2-component approximants at eps=0.05 with order 8: the interval
    # distance sits within 10 eps of the L1 distance
    from gmmfit.shapes import ShapePolyConfig, mixture_approx
    from test_mixtures import random_gmm

    eps = 0.05
    cfg = ShapePolyConfig.build(eps)
    for _ in range(5):
        p = mixture_approx(random_gmm(rng, 2), cfg)
        q = mixture_approx(random_gmm(rng, 2), cfg)
        l1 = p.subtract(q).l1_norm()
        ak = ak_distance(p, q, 8)
        assert -1e-9 <= l1 - ak <= 10 * eps


class TestBruteForce:
    def test_single_run_order_one(self):
        p = step_pp([2.0], [0.0, 1.5])
        assert ak_brute_force(p, 1, 500) == pytest.approx(3.0, abs=1e-10)

    def test_monotone_in_order(self, rng):
        p = random_pp(rng, n_pieces=4, degree=3)
        vals = [ak_brute_force(p, order, 800) for order in (1, 2, 3, 5)]
        assert all(a <= b + 1e-12 for a, b in zip(vals[:-1], vals[1:]))

    def test_agrees_with_independent_dp(self, rng):
        for _ in range(10):
            p = random_pp(rng, n_pieces=3, degree=3)
            xs = np.linspace(*p.support, 601)
            ref = dp_interval_norm(p.prefix_integral(xs), 2)
            assert ak_brute_force(p, 2, 601) == pytest.approx(ref, rel=1e-12)

    def test_piecewise_constant_oracle_agreement(self, rng):
        # exact norm vs grid DP on random step functions
        for _ in range(100):
            n = int(rng.integers(2, 7))
            knots = np.sort(rng.uniform(-2, 2, n + 1))
            while np.min(np.diff(knots)) < 0.05:
                knots = np.sort(rng.uniform(-2, 2, n + 1))
            vals = rng.uniform(-1, 1, n)
            p = step_pp(vals, knots)
            order = int(rng.integers(1, 5))
            grid = 4001
            spacing = (knots[-1] - knots[0]) / (grid - 1)
            err = 2 * order * spacing * np.abs(vals).max()
            assert ak_brute_force(p, order, grid) == pytest.approx(
                ak_norm(p, order), abs=err + 1e-12
            )
