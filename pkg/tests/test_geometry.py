import math

import numpy as np
import pytest
import scipy.integrate

from convexfit.geometry import (
    Cap,
    CapBody,
    Polytope,
    SupportSamples,
    hausdorff_polytopes,
    loss_f,
    loss_new,
    loss_r_mc,
    project_point_to_polytope,
    support_cap_body,
    support_polytope,
    support_samples,
    support_values,
)
from convexfit.spheres import evenly_spaced_circle, uniform_directions

from conftest import random_polytope, sample_truncated_ball

SQUARE = Polytope([[1, 1], [1, -1], [-1, 1], [-1, -1]])
DIAMOND = Polytope([[1, 0], [-1, 0], [0, 1], [0, -1]])


class TestSupportPolytope:
    def test_square_axis(self):
        assert support_polytope(SQUARE, [1.0, 0.0]) == 1.0

    def test_square_corner(self):
        r = 1.0 / math.sqrt(2.0)
        assert support_polytope(SQUARE, [r, r]) == pytest.approx(math.sqrt(2.0))

    def test_singleton(self):
        P = Polytope([[2.0, 0.0]])
        assert support_polytope(P, [0.0, 1.0]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            support_polytope(SQUARE, [1.0, 0.0, 0.0])

    def test_non_unit_direction(self):
        with pytest.raises(ValueError):
            support_polytope(SQUARE, [1.0, 1.0])

    def test_positive_homogeneity(self, rng):
        # extending h by r * h(u/|u|) matches direct maximization on r*u
        for _ in range(25):
            P = random_polytope(rng, 2)
            u = uniform_directions(rng, 2, 1)[0]
            r = float(rng.uniform(0.1, 5.0))
            direct = float(np.max(P.vertices @ (r * u)))
            assert direct == pytest.approx(r * support_polytope(P, u), rel=1e-12)

    def test_sublinearity(self, rng):
        for _ in range(25):
            P = random_polytope(rng, 3)
            u, w = uniform_directions(rng, 3, 2)
            s = u + w
            norm = np.linalg.norm(s)
            if norm < 1e-6:
                continue
            lhs = norm * support_polytope(P, s / norm)
            rhs = support_polytope(P, u) + support_polytope(P, w)
            assert lhs <= rhs + 1e-12


class TestCapBody:
    def test_deficit_at_axis(self):
        B = CapBody(gamma=1.0, caps=(Cap(axis=[1.0, 0.0], eta=0.125),))
        assert support_cap_body(B, [1.0, 0.0]) == pytest.approx(0.875, abs=1e-12)

    def test_outside_cap_full_ball(self):
        B = CapBody(gamma=1.0, caps=(Cap(axis=[1.0, 0.0], eta=0.125),))
        assert support_cap_body(B, [0.0, 1.0]) == 1.0

    def test_plain_ball(self, rng):
        B = CapBody(gamma=1.0)
        for u in uniform_directions(rng, 3, 10):
            assert support_cap_body(B, u) == 1.0

    def test_untruncated_cap_inert(self):
        B = CapBody(gamma=2.0, caps=(Cap(axis=[1.0, 0.0], eta=0.1,
                                         truncated=False),))
        assert support_cap_body(B, [1.0, 0.0]) == 2.0

    def test_overlapping_caps_rejected(self):
        a1 = np.array([1.0, 0.0])
        a2 = np.array([math.cos(0.1), math.sin(0.1)])
        with pytest.raises(ValueError):
            CapBody(gamma=1.0, caps=(Cap(a1, 0.125), Cap(a2, 0.125)))

    def test_eta_range(self):
        with pytest.raises(ValueError):
            Cap(axis=[1.0, 0.0], eta=0.2)
        with pytest.raises(ValueError):
            Cap(axis=[1.0, 0.0], eta=0.0)

    @pytest.mark.parametrize("d", [2, 3])
    def test_against_point_sample_oracle(self, rng, d):
        # brute-force maximization over a dense sample of the body
        for _ in range(25):
            eta = float(rng.uniform(0.01, 0.125))
            axis = uniform_directions(rng, d, 1)[0]
            u = uniform_directions(rng, d, 1)[0]
            gamma = float(rng.uniform(0.5, 2.0))
            B = CapBody(gamma=gamma, caps=(Cap(axis=axis, eta=eta),))
            pts = sample_truncated_ball(rng, d, gamma, axis, eta, 100_000)
            oracle = float(np.max(pts @ u))
            val = support_cap_body(B, u)
            assert oracle <= val + 1e-9  # the oracle samples inside the body
            assert val - oracle <= 1e-3 * gamma


class TestLossF:
    def test_identical(self):
        U = evenly_spaced_circle(8)
        A = support_samples(SQUARE, U)
        assert loss_f(A, A) == 0.0

    def test_constant_offset(self):
        U = evenly_spaced_circle(8)
        A = SupportSamples(U, np.ones(8))
        B = SupportSamples(U, 2.0 * np.ones(8))
        assert loss_f(A, B) == 1.0

    def test_square_vs_diamond_frozen(self):
        # at angles k*pi/4: square support |cos|+|sin|, diamond support
        # max(|cos|,|sin|); they differ by sqrt(2)/2 at the four diagonals,
        # so the mean squared gap over 8 directions is 4*(1/2)/8 = 1/4
        U = evenly_spaced_circle(8)
        A = support_samples(SQUARE, U)
        B = support_samples(DIAMOND, U)
        assert loss_f(A, B) == pytest.approx(0.25, abs=1e-12)

    def test_direction_mismatch(self):
        A = support_samples(SQUARE, evenly_spaced_circle(8))
        B = support_samples(SQUARE, evenly_spaced_circle(9))
        with pytest.raises(ValueError):
            loss_f(A, B)
        C = support_samples(SQUARE, np.roll(evenly_spaced_circle(8), 1, axis=0))
        with pytest.raises(ValueError):
            loss_f(A, C)


def uniform_sampler(rng, n):
    return uniform_directions(rng, 2, n)


class TestLossR:
    def test_identical(self, rng):
        est, se = loss_r_mc(SQUARE, SQUARE, uniform_sampler, 100, rng)
        assert est == 0.0 and se == 0.0

    def test_concentric_balls(self, rng):
        B1 = CapBody(gamma=1.0)
        B2 = CapBody(gamma=2.0)
        sample = uniform_directions(rng, 2, 500)
        est, se = loss_r_mc(B1, B2, sample, None)
        assert est == pytest.approx(1.0, abs=1e-12)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_cap_vs_ball_quadrature_oracle(self, rng):
        # 1-D quadrature of the squared deficit over the circle
        eta = 0.125
        alpha = math.acos(1.0 - eta)
        exact, err = scipy.integrate.quad(
            lambda t: (1.0 - math.cos(alpha - t)) ** 2 / math.pi, 0.0, alpha,
            epsabs=1e-12,
        )
        assert err < 1e-8
        B = CapBody(gamma=1.0, caps=(Cap(axis=[1.0, 0.0], eta=eta),))
        ball = CapBody(gamma=1.0)
        est, se = loss_r_mc(B, ball, uniform_sampler, 200_000, rng)
        assert abs(est - exact) <= 3.0 * se + 1e-8

    def test_minimum_sample_size(self, rng):
        with pytest.raises(ValueError):
            loss_r_mc(SQUARE, SQUARE, uniform_sampler, 1, rng)


class TestLossNew:
    def test_identical(self, rng):
        assert loss_new(SQUARE, SQUARE, 0.5, uniform_sampler, 100, rng) == 0.0

    def test_constant_gap(self, rng):
        B1 = CapBody(gamma=1.0)
        B2 = CapBody(gamma=1.5)
        val = loss_new(B1, B2, 0.3, uniform_sampler, 500, rng)
        assert val == pytest.approx(0.25, rel=1e-9)

    def test_sigma_positive(self, rng):
        with pytest.raises(ValueError):
            loss_new(SQUARE, SQUARE, 0.0, uniform_sampler, 100, rng)

    @pytest.mark.parametrize("sigma", [0.1, 1.0])
    def test_comparison_inequalities_shared_sample(self, rng, sigma):
        # Jensen direction and the chord-bound reverse inequality hold
        # deterministically on a shared direction sample
        gamma = 1.0
        factor = (gamma**2 / (4 * sigma**2)) / (1.0 - math.exp(
            -(gamma**2) / (4 * sigma**2)))
        for _ in range(100):
            P = random_polytope(rng, 2, radius=gamma)
            Q = random_polytope(rng, 2, radius=gamma)
            sample = uniform_directions(rng, 2, 400)
            lr, _ = loss_r_mc(P, Q, sample, None)
            ln = loss_new(P, Q, sigma, sample, None)
            assert ln <= lr + 1e-9
            assert lr <= factor * ln + 1e-9


class TestProjection:
    def test_point_inside(self):
        p, dist = project_point_to_polytope([0.1, -0.2], SQUARE)
        assert dist <= 1e-7

    def test_segment(self):
        seg = Polytope([[0.0, -1.0], [0.0, 1.0]])
        p, dist = project_point_to_polytope([2.0, 0.0], seg)
        assert dist == pytest.approx(2.0, abs=1e-10)
        assert np.allclose(p, [0.0, 0.0], atol=1e-10)

    def test_diamond_face(self):
        p, dist = project_point_to_polytope([1.0, 1.0], DIAMOND)
        assert dist == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)

    def test_kkt_certificate(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 4))
            Q = random_polytope(rng, d)
            x = rng.uniform(-2.0, 2.0, d)
            p, dist = project_point_to_polytope(x, Q)
            cert = np.max((Q.vertices - p) @ (x - p))
            assert cert <= 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project_point_to_polytope([1.0, 2.0, 3.0], SQUARE)


class TestHausdorff:
    def test_identical(self):
        assert hausdorff_polytopes(SQUARE, SQUARE) == 0.0

    def test_points(self):
        P = Polytope([[0.0, 0.0]])
        Q = Polytope([[3.0, 4.0]])
        assert hausdorff_polytopes(P, Q) == pytest.approx(5.0, abs=1e-12)

    def test_diamond_square(self, rng):
        val = hausdorff_polytopes(DIAMOND, SQUARE)
        assert val == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)
        # independent oracle: sup over sampled directions of |h_P - h_Q|
        U = uniform_directions(rng, 2, 100_000)
        oracle = float(np.max(np.abs(support_values(DIAMOND, U)
                                     - support_values(SQUARE, U))))
        assert abs(val - oracle) <= 1e-3

    def test_metric_properties(self, rng):
        for _ in range(25):
            P = random_polytope(rng, 2)
            Q = random_polytope(rng, 2)
            R = random_polytope(rng, 2)
            dpq = hausdorff_polytopes(P, Q)
            assert dpq == hausdorff_polytopes(Q, P)
            assert dpq <= (hausdorff_polytopes(P, R)
                           + hausdorff_polytopes(R, Q) + 1e-9)

    @pytest.mark.parametrize("d", [2, 3])
    def test_dominates_sample_losses(self, rng, d):
        for _ in range(50):
            P = random_polytope(rng, d)
            Q = random_polytope(rng, d)
            h2 = hausdorff_polytopes(P, Q) ** 2
            U = uniform_directions(rng, d, 200)
            lf = loss_f(support_samples(P, U), support_samples(Q, U))
            lr, se = loss_r_mc(P, Q, U, None)
            assert lf <= h2 + 1e-9
            assert lr <= h2 + 3.0 * se + 1e-9


class TestPolytopeType:
    def test_dedup(self):
        P = Polytope([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert P.vertices.shape == (2, 2)

    def test_gamma_tag(self):
        with pytest.raises(ValueError):
            Polytope([[2.0, 0.0]], gamma=1.0)
        Polytope([[1.0, 0.0]], gamma=1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Polytope(np.empty((0, 2)))
