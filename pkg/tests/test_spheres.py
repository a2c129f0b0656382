import math

import numpy as np
import pytest

from convexfit.harness import fit_rate
from convexfit.sieve import HAVE_COMPILED
from convexfit.spheres import (
    PackingSet,
    cap_measure_mc,
    count_packing_in_cap,
    default_saturation,
    evenly_spaced_circle,
    maximal_packing,
    uniform_direction,
    uniform_directions,
)


class TestUniformDirections:
    def test_unit_norm(self, rng):
        for d in (2, 3, 5):
            u = uniform_direction(rng, d)
            assert abs(np.linalg.norm(u) - 1.0) <= 1e-12

    def test_coordinate_symmetry(self, rng):
        U = uniform_directions(rng, 2, 100_000)
        assert np.all(np.abs(U.mean(axis=0)) < 0.02)

    def test_hemisphere_fraction(self, rng):
        # Cap(e1, sqrt(2)) is exactly a hemisphere
        U = uniform_directions(rng, 3, 100_000)
        frac = np.mean(np.linalg.norm(U - np.array([1.0, 0, 0]), axis=1)
                       <= math.sqrt(2.0))
        assert abs(frac - 0.5) < 0.01

    def test_rejects_low_dim(self, rng):
        with pytest.raises(ValueError):
            uniform_direction(rng, 1)


class TestEvenlySpaced:
    def test_four(self):
        U = evenly_spaced_circle(4)
        expect = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
        assert np.allclose(U, expect, atol=1e-15)

    def test_one(self):
        assert np.array_equal(evenly_spaced_circle(1), [[1.0, 0.0]])

    def test_exact_grid(self):
        # angles are exactly k * (2 pi / 360) by construction
        U = evenly_spaced_circle(360)
        step = 2.0 * math.pi / 360
        angles = np.arange(360) * step
        assert np.array_equal(U[:, 0], np.cos(angles))
        assert np.array_equal(U[:, 1], np.sin(angles))


class TestMaximalPacking:
    def test_packing_property_exact(self, rng):
        for d, eps in ((2, 0.3), (3, 0.5)):
            pack = maximal_packing(rng, d, eps)
            gram = pack.points @ pack.points.T
            np.fill_diagonal(gram, -1.0)
            min_dist = math.sqrt(max(0.0, 2.0 - 2.0 * float(np.max(gram))))
            assert min_dist >= eps - 1e-12

    def test_eps_two_at_most_antipodal(self, rng):
        # brute force: three points on a circle cannot be pairwise >= 2
        # apart; the greedy draw finds the exact antipode with probability
        # zero, so a single point is the expected outcome
        pack = maximal_packing(rng, 2, 2.0)
        assert 1 <= len(pack) <= 2

    def test_eps_sqrt2_at_most_four(self, rng):
        # brute force: five points on a circle cannot be pairwise >= sqrt(2)
        # apart (that needs five angular gaps of at least 90 degrees)
        for seed in range(10):
            pack = maximal_packing(np.random.default_rng(seed), 2,
                                   math.sqrt(2.0))
            assert 2 <= len(pack) <= 4

    def test_count_band_d2(self):
        counts = [len(maximal_packing(np.random.default_rng(s), 2, 0.05))
                  for s in range(20)]
        assert max(counts) / min(counts) <= 1.5

    def test_bitwise_determinism(self):
        a = maximal_packing(np.random.default_rng(123), 3, 0.4)
        b = maximal_packing(np.random.default_rng(123), 3, 0.4)
        assert np.array_equal(a.points, b.points)

    @pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels not built")
    def test_backend_parity(self):
        for d, eps in ((2, 0.1), (3, 0.25)):
            a = maximal_packing(np.random.default_rng(5), d, eps,
                                backend="compiled")
            b = maximal_packing(np.random.default_rng(5), d, eps,
                                backend="python")
            assert np.array_equal(a.points, b.points)

    def test_count_scaling(self):
        for d in (2, 3):
            pts = []
            for k, eps in enumerate((0.4, 0.2, 0.1, 0.05)):
                counts = [len(maximal_packing(np.random.default_rng(60 + 13 * k + s), d, eps))
                          for s in range(3)]
                pts.append((1.0 / eps, float(np.mean(counts))))
            fit = fit_rate(pts)
            assert abs(fit.slope - (d - 1)) <= 0.25

    def test_default_saturation(self):
        assert default_saturation(2, 0.05) == 4000
        assert default_saturation(3, 1e-4) == 1_000_000

    def test_invalid_points_rejected(self):
        with pytest.raises(ValueError):
            PackingSet(dim=2, epsilon=1.5,
                       points=np.array([[1.0, 0.0], [0.0, 1.0]]))


class TestCapMeasure:
    def test_half_circle(self, rng):
        est = cap_measure_mc(rng, 2, math.sqrt(2.0), 100_000)
        se = math.sqrt(0.25 / 100_000)
        assert abs(est - 0.5) <= 3 * se

    def test_whole_sphere(self, rng):
        assert cap_measure_mc(rng, 3, 2.0, 1000) == 1.0

    def test_d3_quarter(self, rng):
        # cos(alpha) = 1 - 1/2 gives measure (1 - cos alpha)/2 = 1/4
        est = cap_measure_mc(rng, 3, 1.0, 200_000)
        se = math.sqrt(0.25 * 0.75 / 200_000)
        assert abs(est - 0.25) <= 3 * se

    def test_measure_scaling(self):
        for d in (2, 3, 4):
            pts = []
            for i, delta in enumerate((0.1, 0.2, 0.3, 0.4, 0.5)):
                est = cap_measure_mc(np.random.default_rng(900 + i), d, delta,
                                     400_000)
                pts.append((delta, est))
            fit = fit_rate(pts)
            assert abs(fit.slope - (d - 1)) <= 0.2

    def test_validation(self, rng):
        with pytest.raises(ValueError):
            cap_measure_mc(rng, 2, 0.5, 10)
        with pytest.raises(ValueError):
            cap_measure_mc(rng, 2, 2.5, 1000)


class TestCountInCap:
    def test_isolated_point(self, rng):
        pack = maximal_packing(rng, 2, 0.5)
        v = pack.points[0]
        with pytest.warns(UserWarning):
            assert count_packing_in_cap(pack, v, 0.1) == 1

    def test_whole_sphere(self, rng):
        pack = maximal_packing(rng, 2, 0.3)
        with pytest.warns(UserWarning):
            assert count_packing_in_cap(pack, pack.points[0], 2.0) == len(pack)

    def test_cap_count_scaling(self, rng):
        pack = maximal_packing(np.random.default_rng(31), 2, 0.01)
        v = np.array([1.0, 0.0])
        pts = []
        for delta in (0.1, 0.2, 0.4, 0.8):
            pts.append((delta, count_packing_in_cap(pack, v, delta)))
        fit = fit_rate(pts)
        assert abs(fit.slope - 1.0) <= 0.2

    def test_no_warning_in_regime(self, rng):
        pack = maximal_packing(rng, 2, 0.1)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            count_packing_in_cap(pack, pack.points[0], 0.5)
