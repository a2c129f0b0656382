import math

import numpy as np
import pytest

from convexfit.assouad import (
    AssouadFamily,
    build_assouad_family,
    cap_loss_cell,
    cap_loss_scaling,
    default_eps_rule,
    loss_between_labels,
    unit_cap_loss,
)
from convexfit.geometry import support_values
from convexfit.spheres import maximal_packing, uniform_directions


def small_family(rng, d=2, eta=0.125, eps=0.1):
    design = maximal_packing(rng, d, eps)
    return build_assouad_family(rng, d, 1.0, eta, design)


class TestFamilyConstruction:
    def test_axis_separation(self, rng):
        fam = small_family(rng)
        assert fam.m >= 2
        gram = fam.axes @ fam.axes.T
        np.fill_diagonal(gram, -1.0)
        min_dist = math.sqrt(2.0 - 2.0 * float(np.max(gram)))
        assert min_dist >= 2.0 * math.sqrt(2.0 * fam.eta) - 1e-9

    def test_eta_validated(self, rng):
        design = maximal_packing(rng, 2, 0.1)
        with pytest.raises(ValueError):
            build_assouad_family(rng, 2, 1.0, 0.2, design)
        with pytest.raises(ValueError):
            AssouadFamily(gamma=1.0, eta=0.3, axes=[[1.0, 0.0]], design=design)

    def test_all_ones_is_ball(self, rng):
        fam = small_family(rng)
        body = fam.member(np.ones(fam.m, dtype=int))
        U = uniform_directions(rng, 2, 200)
        assert np.all(support_values(body, U) == fam.gamma)

    def test_all_zeros_cap_support(self, rng):
        # inside cap j the support equals gamma*cos(alpha - theta); checked
        # against brute-force point-sample maximization in test_geometry
        fam = small_family(rng)
        body = fam.member(np.zeros(fam.m, dtype=int))
        alpha = math.acos(1.0 - fam.eta)
        for j in range(fam.m):
            val = support_values(body, fam.axes[j][None, :])[0]
            assert val == pytest.approx(fam.gamma * (1.0 - fam.eta), abs=1e-12)

    def test_monotone_in_labels(self, rng):
        fam = small_family(rng, d=3, eps=0.3)
        U = uniform_directions(rng, 3, 1000)
        for _ in range(10):
            tau = rng.integers(0, 2, fam.m)
            tau2 = np.maximum(tau, rng.integers(0, 2, fam.m))
            h1 = support_values(fam.member(tau), U)
            h2 = support_values(fam.member(tau2), U)
            assert np.all(h1 <= h2 + 1e-12)

    def test_deficit_bounded_by_gamma_eta(self, rng):
        fam = small_family(rng)
        U = uniform_directions(rng, 2, 1000)
        ball = support_values(fam.member(np.ones(fam.m, dtype=int)), U)
        for _ in range(5):
            tau = rng.integers(0, 2, fam.m)
            h = support_values(fam.member(tau), U)
            deficit = ball - h
            assert np.all(deficit >= -1e-12)
            assert np.all(deficit <= fam.gamma * fam.eta + 1e-12)


class TestHammingDecomposition:
    def test_zero_on_equal_labels(self, rng):
        fam = small_family(rng)
        tau = rng.integers(0, 2, fam.m)
        assert loss_between_labels(fam, tau, tau) == 0.0

    @pytest.mark.parametrize("d,eps", [(2, 0.05), (3, 0.2)])
    def test_additive_over_differing_caps(self, rng, d, eps):
        fam = small_family(rng, d=d, eps=eps)
        units = [unit_cap_loss(fam, j) for j in range(fam.m)]
        for _ in range(50):
            tau = rng.integers(0, 2, fam.m)
            tau2 = rng.integers(0, 2, fam.m)
            lhs = loss_between_labels(fam, tau, tau2)
            rhs = sum(units[j] for j in range(fam.m) if tau[j] != tau2[j])
            assert abs(lhs - rhs) <= 1e-9

    def test_hamming_one_equals_unit_loss(self, rng):
        fam = small_family(rng)
        tau = np.ones(fam.m, dtype=int)
        for j in range(fam.m):
            tau2 = tau.copy()
            tau2[j] = 0
            assert abs(loss_between_labels(fam, tau, tau2)
                       - unit_cap_loss(fam, j)) <= 1e-9

    def test_symmetric_design_hamming_multiples(self, rng):
        # with evenly spaced axes and an aligned evenly spaced design every
        # cap sees the same point pattern, so per-cap losses coincide and
        # the loss is exactly Hamming * the common unit loss
        from convexfit.spheres import PackingSet, evenly_spaced_circle

        eta = 0.125
        n, m = 160, 4
        pts = evenly_spaced_circle(n)
        design = PackingSet(dim=2, epsilon=2 * math.sin(math.pi / n), points=pts)
        axes = evenly_spaced_circle(m)
        fam = AssouadFamily(gamma=1.0, eta=eta, axes=axes, design=design)
        unit = unit_cap_loss(fam, 0)
        tau = np.ones(m, dtype=int)
        for k in (1, 2):
            tau2 = tau.copy()
            tau2[:k] = 0
            assert abs(loss_between_labels(fam, tau, tau2) - k * unit) <= 1e-9

    def test_label_length_checked(self, rng):
        fam = small_family(rng)
        with pytest.raises(ValueError):
            loss_between_labels(fam, [0], [1])


class TestCapLossScaling:
    def test_unit_loss_closed_form(self, rng):
        # direct substitution of the deficit formula into the mean square
        eta, eps, seed = 0.0625, default_eps_rule(0.0625), 3
        _, _, n, loss = cap_loss_cell(2, 1.5, eta, seed=seed)
        rng2 = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        design = maximal_packing(rng2, 2, eps)
        alpha = math.acos(1.0 - eta)
        theta = np.arccos(np.clip(design.points[:, 0], -1, 1))
        inside = theta <= alpha
        direct = float(np.sum((1.5 * (1.0 - np.cos(alpha - theta[inside]))) ** 2)
                       ) / len(design)
        assert abs(loss - direct) <= 1e-12
        assert n == len(design)

    def test_eta_validated(self):
        with pytest.raises(ValueError):
            cap_loss_scaling(2, 1.0, [0.5], seed=0)

    def test_slope_d2(self):
        fit, rows = cap_loss_scaling(2, 1.0, [1 / 8, 1 / 16, 1 / 32, 1 / 64],
                                     seed=0)
        assert fit.target_exponent == 2.5
        assert abs(fit.slope - 2.5) <= 0.2
        assert len(rows) == 4
