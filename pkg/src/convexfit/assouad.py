"""Cap families for the lower-bound construction.

Members are balls truncated at a packed set of axes, indexed by binary
labels: label bit 0 truncates the cap, bit 1 leaves the ball intact.
Because the axes are separated by twice the cap radius, the fixed-design
loss between two members decomposes exactly into per-cap contributions
over the coordinates where the labels differ.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Cap, CapBody, direction_matrix, support_values
from .harness import RateFit, fit_rate
from .spheres import PackingSet, maximal_packing


@dataclass(frozen=True)
class AssouadFamily:
    """Ball radius, cap depth, packed axes, and the measurement design."""

    gamma: float
    eta: float
    axes: np.ndarray
    design: PackingSet

    def __post_init__(self):
        if not (0.0 < self.eta <= 0.125):
            raise ValueError("eta must lie in (0, 1/8]")
        if not (self.gamma > 0):
            raise ValueError("gamma must be positive")
        axes = direction_matrix(self.axes, dim=self.design.dim)
        object.__setattr__(self, "axes", axes)
        sep = 2.0 * math.sqrt(2.0 * self.eta)
        k = axes.shape[0]
        if k > 1:
            gram = axes @ axes.T
            np.fill_diagonal(gram, -1.0)
            if 2.0 - 2.0 * float(np.max(gram)) < sep * sep - 1e-12:
                raise ValueError("axes closer than twice the cap radius")

    @property
    def m(self):
        return self.axes.shape[0]

    def member(self, tau):
        """The body with cap j truncated exactly when tau_j == 0."""
        tau = np.asarray(tau)
        if tau.size != self.m:
            raise ValueError(f"label must have length {self.m}")
        caps = tuple(
            Cap(axis=self.axes[j], eta=self.eta, truncated=(tau[j] == 0))
            for j in range(self.m)
        )
        return CapBody(gamma=self.gamma, caps=caps)


def build_assouad_family(rng, d, gamma, eta, design):
    """Pack cap axes at separation 2 sqrt(2 eta) and attach the design."""
    if not (0.0 < eta <= 0.125):
        raise ValueError("eta must lie in (0, 1/8]")
    axes = maximal_packing(rng, d, 2.0 * math.sqrt(2.0 * eta))
    return AssouadFamily(gamma=gamma, eta=eta, axes=axes.points, design=design)


def _cap_deficits_at_design(fam, j):
    """Support deficit of truncating cap j, at every design direction."""
    chord = np.linalg.norm(fam.design.points - fam.axes[j], axis=1)
    theta = 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))
    alpha = 2.0 * math.asin(math.sqrt(0.5 * fam.eta))
    deficit = np.zeros(theta.size)
    inside = theta <= alpha + 1e-12
    deficit[inside] = fam.gamma * (1.0 - np.cos(alpha - theta[inside]))
    return deficit


def unit_cap_loss(fam, j=0):
    """Fixed-design loss between the full ball and the ball with cap j cut.

    Equals (gamma^2 / n) * sum over design directions inside the cap of
    (1 - cos(alpha - theta))^2.
    """
    deficit = _cap_deficits_at_design(fam, j)
    return float(np.mean(deficit * deficit))


def loss_between_labels(fam, tau, tau2):
    """Fixed-design loss between two family members, by support evaluation.

    With disjoint caps this equals the sum of unit cap losses over the
    coordinates where the labels differ (within 1e-9; exactly up to float
    rounding).
    """
    tau = np.asarray(tau)
    tau2 = np.asarray(tau2)
    if tau.size != fam.m or tau2.size != fam.m:
        raise ValueError(f"labels must have length {fam.m}")
    U = fam.design.points
    h1 = support_values(fam.member(tau), U)
    h2 = support_values(fam.member(tau2), U)
    diff = h1 - h2
    return float(np.mean(diff * diff))


def default_eps_rule(eta):
    """Design packing radius for a cap of depth eta: sqrt(eta) / 4."""
    return math.sqrt(eta) / 4.0


def cap_loss_cell(d, gamma, eta, eps_rule=None, seed=0):
    """One scaling-experiment cell: pack a design, measure the unit cap loss.

    Returns ``(eta, epsilon, n_design, unit_loss)``.
    """
    rule = eps_rule or default_eps_rule
    epsilon = float(rule(eta))
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    design = maximal_packing(rng, d, epsilon)
    axis = np.zeros(d)
    axis[0] = 1.0
    fam = AssouadFamily(gamma=gamma, eta=eta, axes=axis[None, :], design=design)
    return eta, epsilon, len(design), unit_cap_loss(fam)


def cap_loss_scaling(d, gamma, etas, eps_rule=None, seed=0):
    """Regress log unit-cap-loss on log eta across a grid of cap depths.

    The loss should scale like eta^((d+3)/2); the returned fit carries that
    target exponent.  Returns ``(RateFit, rows)`` with one
    (eta, epsilon, n, unit_loss) row per grid point.
    """
    rows = []
    for k, eta in enumerate(etas):
        if not (0.0 < eta <= 0.125):
            raise ValueError("every eta must lie in (0, 1/8]")
        rows.append(cap_loss_cell(d, gamma, eta, eps_rule=eps_rule,
                                  seed=seed + 7919 * k))
    points = [(eta, loss) for eta, _, _, loss in rows]
    fit = fit_rate(points, target_exponent=(d + 3) / 2.0)
    return fit, rows
