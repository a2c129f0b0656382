"""Synthetic experiments: data generation, risk curves, rate fits.

The whole pipeline is a pure function of an ExperimentSpec including its
master seed: per-trial generators are derived by counter-based seed
splitting, so results do not depend on execution order or worker count.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .estimators import (
    MeasurementSet,
    QPSettings,
    SieveConfig,
    choose_m,
    fit_ls_2d,
    fit_ls_full,
    fit_ls_net,
    fit_sieve_polytope,
)
from .geometry import CapBody, Polytope, support_values
from .spheres import evenly_spaced_circle, maximal_packing, uniform_directions

DESIGNS = ("uniform", "even2d", "packing")
SETTINGS = ("fixed", "random")
LOSS_MC_SAMPLES = 10_000


@dataclass(frozen=True)
class RiskEstimate:
    """Monte Carlo estimate of the risk at one sample size."""

    n: int
    loss_kind: str
    mean: float
    stderr: float
    reps: int
    uncertified: int = 0

    def __post_init__(self):
        if self.mean < 0 or self.stderr < 0:
            raise ValueError("risk mean and stderr must be nonnegative")


@dataclass(frozen=True)
class RateFit:
    """Log-log slope of risk against sample size, with a pass flag."""

    slope: float
    slope_stderr: float
    intercept: float
    n_points: int
    target_exponent: float | None = None
    tolerance: float | None = None

    @property
    def passed(self):
        if self.target_exponent is None or self.tolerance is None:
            return None
        return abs(self.slope - self.target_exponent) <= self.tolerance


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a risk experiment depends on, master seed included."""

    dim: int
    truth: object
    sigma: float
    gamma: float
    n_grid: tuple
    reps: int
    estimator: str = "sieve"
    estimator_options: dict = field(default_factory=dict)
    design: str = "even2d"
    setting: str = "fixed"
    epsilon: float | None = None
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.reps < 2:
            raise ValueError("reps must be at least 2")
        grid = tuple(int(n) for n in self.n_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if self.design not in DESIGNS:
            raise ValueError(f"design must be one of {DESIGNS}")
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}")
        if self.design in ("even2d", "packing") and self.setting != "fixed":
            raise ValueError(f"the {self.design} design is only meaningful "
                             "in the fixed setting")
        if self.design == "even2d" and self.dim != 2:
            raise ValueError("even2d design requires dim = 2")
        if self.design == "packing" and self.epsilon is None:
            raise ValueError("packing design requires epsilon")


def _check_truth_fits(K, gamma):
    if isinstance(K, Polytope):
        if np.any(np.linalg.norm(K.vertices, axis=1) > gamma + 1e-9):
            raise ValueError("truth body escapes the radius bound")
    elif isinstance(K, CapBody):
        if K.gamma > gamma + 1e-9:
            raise ValueError("truth body escapes the radius bound")
    else:
        raise TypeError(f"unsupported body type {type(K).__name__}")


def _design_directions(design, d, n, rng, epsilon=None):
    if design == "uniform":
        return uniform_directions(rng, d, n)
    if design == "even2d":
        return evenly_spaced_circle(n)
    if design == "packing":
        return maximal_packing(rng, d, epsilon).points
    raise ValueError(f"unknown design {design!r}")


def generate_data(K, design, n, sigma, gamma, seed, epsilon=None):
    """Draw a design, evaluate the truth's support exactly, add noise.

    `design` may also be a precomputed (n, d) direction array, in which case
    only the noise is drawn.  For the packing design the sample size is
    whatever the packing construction yields; `n` is ignored.
    """
    _check_truth_fits(K, gamma)
    rng = np.random.default_rng(seed)
    if isinstance(design, np.ndarray):
        U = design
    else:
        d = K.dim if not isinstance(K, CapBody) or K.caps else None
        if d is None:
            raise ValueError("pass an explicit design array for cap-free balls")
        U = _design_directions(design, d, n, rng, epsilon=epsilon)
    h = support_values(K, U)
    noise = sigma * rng.standard_normal(U.shape[0]) if sigma > 0 else 0.0
    return MeasurementSet(U, h + noise, sigma=sigma, gamma=gamma)


def _run_estimator(spec, data, rng):
    opts = dict(spec.estimator_options)
    if spec.estimator == "sieve":
        m = opts.pop("m", None)
        if m is None:
            m = choose_m(data.n, spec.dim, spec.sigma, spec.gamma,
                         setting=spec.setting)
        cfg = SieveConfig(m=m, **opts)
        return fit_sieve_polytope(data, cfg, rng)
    if spec.estimator == "full":
        return fit_ls_full(data, QPSettings(**opts) if opts else None)
    if spec.estimator == "qp2d":
        return fit_ls_2d(data, QPSettings(**opts) if opts else None)
    if spec.estimator == "net":
        family = opts.get("family")
        if not family:
            raise ValueError("net estimator needs a 'family' option")
        return fit_ls_net(data, family)
    raise ValueError(f"unknown estimator {spec.estimator!r}")


def _trial_loss(spec, n, trial, fixed_design):
    rng = np.random.default_rng(
        np.random.SeedSequence(spec.master_seed, spawn_key=(0, n, trial))
    )
    if fixed_design is not None:
        U = fixed_design
    else:
        U = _design_directions(spec.design, spec.dim, n, rng,
                               epsilon=spec.epsilon)
    h = support_values(spec.truth, U)
    y = h + (spec.sigma * rng.standard_normal(U.shape[0])
             if spec.sigma > 0 else 0.0)
    data = MeasurementSet(U, y, sigma=spec.sigma, gamma=spec.gamma)

    fit = _run_estimator(spec, data, rng)

    if spec.setting == "fixed":
        diff = h - fit.fitted_values.values
        loss = float(np.mean(diff * diff))
    else:
        sample = uniform_directions(rng, spec.dim, LOSS_MC_SAMPLES)
        diff = support_values(spec.truth, sample) - support_values(
            fit.polytope, sample
        )
        loss = float(np.mean(diff * diff))
    uncertified = int(fit.diagnostics.get("certified") is False)
    return loss, uncertified


def estimate_risk(spec, n):
    """Monte Carlo risk at sample size n: mean and stderr over spec.reps trials.

    Fixed setting: the design is drawn once from the master seed and the
    loss is evaluated on the design itself.  Random setting: a fresh design
    per trial and the loss is a fresh uniform Monte Carlo integral.
    """
    fixed_design = None
    if spec.setting == "fixed":
        rng = np.random.default_rng(
            np.random.SeedSequence(spec.master_seed, spawn_key=(1, n))
        )
        fixed_design = _design_directions(spec.design, spec.dim, n, rng,
                                          epsilon=spec.epsilon)
        if spec.design == "packing" and fixed_design.shape[0] != n:
            warnings.warn(
                f"packing design yielded {fixed_design.shape[0]} directions; "
                f"requested n={n} is ignored",
                stacklevel=2,
            )
            n = fixed_design.shape[0]

    losses = np.empty(spec.reps)
    flags = np.empty(spec.reps, dtype=int)

    def run(t):
        return _trial_loss(spec, n, t, fixed_design)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(run, range(spec.reps)))
    else:
        results = [run(t) for t in range(spec.reps)]
    for t, (loss, flag) in enumerate(results):
        losses[t] = loss
        flags[t] = flag

    return RiskEstimate(
        n=n,
        loss_kind="f" if spec.setting == "fixed" else "r",
        mean=float(np.mean(losses)),
        stderr=float(np.std(losses, ddof=1) / math.sqrt(spec.reps)),
        reps=spec.reps,
        uncertified=int(np.sum(flags)),
    )


def risk_curve(spec):
    """Risk estimates across the whole sample-size grid."""
    return [estimate_risk(spec, n) for n in spec.n_grid]


def fit_rate(points, target_exponent=None, tolerance=None):
    """Ordinary least squares of log(mean) on log(n).

    Nonpositive means are dropped with a warning; at least three surviving
    points are required.
    """
    pts = [(float(a), float(b)) for a, b in points]
    kept = [(a, b) for a, b in pts if b > 0]
    if len(kept) < len(pts):
        warnings.warn(f"dropped {len(pts) - len(kept)} nonpositive mean(s) "
                      "from the rate fit", stacklevel=2)
    if len(kept) < 3:
        raise ValueError("rate fit needs at least 3 points with positive mean")
    x = np.log([a for a, _ in kept])
    y = np.log([b for _, b in kept])
    A = np.column_stack([x, np.ones_like(x)])
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = y - A @ coef
    dof = max(1, len(kept) - 2)
    s2 = float(resid @ resid) / dof
    sxx = float(np.sum((x - np.mean(x)) ** 2))
    stderr = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    return RateFit(
        slope=slope,
        slope_stderr=stderr,
        intercept=intercept,
        n_points=len(kept),
        target_exponent=target_exponent,
        tolerance=tolerance,
    )


def rate_exponent(d):
    """The optimal risk decay exponent -4/(d+3)."""
    return -4.0 / (d + 3)


def regular_polygon(k, radius=1.0):
    """Regular k-gon inscribed in the circle of the given radius."""
    ang = 2.0 * math.pi * np.arange(k) / k
    return Polytope(radius * np.column_stack([np.cos(ang), np.sin(ang)]),
                    gamma=radius)


def benchmark_truths(d, gamma=1.0):
    """The desk-scale benchmark suite of truth bodies for dimension d."""
    if d == 2:
        return {
            "square": regular_polygon(4, gamma),
            "pentagon": regular_polygon(5, gamma),
            "segment": Polytope([[-gamma, 0.0], [gamma, 0.0]], gamma=gamma),
            "ball64": regular_polygon(64, gamma),
        }
    if d == 3:
        s = gamma / math.sqrt(3.0)
        simplex = Polytope(
            s * np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
                         dtype=float),
            gamma=gamma,
        )
        return {"simplex": simplex}
    raise ValueError("benchmark truths are defined for d in {2, 3}")


def named_truth(name, d, gamma=1.0):
    suite = benchmark_truths(d, gamma)
    if name not in suite:
        raise ValueError(f"unknown truth {name!r}; choose from {sorted(suite)}")
    return suite[name]


def suite_max_risk(base_spec, n):
    """Max risk over the benchmark suite: the desk-scale minimax surrogate."""
    results = {}
    for name, body in benchmark_truths(base_spec.dim, base_spec.gamma).items():
        results[name] = estimate_risk(replace(base_spec, truth=body), n)
    worst = max(results.values(), key=lambda r: r.mean)
    return worst, results
