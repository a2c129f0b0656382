"""Least-squares estimators of a convex body from support measurements.

Three fitting routes: the full least-squares fit over all convex bodies
(a QP in point variables), the 2-D support-vector projection QP, and the
vertex-budget fit over polytopes with at most m vertices inside the radius
bound (alternating minimization with restarts).  A fourth route minimizes
the criterion over an explicit finite family.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import qp, sieve
from .geometry import Polytope, SupportSamples, direction_matrix, support_values


@dataclass(frozen=True)
class MeasurementSet:
    """Paired directions and noisy support values, with noise level and
    radius bound attached."""

    directions: np.ndarray
    values: np.ndarray
    sigma: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        U = direction_matrix(self.directions)
        y = np.asarray(self.values, dtype=float).ravel()
        if y.size != U.shape[0] or y.size < 1:
            raise ValueError("directions and values must have equal length >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not (self.gamma > 0):
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "directions", U)
        object.__setattr__(self, "values", y)

    @property
    def n(self):
        return self.values.size

    @property
    def dim(self):
        return self.directions.shape[1]


@dataclass(frozen=True)
class QPSettings:
    kkt_tol: float = 1e-8
    max_iters: int = 200_000
    rho: float = 1.0
    over_relax: float = 1.6
    check_every: int = 25
    rho_min: float = 1e-6
    rho_max: float = 1e6
    size_cap: int = 2000  # refuse the dense point-variable QP beyond n*d

    def __post_init__(self):
        if not (self.kkt_tol > 0):
            raise ValueError("kkt_tol must be positive")


@dataclass(frozen=True)
class SieveConfig:
    m: int
    restarts: int = 20
    max_rounds: int = 200
    ridge: float = 1e-10
    init_vertices: tuple = ()
    workers: int = 1
    backend: str | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("vertex budget m must be at least 1")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if not (self.ridge > 0):
            raise ValueError("ridge must be positive")
        object.__setattr__(self, "init_vertices", tuple(self.init_vertices))


@dataclass(frozen=True)
class FitResult:
    """Fitted body with its support values at the design and diagnostics.

    `fitted_values` are recomputed exactly from the returned body, so the
    objective always matches a recomputation from the polytope.
    """

    polytope: object
    fitted_values: SupportSamples
    objective: float
    diagnostics: dict = field(default_factory=dict)


def _result(body, data, diagnostics):
    fitted = support_values(body, data.directions)
    resid = data.values - fitted
    return FitResult(
        polytope=body,
        fitted_values=SupportSamples(data.directions, fitted),
        objective=float(resid @ resid),
        diagnostics=diagnostics,
    )


def fit_ls_full(data, settings=None):
    """Full least-squares estimator via the point-variable QP.

    Solves min sum_i (Y_i - u_i . x_i)^2 over points x_1..x_n subject to
    u_j . x_i <= u_j . x_j (i != j) and returns conv{x_1..x_n}.  The
    minimizing body is not unique; only the fitted support values and the
    objective are contract-bearing.
    """
    settings = settings or QPSettings()
    n, d = data.directions.shape
    if n * d > settings.size_cap:
        raise ValueError(
            f"problem size n*d = {n * d} exceeds the QP size cap "
            f"{settings.size_cap}"
        )
    X, lam, report = qp.solve_support_qp_full(data.directions, data.values, settings)
    if not report.certified:
        warnings.warn(
            f"full QP not certified after {report.iterations} iterations "
            f"(KKT residual {report.residual:.3e})",
            stacklevel=2,
        )
    body = Polytope(X)
    return _result(
        body,
        data,
        {
            "method": "full_qp",
            "iterations": report.iterations,
            "kkt": {
                "stationarity": report.stationarity,
                "feasibility": report.feasibility,
                "complementarity": report.complementarity,
            },
            "certified": report.certified,
            "rho": report.rho,
        },
    )


def fit_ls_2d(data, settings=None):
    """Prince-Willsky style 2-D fit: project Y onto the support cone.

    Directions are sorted by angle (duplicates collapsed by averaging their
    observations); the QP is solved in the support values h subject to the
    circular convexity constraints, and a polygon realizing h is rebuilt
    from consecutive support-line intersections.  Degenerate angle layouts
    (fewer than three distinct angles, or a gap of pi or more) fall back to
    the full QP.
    """
    settings = settings or QPSettings()
    if data.dim != 2:
        raise ValueError("fit_ls_2d requires d = 2")
    U, Y = data.directions, data.values
    theta = np.mod(np.arctan2(U[:, 1], U[:, 0]), 2.0 * math.pi)
    order = np.argsort(theta, kind="stable")

    # group duplicate angles (tolerance 1e-12, including the 0 / 2pi wrap)
    groups = []
    for idx in order:
        if groups and theta[idx] - theta[groups[-1][0]] <= 1e-12:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    if len(groups) > 1 and (theta[groups[0][0]] + 2.0 * math.pi
                            - theta[groups[-1][0]]) <= 1e-12:
        groups[0] = groups.pop() + groups[0]

    if len(groups) < 3:
        res = fit_ls_full(data, settings)
        res.diagnostics["fallback"] = "fewer than 3 distinct angles"
        res.diagnostics["method"] = "qp_2d->full_qp"
        return res

    ang = np.array([theta[g[0]] for g in groups])
    wts = np.array([len(g) for g in groups], dtype=float)
    ybar = np.array([float(np.mean(Y[g])) for g in groups])

    gaps = np.diff(np.append(ang, ang[0] + 2.0 * math.pi))
    if np.any(gaps >= math.pi - 1e-9):
        res = fit_ls_full(data, settings)
        res.diagnostics["fallback"] = "angular gap >= pi"
        res.diagnostics["method"] = "qp_2d->full_qp"
        return res

    h, lam, report = qp.solve_support_qp_2d(ang, ybar, wts, settings)
    if not report.certified:
        warnings.warn(
            f"2-D QP not certified after {report.iterations} iterations "
            f"(KKT residual {report.residual:.3e})",
            stacklevel=2,
        )
    scale = max(1.0, float(np.max(np.abs(ybar))))
    body = Polytope(qp.reconstruct_polygon(
        ang, h, filter_tol=max(100.0 * settings.kkt_tol, 1e-9) * scale))
    recon_gap = float(
        np.max(np.abs(np.max(np.column_stack([np.cos(ang), np.sin(ang)])
                             @ body.vertices.T, axis=1) - h))
    )
    if recon_gap > max(1e3 * settings.kkt_tol, 1e-6) * scale:
        # near-parallel support lines made the polygon rebuild unreliable;
        # the point-variable program has no such step
        res = fit_ls_full(data, settings)
        res.diagnostics["fallback"] = "reconstruction gap too large"
        res.diagnostics["method"] = "qp_2d->full_qp"
        res.diagnostics["reconstruction_gap"] = recon_gap
        return res
    return _result(
        body,
        data,
        {
            "method": "qp_2d",
            "iterations": report.iterations,
            "kkt": {
                "stationarity": report.stationarity,
                "feasibility": report.feasibility,
                "complementarity": report.complementarity,
            },
            "certified": report.certified,
            "rho": report.rho,
            "distinct_angles": len(groups),
            "reconstruction_gap": recon_gap,
        },
    )


def fit_sieve_polytope(data, config, rng):
    """Least squares over polytopes with at most m vertices in the ball.

    Alternating minimization: assign directions to their support-attaining
    vertices, refit each vertex by ridge least squares on its cluster,
    reseed dead vertices, project radially onto the radius bound.  Rounds
    that would increase the objective are rejected (the restart then stops),
    so every logged objective trace is non-increasing.  The best of
    `config.restarts` random initializations plus any warm starts is
    returned; only local optimality is claimed.
    """
    n, d = data.directions.shape
    m = config.m
    clamped = False
    if m > n:
        warnings.warn(f"vertex budget m={m} exceeds n={n}; clamping to n",
                      stacklevel=2)
        m = n
        clamped = True

    U, Y = data.directions, data.values
    YU = Y[:, None] * U
    gamma = data.gamma

    def ball_clip(V0):
        if not math.isfinite(gamma):
            return V0
        norms = np.linalg.norm(V0, axis=1)
        over = norms > gamma
        if np.any(over):
            V0 = V0.copy()
            V0[over] *= (gamma / norms[over])[:, None]
        return V0

    inits = []
    for V0 in config.init_vertices:
        V0 = np.atleast_2d(np.asarray(V0, dtype=float))
        if V0.shape[0] > m or V0.shape[1] != d:
            raise ValueError("warm start must have at most m vertices in R^d")
        inits.append(ball_clip(V0))
    for _ in range(config.restarts):
        idx = rng.choice(n, size=m, replace=False)
        inits.append(ball_clip(YU[idx]))

    def run(V0):
        return sieve.fit_restart(U, Y, V0, gamma, config.ridge,
                                 config.max_rounds, backend=config.backend)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(run, inits))
    else:
        outcomes = [run(V0) for V0 in inits]

    best = 0
    for k in range(1, len(outcomes)):
        if outcomes[k][1] < outcomes[best][1]:
            best = k
    V, _, _ = outcomes[best]

    body = Polytope(V, gamma=None if math.isinf(gamma) else gamma)
    return _result(
        body,
        data,
        {
            "method": "sieve",
            "m": m,
            "m_clamped": clamped,
            "restart_index": best,
            "rounds": len(outcomes[best][2]) - 1,
            "traces": [o[2] for o in outcomes],
            "backend": config.backend or sieve.active_backend(),
        },
    )


def fit_ls_net(data, family):
    """Least squares over an explicit finite family of bodies.

    Ties break toward the earliest family member.
    """
    family = list(family)
    if not family:
        raise ValueError("family must be nonempty")
    objectives = []
    for body in family:
        resid = data.values - support_values(body, data.directions)
        objectives.append(float(resid @ resid))
    best = int(np.argmin(objectives))  # first minimum wins
    return _result(
        family[best],
        data,
        {
            "method": "net",
            "family_size": len(family),
            "best_index": best,
            "objectives": objectives,
        },
    )


def choose_m(n, d, sigma=1.0, gamma=1.0, setting="fixed"):
    """Vertex budget matching the optimal-rate tuning.

    fixed:  m = (gamma/sigma)^(2(d-1)/(d+3)) * n^((d-1)/(d+3))
    random: m = n^((d-1)/(d+3))
    Clamped below at 1.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    expo = (d - 1) / (d + 3)
    if setting == "fixed":
        if not (sigma > 0 and gamma > 0):
            raise ValueError("fixed setting requires positive sigma and gamma")
        value = (gamma / sigma) ** (2.0 * expo) * n**expo
    elif setting == "random":
        value = n**expo
    else:
        raise ValueError("setting must be 'fixed' or 'random'")
    return max(1, int(round(value)))
