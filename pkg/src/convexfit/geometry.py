"""Bodies, support functions, distances and losses.

Two body representations are supported: vertex-list polytopes and balls
truncated by spherical caps.  Everything here is a pure function of
immutable inputs; values can be shared freely between workers.
"""

import math
from dataclasses import dataclass, field

import numpy as np

DEDUP_TOL = 1e-12
GAMMA_SLACK = 1e-9
CAP_ANGLE_TOL = 1e-12


def unit_vector(u, dim=None):
    """Validate a direction: a unit vector in R^d, d >= 2.

    Returns the direction as a float64 array.  Raises ValueError when the
    norm deviates from 1 by more than 1e-12 or the dimension is wrong.
    """
    v = np.asarray(u, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("direction must be a vector in R^d with d >= 2")
    if dim is not None and v.size != dim:
        raise ValueError(f"direction has dimension {v.size}, expected {dim}")
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("direction must have unit norm (within 1e-12)")
    return v


def direction_matrix(U, dim=None):
    """Validate a stack of directions of shape (n, d)."""
    A = np.atleast_2d(np.asarray(U, dtype=float))
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 2:
        raise ValueError("expected an (n, d) array of directions with d >= 2")
    if dim is not None and A.shape[1] != dim:
        raise ValueError(f"directions have dimension {A.shape[1]}, expected {dim}")
    norms = np.linalg.norm(A, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("all directions must have unit norm (within 1e-12)")
    return A


def dedup_points(points, tol=DEDUP_TOL):
    """Drop points within Euclidean distance `tol` of an earlier point."""
    pts = np.asarray(points, dtype=float)
    keep = []
    for row in pts:
        if keep and np.min(np.linalg.norm(np.asarray(keep) - row, axis=1)) <= tol:
            continue
        keep.append(row)
    return np.array(keep)


@dataclass(frozen=True)
class Polytope:
    """Convex hull of finitely many points, stored as a vertex list.

    The vertex list is deduplicated (within 1e-12) on construction.  An
    optional radius bound `gamma` tags the body as living in the centered
    ball of that radius; construction fails if a vertex escapes the ball
    by more than 1e-9.
    """

    vertices: np.ndarray
    gamma: float | None = None

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.size == 0:
            raise ValueError("polytope needs at least one vertex")
        if V.ndim != 2:
            raise ValueError("vertices must form an (k, d) array")
        V = dedup_points(V)
        object.__setattr__(self, "vertices", V)
        if self.gamma is not None:
            if np.any(np.linalg.norm(V, axis=1) > self.gamma + GAMMA_SLACK):
                raise ValueError(f"vertex outside the radius-{self.gamma} ball")

    @property
    def dim(self):
        return self.vertices.shape[1]


@dataclass(frozen=True)
class Cap:
    """A spherical cap: axis, depth parameter eta in (0, 1/8], truncation flag.

    The cap half-angle alpha satisfies cos(alpha) = 1 - eta.  A truncated cap
    cuts the ball with the halfspace x . axis <= gamma * (1 - eta); an
    untruncated cap is inert and only records the axis.
    """

    axis: np.ndarray
    eta: float
    truncated: bool = True

    def __post_init__(self):
        object.__setattr__(self, "axis", unit_vector(self.axis))
        if not (0.0 < self.eta <= 0.125):
            raise ValueError("cap depth eta must lie in (0, 1/8]")

    @property
    def alpha(self):
        # 2*asin(sqrt(eta/2)) == acos(1 - eta), stable for small eta
        return 2.0 * math.asin(math.sqrt(0.5 * self.eta))


@dataclass(frozen=True)
class CapBody:
    """A centered ball of radius gamma, truncated by pairwise-disjoint caps.

    Disjointness is enforced through the axes: for caps i, j the axis
    distance must be at least sqrt(2 eta_i) + sqrt(2 eta_j), so the regions
    where each cap changes the support function cannot overlap.
    """

    gamma: float
    caps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValueError("gamma must be positive")
        caps = tuple(self.caps)
        object.__setattr__(self, "caps", caps)
        if caps:
            dims = {c.axis.size for c in caps}
            if len(dims) > 1:
                raise ValueError("cap axes disagree on dimension")
            axes = np.array([c.axis for c in caps])
            radii = np.sqrt(2.0 * np.array([c.eta for c in caps]))
            for i in range(len(caps)):
                d_ij = np.linalg.norm(axes[i + 1 :] - axes[i], axis=1)
                if np.any(d_ij < radii[i + 1 :] + radii[i] - 1e-9):
                    raise ValueError("cap support regions overlap")

    @property
    def dim(self):
        if not self.caps:
            raise ValueError("a cap-free ball has no intrinsic dimension")
        return self.caps[0].axis.size


@dataclass(frozen=True)
class SupportSamples:
    """Directions paired with support values at those directions."""

    directions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        U = direction_matrix(self.directions)
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != U.shape[0]:
            raise ValueError("directions and values must have equal length")
        if v.size < 1:
            raise ValueError("need at least one sample")
        object.__setattr__(self, "directions", U)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def support_polytope(P, u):
    """Support function of a polytope: max over vertices of x . u."""
    u = unit_vector(u, dim=P.dim)
    return float(np.max(P.vertices @ u))


def _cap_deficits(body, U):
    """Support deficit of each direction relative to the full ball.

    Returns gamma * (1 - cos(alpha_j - theta)) for directions inside the
    truncated cap j, and 0 elsewhere.  Raises if a direction sits strictly
    inside two truncated caps, which signals an invalid cap family.
    """
    n = U.shape[0]
    deficit = np.zeros(n)
    interior_hits = np.zeros(n, dtype=int)
    for cap in body.caps:
        if not cap.truncated:
            continue
        # chord-based angle, accurate near theta = 0
        chord = np.linalg.norm(U - cap.axis, axis=1)
        theta = 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))
        alpha = cap.alpha
        inside = theta <= alpha + CAP_ANGLE_TOL
        interior_hits += theta < alpha - CAP_ANGLE_TOL
        if np.any(inside):
            deficit[inside] = body.gamma * (1.0 - np.cos(alpha - theta[inside]))
    if np.any(interior_hits > 1):
        raise ValueError("direction lies inside two truncated caps; "
                         "the cap family is not disjoint")
    return deficit


def support_cap_body(B, u):
    """Support function of a truncated ball.

    Equals gamma outside every truncated cap; inside the cap with axis v and
    half-angle alpha it drops to gamma * cos(alpha - theta), where theta is
    the angle between u and v.
    """
    if B.caps:
        u = unit_vector(u, dim=B.dim)
    else:
        u = unit_vector(u)
    deficit = _cap_deficits(B, u[None, :])[0]
    return float(B.gamma - deficit)


def support_values(body, U):
    """Support function of a body evaluated at a stack of directions."""
    if isinstance(body, Polytope):
        U = direction_matrix(U, dim=body.dim)
        return np.max(U @ body.vertices.T, axis=1)
    if isinstance(body, CapBody):
        U = direction_matrix(U, dim=body.dim if body.caps else None)
        return body.gamma - _cap_deficits(body, U)
    raise TypeError(f"unsupported body type {type(body).__name__}")


def support_samples(body, U):
    """Evaluate a body's support at directions U, packaged as SupportSamples."""
    U = direction_matrix(U)
    return SupportSamples(U, support_values(body, U))


def loss_f(A, B):
    """Fixed-design squared support loss: mean of squared value differences.

    Both sample sets must be taken at the same direction list.
    """
    if len(A) != len(B):
        raise ValueError("sample sets have different lengths")
    if not np.allclose(A.directions, B.directions, rtol=0.0, atol=1e-12):
        raise ValueError("sample sets were taken at different directions")
    diff = A.values - B.values
    return float(np.mean(diff * diff))


def _resolve_mc_directions(K, K2, nu_sampler, n_mc, rng):
    if isinstance(nu_sampler, np.ndarray):
        return direction_matrix(nu_sampler)
    if rng is None:
        raise ValueError("a Generator is required when nu_sampler is callable")
    return direction_matrix(nu_sampler(rng, int(n_mc)))


def loss_r_mc(K, K2, nu_sampler, n_mc, rng=None):
    """Monte Carlo estimate of the nu-integrated squared support loss.

    `nu_sampler` is either a callable ``(rng, n) -> (n, d) directions`` or a
    precomputed direction array (then `n_mc` and `rng` are ignored).  Returns
    ``(estimate, stderr)``.
    """
    if not isinstance(nu_sampler, np.ndarray) and n_mc < 2:
        raise ValueError("n_mc must be at least 2")
    U = _resolve_mc_directions(K, K2, nu_sampler, n_mc, rng)
    sq = (support_values(K, U) - support_values(K2, U)) ** 2
    n = sq.size
    est = float(np.mean(sq))
    stderr = float(np.std(sq, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return est, stderr


def loss_new(K, K2, sigma, nu_sampler, n_mc, rng=None):
    """Monte Carlo estimate of the log-integral loss.

    Computes ``-16 sigma^2 log mean(exp(-(h_K - h_K2)^2 / (16 sigma^2)))``
    over the sampled directions.  Never exceeds the plain squared loss on
    the same sample.
    """
    if not (sigma > 0):
        raise ValueError("sigma must be positive")
    U = _resolve_mc_directions(K, K2, nu_sampler, n_mc, rng)
    sq = (support_values(K, U) - support_values(K2, U)) ** 2
    expo = -sq / (16.0 * sigma * sigma)
    # log-mean-exp, stable even when every term underflows
    peak = np.max(expo)
    log_mean = peak + math.log(np.mean(np.exp(expo - peak)))
    return float(-16.0 * sigma * sigma * log_mean)


def _min_norm_point(Z, gap_tol=1e-10, max_iters=10_000):
    """Wolfe's active-set algorithm for the min-norm point of conv(rows of Z).

    Returns (x, gap) where gap = 2 * (x.x - min_i x.z_i) is the duality gap
    certifying optimality of x.
    """
    Z = np.asarray(Z, dtype=float)
    k = Z.shape[0]
    scale = max(1.0, float(np.max(np.sum(Z * Z, axis=1))))
    tol = gap_tol * scale

    start = int(np.argmin(np.sum(Z * Z, axis=1)))
    active = [start]
    w = np.array([1.0])
    x = Z[start].copy()

    for _ in range(max_iters):
        dots = Z @ x
        j = int(np.argmin(dots))
        gap = 2.0 * (float(x @ x) - float(dots[j]))
        if gap <= tol:
            return x, gap
        if j in active:
            return x, gap  # numerical fixed point
        active.append(j)
        w = np.append(w, 0.0)

        for _ in range(max_iters):
            Zs = Z[active]
            G = Zs @ Zs.T
            kk = len(active)
            A = np.zeros((kk + 1, kk + 1))
            A[:kk, :kk] = 2.0 * G
            A[:kk, kk] = 1.0
            A[kk, :kk] = 1.0
            b = np.zeros(kk + 1)
            b[kk] = 1.0
            try:
                v = np.linalg.solve(A, b)[:kk]
            except np.linalg.LinAlgError:
                v = np.linalg.lstsq(A, b, rcond=None)[0][:kk]
            if np.min(v) > -1e-14:
                w = np.maximum(v, 0.0)
                break
            # step toward v until the first weight hits zero, then drop it
            shrink = w - v
            mask = shrink > 1e-300
            theta = float(np.min(w[mask] / shrink[mask]))
            w = (1.0 - theta) * w + theta * v
            hit = int(np.argmin(np.where(mask, w, np.inf)))
            del active[hit]
            w = np.delete(w, hit)
        x = w @ Z[active]

    return x, 2.0 * (float(x @ x) - float(np.min(Z @ x)))


def project_point_to_polytope(x, Q, gap_tol=1e-10):
    """Euclidean projection of a point onto conv(Q).

    Returns ``(projection, distance)``.  The projection p satisfies the
    optimality certificate (x - p) . (v - p) <= tol for every vertex v.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != Q.dim:
        raise ValueError("point and polytope dimensions differ")
    Z = Q.vertices - x
    s, _ = _min_norm_point(Z, gap_tol=gap_tol)
    return x + s, float(np.linalg.norm(s))


def hausdorff_polytopes(P, Q):
    """Exact Hausdorff distance between two polytopes.

    The sup over a convex set of the (convex) distance-to-the-other-set
    function is attained at a vertex, so it suffices to project vertices.
    """
    if P.dim != Q.dim:
        raise ValueError("polytopes live in different dimensions")

    def one_sided(A, B):
        return max(project_point_to_polytope(v, B)[1] for v in A.vertices)

    return max(one_sided(P, Q), one_sided(Q, P))
