"""Direction designs on the unit sphere.

Uniform sampling, evenly spaced circle grids, and greedy maximal
epsilon-packings with a rejection-saturation stopping rule.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import direction_matrix
from .sieve import DEFAULT_BACKEND, _kernels

SATURATION_CAP = 1_000_000


@dataclass(frozen=True)
class PackingSet:
    """Directions with pairwise Euclidean distance >= epsilon.

    Built by `maximal_packing`; the saturation rule there is the proxy for
    maximality.  The packing property itself is exact and re-checked on
    construction.
    """

    dim: int
    epsilon: float
    points: np.ndarray

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 2.0):
            raise ValueError("epsilon must lie in (0, 2]")
        pts = direction_matrix(self.points, dim=self.dim)
        object.__setattr__(self, "points", pts)
        n = pts.shape[0]
        if n > 1:
            gram = pts @ pts.T
            np.fill_diagonal(gram, -1.0)
            min_sq = 2.0 - 2.0 * float(np.max(gram))
            if min_sq < self.epsilon**2 - 1e-12:
                raise ValueError("points violate the packing property")

    def __len__(self):
        return self.points.shape[0]


def uniform_direction(rng, d):
    """One direction distributed uniformly on the unit sphere in R^d."""
    return uniform_directions(rng, d, 1)[0]


def uniform_directions(rng, d, n):
    """n iid uniform directions, as an (n, d) array."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    out = np.empty((n, d))
    filled = 0
    while filled < n:
        x = rng.standard_normal((n - filled, d))
        norms = np.linalg.norm(x, axis=1)
        ok = norms > 1e-12
        m = int(np.count_nonzero(ok))
        out[filled : filled + m] = x[ok] / norms[ok, None]
        filled += m
    return out


def evenly_spaced_circle(n):
    """n directions at angles 2*pi*k/n on the unit circle, k = 0..n-1."""
    if n < 1:
        raise ValueError("n must be at least 1")
    step = 2.0 * math.pi / n
    angles = np.arange(n) * step
    return np.column_stack([np.cos(angles), np.sin(angles)])


def default_saturation(d, epsilon):
    """Default rejection budget: 200 * epsilon^(1-d), capped at 1e6."""
    return int(min(SATURATION_CAP, math.ceil(200.0 * epsilon ** (1 - d))))


def maximal_packing(rng, d, epsilon, saturation=None, backend=None):
    """Greedy epsilon-packing of the unit sphere.

    Uniform candidates are accepted when at distance >= epsilon from every
    accepted point; construction stops after `saturation` consecutive
    rejections.  The packing property of the output is exact; maximality
    holds with probability approaching 1 as the saturation budget grows.
    """
    if not (0.0 < epsilon <= 2.0):
        raise ValueError("epsilon must lie in (0, 2]")
    if saturation is None:
        saturation = default_saturation(d, epsilon)
    if saturation < 1:
        raise ValueError("saturation must be at least 1")

    # accept iff every pairwise distance >= epsilon, i.e. every dot product
    # is at most this threshold
    dot_cap = 1.0 - 0.5 * epsilon * epsilon
    buf = np.empty((1024, d))
    count = 0
    rejections = 0
    block = 512
    compiled = (backend or DEFAULT_BACKEND) == "compiled"
    while rejections < saturation:
        cands = uniform_directions(rng, d, block)
        while count + block > buf.shape[0]:
            buf = np.concatenate([buf, np.empty_like(buf)])
        if compiled:
            count, rejections = _kernels.pack_block(
                cands, buf, count, dot_cap, rejections, saturation
            )
            continue
        if count:
            # one matmul rejects candidates against the block-start set; the
            # few survivors are then walked in draw order against points
            # accepted within the block, so the outcome and the consecutive
            # rejection count match fully sequential processing
            ok = np.max(cands @ buf[:count].T, axis=1) <= dot_cap
        else:
            ok = np.ones(block, dtype=bool)
        start = count
        pos = 0
        for i in np.flatnonzero(ok):
            rejections += int(i) - pos
            pos = int(i) + 1
            if rejections >= saturation:
                break
            cand = cands[i]
            if count > start and float(np.max(buf[start:count] @ cand)) > dot_cap:
                rejections += 1
                continue
            buf[count] = cand
            count += 1
            rejections = 0
        else:
            rejections += block - pos
    return PackingSet(dim=d, epsilon=epsilon, points=buf[:count].copy())


def cap_measure_mc(rng, d, delta, n_mc):
    """Monte Carlo estimate of the uniform measure of a spherical cap.

    The cap consists of directions within Euclidean distance delta of a
    fixed pole (rotation invariance makes the pole irrelevant), equivalently
    with first coordinate >= 1 - delta^2 / 2.
    """
    if not (0.0 < delta <= 2.0):
        raise ValueError("delta must lie in (0, 2]")
    if n_mc < 100:
        raise ValueError("n_mc must be at least 100")
    U = uniform_directions(rng, d, n_mc)
    return float(np.mean(U[:, 0] >= 1.0 - 0.5 * delta * delta))


def count_packing_in_cap(pack, v, delta):
    """Number of packing points within Euclidean distance delta of v.

    Warns when the count-scaling hypotheses (epsilon <= delta/2 and
    delta <= 4/5) do not hold, since the (delta/epsilon)^(d-1) scaling is
    only guaranteed in that regime.
    """
    v = np.asarray(v, dtype=float)
    if not (pack.epsilon <= delta / 2.0 and delta <= 0.8):
        warnings.warn(
            "count_packing_in_cap called outside the regime "
            "epsilon <= delta/2, delta <= 4/5; the scaling bound may fail",
            stacklevel=2,
        )
    dist = np.linalg.norm(pack.points - v, axis=1)
    return int(np.count_nonzero(dist <= delta))
