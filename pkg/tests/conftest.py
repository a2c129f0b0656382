import numpy as np
import pytest

from convexfit.geometry import Polytope
from convexfit.spheres import uniform_directions


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_polytope(rng, d, k_max=8, radius=1.0):
    """A random polytope inside the radius ball (vertices not on a sphere)."""
    k = int(rng.integers(2, k_max + 1))
    pts = rng.uniform(-1.0, 1.0, size=(k, d))
    norms = np.linalg.norm(pts, axis=1)
    scale = radius * rng.uniform(0.2, 0.95)
    pts = pts / max(1e-9, float(np.max(norms))) * scale
    return Polytope(pts, gamma=radius)


def sample_truncated_ball(rng, d, gamma, axis, eta, n_points):
    """Boundary points of the cut ball: sphere samples obeying the cut, the
    cut disk's rim, and the cap contact point.  Used as the brute-force
    support oracle; every returned point lies in the body."""
    pts = gamma * uniform_directions(rng, d, n_points)
    keep = pts @ axis <= gamma * (1.0 - eta) + 1e-15
    pts = pts[keep]
    # rim of the cut disk: radius gamma*sqrt(eta(2-eta)) around the axis
    rim_r = gamma * np.sqrt(eta * (2.0 - eta))
    raw = rng.standard_normal((max(200, n_points // 10), d))
    raw -= (raw @ axis)[:, None] * axis[None, :]
    norms = np.linalg.norm(raw, axis=1)
    raw = raw[norms > 1e-9] / norms[norms > 1e-9, None]
    rim = gamma * (1.0 - eta) * axis[None, :] + rim_r * raw
    return np.vstack([pts, rim])
