"""Solvers for the two least-squares support-fitting programs.

The point-variable program (all convex bodies) is solved by an
augmented-Lagrangian outer loop with damped semismooth-Newton inner
minimization; its constraint set is massively redundant whenever fitted
points coincide, which first-order splitting handles poorly.  The 2-D
support-cone projection is strongly convex and is solved by over-relaxed,
penalty-adaptive ADMM with an active-set polish.  Either way a result is
reported certified only when the recomputed KKT residuals (stationarity,
feasibility, complementarity; infinity norms, normalized by the data
scale) fall below the requested tolerance.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass
class KKTReport:
    stationarity: float
    feasibility: float
    complementarity: float
    iterations: int
    certified: bool
    rho: float
    polished: bool = False

    @property
    def residual(self):
        return max(self.stationarity, self.feasibility, self.complementarity)


def _factor(K):
    jitter = 0.0
    base = float(np.mean(np.diag(K))) or 1.0
    for _ in range(6):
        try:
            return scipy.linalg.cho_factor(
                K + jitter * np.eye(K.shape[0]), lower=True, check_finite=False
            )
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-12 * base)
    raise np.linalg.LinAlgError("QP system matrix could not be factorized")


# ---------------------------------------------------------------------------
# full least squares: point variables x_1..x_n, constraints u_j.(x_i-x_j) <= 0


def _gt_apply(T, U):
    """Apply G^T to an (n, n) multiplier array T (diagonal ignored)."""
    T = T.copy()
    np.fill_diagonal(T, 0.0)
    return T @ U - T.sum(axis=0)[:, None] * U


def _full_constraint_values(U, X):
    M = X @ U.T
    g = M - np.diag(M)[None, :]
    np.fill_diagonal(g, 0.0)
    return M, g


def _full_kkt(U, Y, X, lam, scale):
    M, g = _full_constraint_values(U, X)
    r_feas = float(np.max(np.maximum(g, 0.0)))
    resid = np.diag(M) - Y
    stat = 2.0 * resid[:, None] * U + _gt_apply(lam, U)
    r_stat = float(np.max(np.abs(stat)))
    r_comp = float(np.max(np.abs(lam * g)))
    return r_stat / scale, r_feas / scale, r_comp / (scale * scale)


def _al_value(U, Y, X, lam, rho):
    M, g = _full_constraint_values(U, X)
    resid = np.diag(M) - Y
    t = np.maximum(lam + rho * g, 0.0)
    return float(resid @ resid) + (float(np.sum(t * t)) -
                                   float(np.sum(lam * lam))) / (2.0 * rho)


def _al_hessian(U, P, act, rho):
    """Generalized Hessian of the augmented Lagrangian at the active mask."""
    n, d = U.shape
    blocks = np.zeros((n, n, d, d))
    a = act.astype(float)
    # off-diagonal couplings from active pairs (i, j): -P_j at (i,j) and (j,i)
    blocks -= a[:, :, None, None] * P[None, :, :, :]
    blocks -= a.T[:, :, None, None] * P[:, None, :, :]
    diag = np.einsum("ij,jkl->ikl", a, P)
    counts = a.sum(axis=0)
    idx = np.arange(n)
    blocks[idx, idx] += diag + counts[:, None, None] * P
    H = rho * blocks.transpose(0, 2, 1, 3).reshape(n * d, n * d)
    for i in range(n):
        H[i * d : (i + 1) * d, i * d : (i + 1) * d] += 2.0 * P[i]
    return H


def solve_support_qp_full(U, Y, settings):
    """Point-variable least squares over all convex bodies.

    Minimizes sum_i (Y_i - u_i . x_i)^2 subject to u_j . x_i <= u_j . x_j
    for all i != j, by an augmented-Lagrangian outer loop whose inner
    problems are minimized with a damped semismooth Newton method.  Returns
    ``(X, lam, report)`` with the KKT certificate for the final iterate.
    """
    n, d = U.shape
    if n == 1:
        # single measurement: no constraints; minimum-norm stationary point
        X = Y[:, None] * U
        return X, np.zeros((1, 1)), KKTReport(0.0, 0.0, 0.0, 0, True, 0.0)

    scale = max(1.0, float(np.max(np.abs(Y))))
    tol = settings.kkt_tol
    P = np.einsum("ki,kj->kij", U, U)
    rho = settings.rho
    X = Y[:, None] * U  # measurement-implied warm start
    lam = np.zeros((n, n))
    total_newton = 0
    feas_prev = math.inf
    best = None

    for outer in range(200):
        inner_tol = max(0.05 * tol, 10.0 ** (-2 - outer)) * scale
        inner_converged = False
        for _ in range(60):
            if total_newton >= settings.max_iters:
                break
            M, g = _full_constraint_values(U, X)
            t = lam + rho * g
            act = t > 0.0
            np.fill_diagonal(act, False)
            grad = (2.0 * (np.diag(M) - Y)[:, None] * U
                    + _gt_apply(np.where(act, t, 0.0), U))
            if float(np.max(np.abs(grad))) <= inner_tol:
                inner_converged = True
                break
            Hess = _al_hessian(U, P, act, rho)
            chol = _factor(Hess)
            step = scipy.linalg.cho_solve(
                chol, -grad.reshape(-1), check_finite=False
            ).reshape(n, d)
            total_newton += 1

            # Armijo backtracking; the full step is almost always accepted
            phi0 = _al_value(U, Y, X, lam, rho)
            slope = float(np.sum(grad * step))
            alpha = 1.0
            for _ in range(40):
                X_try = X + alpha * step
                if _al_value(U, Y, X_try, lam, rho) <= phi0 + 1e-4 * alpha * slope:
                    break
                alpha *= 0.5
            X = X + alpha * step
            if alpha * float(np.max(np.abs(step))) <= 1e-14 * scale:
                break  # exactly tied active sets; the iterate has stalled

        M, g = _full_constraint_values(U, X)
        lam = np.maximum(lam + rho * g, 0.0)
        np.fill_diagonal(lam, 0.0)
        r_stat, r_feas, r_comp = _full_kkt(U, Y, X, lam, scale)
        resid = max(r_stat, r_feas, r_comp)
        if best is None or resid < best[0]:
            best = (resid, X.copy(), lam.copy(), r_stat, r_feas, r_comp, rho)
        if resid <= tol:
            return X, lam, KKTReport(r_stat, r_feas, r_comp, total_newton,
                                     True, rho)
        if total_newton >= settings.max_iters:
            break
        if not inner_converged or r_feas > 0.25 * feas_prev:
            # AL penalties need headroom well past the splitting-scale bound
            rho = min(rho * 10.0, settings.rho_max * 1e4)
        feas_prev = r_feas

    _, X, lam, r_stat, r_feas, r_comp, rho = best
    report = KKTReport(r_stat, r_feas, r_comp, total_newton, False, rho)
    report.certified = report.residual <= tol
    return X, lam, report


# ---------------------------------------------------------------------------
# 2-D support-vector projection: variables h, constraints A h >= 0


def circular_constraint_matrix(angles, normalize=True):
    """Second-difference support-vector constraints for sorted 2-D angles.

    Row i encodes  h_{i-1} sin(g_i) + h_{i+1} sin(g_{i-1})
    - h_i sin(g_{i-1} + g_i) >= 0  with g_i the gap following angle i
    (indices circular).  Valid when every gap is below pi.  Rows are scaled
    to unit norm by default; the constraint set is unchanged.
    """
    th = np.asarray(angles, dtype=float)
    n = th.size
    gaps = np.diff(np.append(th, th[0] + 2.0 * math.pi))
    if np.any(gaps <= 0):
        raise ValueError("angles must be strictly increasing on the circle")
    if np.any(gaps >= math.pi - 1e-9):
        raise ValueError("an angular gap of pi or more leaves the "
                         "circular convexity constraints invalid")
    A = np.zeros((n, n))
    idx = np.arange(n)
    A[idx, (idx - 1) % n] += np.sin(gaps)
    A[idx, (idx + 1) % n] += np.sin(gaps[(idx - 1) % n])
    A[idx, idx] += -np.sin(gaps[(idx - 1) % n] + gaps)
    if normalize:
        A /= np.linalg.norm(A, axis=1)[:, None]
    return A


def _2d_kkt(A, W_diag, Ybar, h, lam, scale):
    Ah = A @ h
    r_feas = float(np.max(np.maximum(-Ah, 0.0)))
    stat = 2.0 * W_diag * (h - Ybar) - A.T @ lam
    r_stat = float(np.max(np.abs(stat)))
    r_comp = float(np.max(np.abs(lam * Ah)))
    return r_stat / scale, r_feas / scale, r_comp / (scale * scale)


def _2d_polish(A, W_diag, Ybar, lam_guess, Ah, scale, tol, max_rounds=14):
    """Active-set polish for the 2-D cone projection: drop negative
    multipliers, add violated rows, certify on a clean set."""
    n = Ybar.size
    peak = float(np.max(lam_guess)) if lam_guess.size else 0.0
    mask = (lam_guess > 1e-9 * max(peak, 1.0)) | (Ah < 1e-9 * scale)

    seen = set()
    for _ in range(max_rounds):
        active = np.flatnonzero(mask)
        key = active.tobytes()
        if key in seen or active.size == 0:
            return None
        seen.add(key)

        k = active.size
        A_a = A[active]
        KKT = np.zeros((n + k, n + k))
        KKT[:n, :n] = 2.0 * np.diag(W_diag)
        KKT[:n, n:] = -A_a.T
        KKT[n:, :n] = A_a
        rhs = np.concatenate([2.0 * W_diag * Ybar, np.zeros(k)])
        sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
        h = sol[:n]
        mu = sol[n:]

        Ah_val = A @ h
        negative = mu < -1e-9 * scale
        violated = (Ah_val < -1e-11 * scale) & ~mask
        if not negative.any() and not violated.any():
            lam = np.zeros(n)
            lam[active] = np.maximum(mu, 0.0)
            r_stat, r_feas, r_comp = _2d_kkt(A, W_diag, Ybar, h, lam, scale)
            if max(r_stat, r_feas, r_comp) <= tol:
                return h, lam
            return None
        mask[active[negative]] = False
        mask |= violated
    return None


def solve_support_qp_2d(angles, Ybar, weights, settings):
    """Projection of observed support values onto the 2-D support cone.

    Minimizes sum_g w_g (h_g - Ybar_g)^2 subject to A h >= 0 with A the
    circular constraint matrix.  Returns ``(h, lam, report)``.
    """
    A = circular_constraint_matrix(angles)
    n = Ybar.size
    scale = max(1.0, float(np.max(np.abs(Ybar))))
    tol = settings.kkt_tol

    # already feasible: the projection is the data itself
    if np.all(A @ Ybar >= 0.0):
        return Ybar.copy(), np.zeros(n), KKTReport(0.0, 0.0, 0.0, 0, True, 0.0)

    rho = settings.rho
    alpha = settings.over_relax
    W_diag = np.asarray(weights, dtype=float)
    H = 2.0 * np.diag(W_diag)
    AtA = A.T @ A
    chol = _factor(H + rho * AtA)
    b0 = 2.0 * W_diag * Ybar

    s = np.zeros(n)
    w = np.zeros(n)
    h = Ybar.copy()
    it = 0
    last_polish_resid = math.inf
    while it < settings.max_iters:
        burst = min(settings.check_every, settings.max_iters - it)
        for _ in range(burst):
            rhs = b0 + rho * A.T @ (s - w)
            h = scipy.linalg.cho_solve(chol, rhs, check_finite=False)
            Ah = A @ h
            ah_rel = alpha * Ah + (1.0 - alpha) * s
            s_old = s
            v = ah_rel + w
            s = np.maximum(v, 0.0)
            w = v - s
        it += burst

        lam = -rho * w
        Ah = A @ h
        r_stat, r_feas, r_comp = _2d_kkt(A, W_diag, Ybar, h, lam, scale)
        resid = max(r_stat, r_feas, r_comp)
        if resid <= tol:
            return h, lam, KKTReport(r_stat, r_feas, r_comp, it, True, rho)
        stalled = it % 10_000 == 0
        if (resid <= 1e-3 and resid < 0.25 * last_polish_resid) or stalled:
            last_polish_resid = min(last_polish_resid, resid)
            polished = _2d_polish(A, W_diag, Ybar, lam, Ah, scale, tol)
            if polished is not None:
                hp, lamp = polished
                r_stat, r_feas, r_comp = _2d_kkt(A, W_diag, Ybar, hp, lamp, scale)
                return hp, lamp, KKTReport(
                    r_stat, r_feas, r_comp, it, True, rho, polished=True
                )

        if it % 500 == 0:
            r_primal = float(np.linalg.norm(A @ h - s))
            r_dual = rho * float(np.linalg.norm(A.T @ (s - s_old)))
            if r_dual > 0 and r_primal > 0:
                ratio = math.sqrt(r_primal / r_dual)
                if ratio > 3.16 or ratio < 0.316:
                    new_rho = min(settings.rho_max,
                                  max(settings.rho_min,
                                      rho * min(5.0, max(0.2, ratio))))
                    if new_rho != rho:
                        w = w * (rho / new_rho)
                        rho = new_rho
                        chol = _factor(H + rho * AtA)

    lam = -rho * w
    r_stat, r_feas, r_comp = _2d_kkt(A, W_diag, Ybar, h, lam, scale)
    report = KKTReport(r_stat, r_feas, r_comp, it, False, rho)
    report.certified = report.residual <= tol
    return h, lam, report


def reconstruct_polygon(angles, h, filter_tol=None):
    """Vertices of the 2-D body with support h at sorted design angles.

    Each candidate vertex is the intersection of the support lines of two
    consecutive directions; candidates violating any other support line by
    more than `filter_tol` (spurious corners from near-parallel lines) are
    dropped, unless that would drop everything.
    """
    th = np.asarray(angles, dtype=float)
    n = th.size
    nxt = (np.arange(n) + 1) % n
    det = np.sin(th[nxt] - th)
    det[n - 1] = math.sin(th[0] + 2.0 * math.pi - th[n - 1])
    x = (h * np.sin(th[nxt]) - h[nxt] * np.sin(th)) / det
    y = (h[nxt] * np.cos(th) - h * np.cos(th[nxt])) / det
    pts = np.column_stack([x, y])
    if filter_tol is not None:
        Udir = np.column_stack([np.cos(th), np.sin(th)])
        violation = np.max(pts @ Udir.T - h[None, :], axis=1)
        keep = violation <= filter_tol
        if np.any(keep):
            pts = pts[keep]
    return pts
