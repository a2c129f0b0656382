"""Alternating-minimization kernel behind the vertex-budget estimator.

One restart alternates between assigning each measurement direction to its
support-attaining vertex and re-solving a small ridge least-squares problem
per vertex cluster, followed by radial projection onto the radius bound.
A candidate round is kept only when it does not increase the objective, so
the per-round objective trace is non-increasing by construction.

Two interchangeable implementations exist: this numpy one and a compiled
extension (`_kernels`).  The compiled kernel is preferred at import time;
set CONVEXFIT_BACKEND=python|compiled to force a choice.
"""

import os

import numpy as np

try:
    from . import _kernels

    HAVE_COMPILED = True
except ImportError:  # extension not built; the numpy path is fully equivalent
    _kernels = None
    HAVE_COMPILED = False

_env = os.environ.get("CONVEXFIT_BACKEND", "").strip().lower()
if _env in ("python", "py"):
    DEFAULT_BACKEND = "python"
elif _env in ("compiled", "c", "cython"):
    if not HAVE_COMPILED:
        raise ImportError("CONVEXFIT_BACKEND=compiled but convexfit._kernels "
                          "is not built")
    DEFAULT_BACKEND = "compiled"
else:
    DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "python"


def active_backend():
    return DEFAULT_BACKEND


def fit_restart(U, Y, V0, gamma, ridge, max_rounds, backend=None):
    """Run one restart from initial vertices V0.

    Returns ``(V, objective, trace)`` with `trace` the accepted per-round
    objective values (non-increasing, first entry is the objective at V0).
    """
    which = backend or DEFAULT_BACKEND
    if which == "compiled":
        V, obj, trace, rounds = _kernels.fit_restart(
            np.ascontiguousarray(U), np.ascontiguousarray(Y, dtype=float),
            np.ascontiguousarray(V0, dtype=float), float(gamma), float(ridge),
            int(max_rounds),
        )
        return V, obj, list(trace[: rounds + 1])
    if which != "python":
        raise ValueError(f"unknown backend {which!r}")
    return _fit_restart_py(U, Y, V0, gamma, ridge, max_rounds)


def _objective(U, Y, V):
    h = np.max(U @ V.T, axis=1)
    r = Y - h
    return float(r @ r)


def _fit_restart_py(U, Y, V0, gamma, ridge, max_rounds):
    n, d = U.shape
    V = np.array(V0, dtype=float)
    m = V.shape[0]
    ridge_eye = ridge * np.eye(d)
    YU = Y[:, None] * U
    outers = np.einsum("ki,kj->kij", U, U)

    def project(Vc):
        if np.isfinite(gamma):
            norms = np.linalg.norm(Vc, axis=1)
            over = norms > gamma
            if np.any(over):
                Vc[over] *= (gamma / norms[over])[:, None]
        return Vc

    obj = _objective(U, Y, V)
    trace = [obj]
    for _ in range(max_rounds):
        M = U @ V.T
        assign = np.argmax(M, axis=1)  # ties resolve to the lowest index
        counts = np.bincount(assign, minlength=m)

        G = np.zeros((m, d, d))
        B = np.zeros((m, d))
        np.add.at(G, assign, outers)
        np.add.at(B, assign, YU)
        Vsolved = np.linalg.solve(G + ridge_eye, B[..., None])[..., 0]

        # candidate ladder, first improvement wins: the solved step with dead
        # vertices reseeded, the plain solved step, then damped steps -- the
        # cluster solve minimizes a surrogate and can overshoot the true
        # objective, so undamped rounds are not descent steps by themselves
        candidates = []
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            reseeded = Vsolved.copy()
            # reseed at measurement-implied points the iterate fits worst
            resid = np.abs(Y - np.max(M, axis=1))
            order = np.argsort(-resid, kind="stable")
            for slot, j in enumerate(empty):
                reseeded[j] = YU[order[slot]]
            candidates.append(project(reseeded))
        candidates.append(project(Vsolved.copy()))
        step = 0.5
        for _ in range(6):
            candidates.append(project(V + step * (Vsolved - V)))
            step *= 0.5

        accepted = None
        for Vc in candidates:
            new_obj = _objective(U, Y, Vc)
            if new_obj <= obj:
                accepted = (Vc, new_obj)
                break
        if accepted is None:
            break
        V, new_obj = accepted
        improved = new_obj < obj
        obj = new_obj
        trace.append(obj)
        if not improved:
            break
    return V, obj, trace
