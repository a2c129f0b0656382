# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: the sieve round loop and the packing scan.

Each kernel mirrors its numpy twin exactly: same assignment tie-break
(lowest index), same reseeding order, same accept-only-if-not-worse round
rule, and the same candidate-order rejection accounting in the packing
scan.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

cnp.import_array()


cdef int _solve_small(double[:, ::1] A, double[::1] b, double[::1] x, int d) noexcept nogil:
    # Gaussian elimination with partial pivoting, in place on copies held by
    # the caller.  Returns 0 on success, 1 on a (numerically) singular pivot.
    cdef int i, j, k, piv
    cdef double best, tmp, factor
    for k in range(d):
        piv = k
        best = A[k, k] if A[k, k] >= 0 else -A[k, k]
        for i in range(k + 1, d):
            tmp = A[i, k] if A[i, k] >= 0 else -A[i, k]
            if tmp > best:
                best = tmp
                piv = i
        if best == 0.0:
            return 1
        if piv != k:
            for j in range(d):
                tmp = A[k, j]
                A[k, j] = A[piv, j]
                A[piv, j] = tmp
            tmp = b[k]
            b[k] = b[piv]
            b[piv] = tmp
        for i in range(k + 1, d):
            factor = A[i, k] / A[k, k]
            for j in range(k, d):
                A[i, j] -= factor * A[k, j]
            b[i] -= factor * b[k]
    for k in range(d - 1, -1, -1):
        tmp = b[k]
        for j in range(k + 1, d):
            tmp -= A[k, j] * x[j]
        x[k] = tmp / A[k, k]
    return 0


cdef double _objective(double[:, ::1] U, double[::1] Y, double[:, ::1] V,
                       int n, int m, int d) noexcept nogil:
    cdef int i, j, k
    cdef double h, dot, r, total = 0.0
    for i in range(n):
        h = -INFINITY
        for j in range(m):
            dot = 0.0
            for k in range(d):
                dot += U[i, k] * V[j, k]
            if dot > h:
                h = dot
        r = Y[i] - h
        total += r * r
    return total


def fit_restart(double[:, ::1] U, double[::1] Y, double[:, ::1] V0,
                double gamma, double ridge, int max_rounds):
    cdef int n = U.shape[0]
    cdef int d = U.shape[1]
    cdef int m = V0.shape[0]

    V_arr = np.array(V0, dtype=np.float64, order="C")
    Vn_arr = np.empty((m, d), dtype=np.float64)
    G_arr = np.empty((m, d, d), dtype=np.float64)
    B_arr = np.empty((m, d), dtype=np.float64)
    counts_arr = np.empty(m, dtype=np.int64)
    resid_arr = np.empty(n, dtype=np.float64)
    trace_arr = np.empty(max_rounds + 1, dtype=np.float64)
    A_arr = np.empty((d, d), dtype=np.float64)
    rhs_arr = np.empty(d, dtype=np.float64)
    x_arr = np.empty(d, dtype=np.float64)

    cdef double[:, ::1] V = V_arr
    cdef double[:, ::1] Vn = Vn_arr
    cdef double[:, :, ::1] G = G_arr
    cdef double[:, ::1] B = B_arr
    cdef long long[::1] counts = counts_arr
    cdef double[::1] resid = resid_arr
    cdef double[::1] trace = trace_arr
    cdef double[:, ::1] A = A_arr
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] x = x_arr

    Vs_arr = np.empty((m, d), dtype=np.float64)
    cdef double[:, ::1] Vs = Vs_arr

    cdef int i, j, k, l, rnd, cand, best_j, worst, n_empty, rounds_done = 0
    cdef double dot, h, obj, new_obj, nrm, scalefac, worst_val, step
    cdef bint improved, accepted

    with nogil:
        obj = _objective(U, Y, V, n, m, d)
        trace[0] = obj
        for rnd in range(max_rounds):
            for j in range(m):
                counts[j] = 0
                for k in range(d):
                    B[j, k] = 0.0
                    for l in range(d):
                        G[j, k, l] = 0.0
            # assign each direction to its support-attaining vertex and
            # accumulate the per-cluster normal equations
            for i in range(n):
                best_j = 0
                h = -INFINITY
                for j in range(m):
                    dot = 0.0
                    for k in range(d):
                        dot += U[i, k] * V[j, k]
                    if dot > h:
                        h = dot
                        best_j = j
                counts[best_j] += 1
                for k in range(d):
                    B[best_j, k] += Y[i] * U[i, k]
                    for l in range(d):
                        G[best_j, k, l] += U[i, k] * U[i, l]
                dot = Y[i] - h
                resid[i] = dot if dot >= 0 else -dot

            n_empty = 0
            for j in range(m):
                if counts[j] == 0:
                    n_empty += 1
                for k in range(d):
                    for l in range(d):
                        A[k, l] = G[j, k, l]
                    A[k, k] += ridge
                    rhs[k] = B[j, k]
                if _solve_small(A, rhs, x, d):
                    for k in range(d):
                        x[k] = 0.0
                for k in range(d):
                    Vs[j, k] = x[k]

            # candidate ladder, first improvement wins: reseeded solved step,
            # plain solved step, then damped steps (the cluster solve
            # minimizes a surrogate and can overshoot the true objective)
            accepted = False
            new_obj = 0.0
            for cand in range(8):
                if cand == 0:
                    if n_empty == 0:
                        continue
                    for j in range(m):
                        for k in range(d):
                            Vn[j, k] = Vs[j, k]
                    for j in range(m):
                        if counts[j] == 0:
                            worst = 0
                            worst_val = -INFINITY
                            for i in range(n):
                                if resid[i] > worst_val:
                                    worst_val = resid[i]
                                    worst = i
                            resid[worst] = -INFINITY
                            for k in range(d):
                                Vn[j, k] = Y[worst] * U[worst, k]
                elif cand == 1:
                    for j in range(m):
                        for k in range(d):
                            Vn[j, k] = Vs[j, k]
                else:
                    step = 0.5 ** (cand - 1)
                    for j in range(m):
                        for k in range(d):
                            Vn[j, k] = V[j, k] + step * (Vs[j, k] - V[j, k])
                if gamma != INFINITY:
                    for j in range(m):
                        nrm = 0.0
                        for k in range(d):
                            nrm += Vn[j, k] * Vn[j, k]
                        nrm = sqrt(nrm)
                        if nrm > gamma:
                            scalefac = gamma / nrm
                            for k in range(d):
                                Vn[j, k] *= scalefac
                new_obj = _objective(U, Y, Vn, n, m, d)
                if new_obj <= obj:
                    accepted = True
                    break
            if not accepted:
                break
            improved = new_obj < obj
            for j in range(m):
                for k in range(d):
                    V[j, k] = Vn[j, k]
            obj = new_obj
            rounds_done += 1
            trace[rounds_done] = obj
            if not improved:
                break

    return V_arr, float(obj), trace_arr, rounds_done


def pack_block(double[:, ::1] cands, double[:, ::1] buf, long count,
               double dot_cap, long rejections, long saturation):
    """Process one block of packing candidates fully sequentially.

    Appends accepted candidates into ``buf`` (the caller guarantees spare
    capacity for the whole block) and returns the updated
    ``(count, rejections)``; processing stops early once the consecutive
    rejection budget is spent.
    """
    cdef int nb = cands.shape[0]
    cdef int d = cands.shape[1]
    cdef long cnt = count
    cdef long rej = rejections
    cdef int i, k, j
    cdef double dot
    cdef bint blocked
    with nogil:
        for i in range(nb):
            if rej >= saturation:
                break
            blocked = False
            for j in range(cnt):
                dot = 0.0
                for k in range(d):
                    dot += cands[i, k] * buf[j, k]
                if dot > dot_cap:
                    blocked = True
                    break
            if blocked:
                rej += 1
            else:
                for k in range(d):
                    buf[cnt, k] = cands[i, k]
                cnt += 1
                rej = 0
    return cnt, rej
