# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled SMO backend.

Mirrors _smo_py.smo_solve operation-for-operation (same scan order, same
tie-breaks, same arithmetic order) so both backends walk the same update
trajectory; only the inner loops are compiled.
"""

import numpy as np

from libc.math cimport fabs

__all__ = ["smo_solve"]

cdef double _STEP_EPS = 1e-12


cdef bint _take_step(double[:, ::1] k, double[::1] y, double[::1] box,
                     double[::1] alphas, double[::1] u, double[::1] state,
                     double alpha_eps, Py_ssize_t i1, Py_ssize_t i2) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t j
    cdef double bias, a1_old, a2_old, y1, y2, c1, c2, e1, e2, s, gamma, lo, hi
    cdef double k11, k22, k12, eta, a1, a2, t1, t2, d1, d2, b1, b2, w1, w2
    if i1 == i2:
        return 0
    bias = state[0]
    a1_old = alphas[i1]
    a2_old = alphas[i2]
    y1 = y[i1]
    y2 = y[i2]
    c1 = box[i1]
    c2 = box[i2]
    e1 = u[i1] + bias - y1
    e2 = u[i2] + bias - y2
    s = y1 * y2
    if s > 0.0:
        gamma = a1_old + a2_old
        lo = gamma - c1
        if lo < 0.0:
            lo = 0.0
        hi = gamma
        if hi > c2:
            hi = c2
    else:
        gamma = a1_old - a2_old
        lo = -gamma
        if lo < 0.0:
            lo = 0.0
        hi = c1 - gamma
        if hi > c2:
            hi = c2
    if lo >= hi:
        return 0
    k11 = k[i1, i1]
    k22 = k[i2, i2]
    k12 = k[i1, i2]
    eta = k11 + k22 - 2.0 * k12
    if eta <= 0.0:
        # degenerate curvature along the pair direction; skip
        return 0
    a2 = a2_old + y2 * (e1 - e2) / eta
    if a2 < lo:
        a2 = lo
    elif a2 > hi:
        a2 = hi
    if fabs(a2 - a2_old) < _STEP_EPS * (a2 + a2_old + _STEP_EPS):
        return 0
    a1 = a1_old + s * (a2_old - a2)
    # bounds hold mathematically; strip float dust only
    if a1 < 0.0:
        a1 = 0.0
    elif a1 > c1:
        a1 = c1
    t1 = a1 - a1_old
    t2 = a2 - a2_old
    d1 = y1 * t1 * k11 + y2 * t2 * k12
    d2 = y1 * t1 * k12 + y2 * t2 * k22
    b1 = bias - e1 - d1
    b2 = bias - e2 - d2
    if alpha_eps < a1 < c1 - alpha_eps:
        bias = b1
    elif alpha_eps < a2 < c2 - alpha_eps:
        bias = b2
    else:
        bias = 0.5 * (b1 + b2)
    w1 = y1 * t1
    w2 = y2 * t2
    for j in range(n):
        u[j] += w1 * k[i1, j] + w2 * k[i2, j]
    alphas[i1] = a1
    alphas[i2] = a2
    state[0] = bias
    return 1


cdef bint _examine(double[:, ::1] k, double[::1] y, double[::1] box,
                   double[::1] alphas, double[::1] u, double[::1] state,
                   double kkt_tol, double alpha_eps, Py_ssize_t i2) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0]
    cdef double bias = state[0]
    cdef double a2 = alphas[i2]
    cdef double e2 = u[i2] + bias - y[i2]
    cdef double r2 = e2 * y[i2]
    cdef bint violates = (r2 < -kkt_tol and a2 < box[i2] - alpha_eps) or \
                         (r2 > kkt_tol and a2 > alpha_eps)
    cdef Py_ssize_t n_free = 0, best = -1, i1, off, start
    cdef double gap, best_gap = -1.0
    if not violates:
        return 0
    for i1 in range(n):
        if alphas[i1] > alpha_eps and alphas[i1] < box[i1] - alpha_eps:
            n_free += 1
            gap = fabs(u[i1] + bias - y[i1] - e2)
            if gap > best_gap:
                best_gap = gap
                best = i1
    if n_free > 1:
        if _take_step(k, y, box, alphas, u, state, alpha_eps, best, i2):
            return 1
    start = (i2 + 1) % n
    if n_free > 0:
        for off in range(n):
            i1 = (start + off) % n
            if alphas[i1] > alpha_eps and alphas[i1] < box[i1] - alpha_eps:
                if _take_step(k, y, box, alphas, u, state, alpha_eps, i1, i2):
                    return 1
    for off in range(n):
        i1 = (start + off) % n
        if _take_step(k, y, box, alphas, u, state, alpha_eps, i1, i2):
            return 1
    return 0


def smo_solve(gram, y, box, double kkt_tol, double alpha_eps, long long max_updates):
    """Compiled counterpart of the pure-Python solver; same contract,
    no objective tracing."""
    k_arr = np.ascontiguousarray(gram, dtype=np.float64)
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    box_arr = np.ascontiguousarray(box, dtype=np.float64)
    cdef Py_ssize_t n = y_arr.shape[0]
    alphas_arr = np.zeros(n)
    u_arr = np.zeros(n)
    state_arr = np.zeros(1)
    cdef double[:, ::1] kv = k_arr
    cdef double[::1] yv = y_arr
    cdef double[::1] boxv = box_arr
    cdef double[::1] av = alphas_arr
    cdef double[::1] uv = u_arr
    cdef double[::1] sv = state_arr
    cdef long long n_updates = 0, num_changed = 0
    cdef bint examine_all = 1
    cdef bint stepped
    cdef Py_ssize_t i2
    while num_changed > 0 or examine_all:
        num_changed = 0
        if examine_all:
            for i2 in range(n):
                stepped = _examine(kv, yv, boxv, av, uv, sv, kkt_tol, alpha_eps, i2)
                num_changed += stepped
                n_updates += stepped
                if n_updates >= max_updates:
                    return alphas_arr, float(sv[0]), int(n_updates), False
        else:
            candidates = np.flatnonzero(
                (alphas_arr > alpha_eps) & (alphas_arr < box_arr - alpha_eps))
            for idx in candidates:
                i2 = idx
                stepped = _examine(kv, yv, boxv, av, uv, sv, kkt_tol, alpha_eps, i2)
                num_changed += stepped
                n_updates += stepped
                if n_updates >= max_updates:
                    return alphas_arr, float(sv[0]), int(n_updates), False
        if examine_all:
            examine_all = 0
        elif num_changed == 0:
            examine_all = 1
    return alphas_arr, float(sv[0]), int(n_updates), True
