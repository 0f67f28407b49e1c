"""Pure-Python SMO backend.

Same algorithm as the compiled extension; used when the extension is
unavailable or when PCSVM_FORCE_PY_SMO is set.  Deterministic: candidate
scans are index-ordered with a fixed rotation, no randomness anywhere.
"""

from __future__ import annotations

import numpy as np

__all__ = ["smo_solve"]

# Reject steps smaller than this relative change; guards against cycling on
# float dust without limiting attainable precision.
_STEP_EPS = 1e-12


def smo_solve(gram: np.ndarray, y: np.ndarray, box: np.ndarray,
              kkt_tol: float, alpha_eps: float, max_updates: int,
              objective_trace: list | None = None):
    """Maximize the dual  sum(a) - 0.5 aQa,  Q = (y yT) * K,  subject to
    0 <= a_i <= box_i and sum(a_i y_i) = 0.

    Returns (alphas, bias, n_updates, converged).  ``objective_trace``, if
    given, receives the dual objective value after every accepted update.
    """
    k = np.ascontiguousarray(gram, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    box = np.asarray(box, dtype=np.float64)
    n = y.size
    alphas = np.zeros(n)
    u = np.zeros(n)  # decision values without bias: K @ (alphas * y)
    bias = 0.0
    n_updates = 0
    objective = 0.0

    def take_step(i1: int, i2: int) -> bool:
        nonlocal bias, n_updates, objective, u
        if i1 == i2:
            return False
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
            lo = max(0.0, gamma - c1)
            hi = min(c2, gamma)
        else:
            gamma = a1_old - a2_old
            lo = max(0.0, -gamma)
            hi = min(c2, c1 - gamma)
        if lo >= hi:
            return False
        k11 = k[i1, i1]
        k22 = k[i2, i2]
        k12 = k[i1, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta <= 0.0:
            # degenerate curvature along the pair direction; skip
            return False
        a2 = a2_old + y2 * (e1 - e2) / eta
        if a2 < lo:
            a2 = lo
        elif a2 > hi:
            a2 = hi
        if abs(a2 - a2_old) < _STEP_EPS * (a2 + a2_old + _STEP_EPS):
            return False
        a1 = a1_old + s * (a2_old - a2)
        # bounds hold mathematically; strip float dust only
        if a1 < 0.0:
            a1 = 0.0
        elif a1 > c1:
            a1 = c1
        t1 = a1 - a1_old
        t2 = a2 - a2_old
        if objective_trace is not None:
            objective += (t1 + t2) - t1 * y1 * u[i1] - t2 * y2 * u[i2] \
                - 0.5 * (t1 * t1 * k11 + t2 * t2 * k22) - t1 * t2 * s * k12
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
        u += (y1 * t1) * k[i1] + (y2 * t2) * k[i2]
        alphas[i1] = a1
        alphas[i2] = a2
        n_updates += 1
        if objective_trace is not None:
            objective_trace.append(objective)
        return True

    def examine(i2: int) -> bool:
        a2 = alphas[i2]
        e2 = u[i2] + bias - y[i2]
        r2 = e2 * y[i2]
        violates = (r2 < -kkt_tol and a2 < box[i2] - alpha_eps) or \
                   (r2 > kkt_tol and a2 > alpha_eps)
        if not violates:
            return False
        free = (alphas > alpha_eps) & (alphas < box - alpha_eps)
        n_free = int(np.sum(free))
        if n_free > 1:
            e = u + bias - y
            gap = np.abs(e - e2)
            gap[~free] = -1.0
            if take_step(int(np.argmax(gap)), i2):
                return True
        start = (i2 + 1) % n
        if n_free > 0:
            for off in range(n):
                i1 = (start + off) % n
                if free[i1] and take_step(i1, i2):
                    return True
        for off in range(n):
            if take_step((start + off) % n, i2):
                return True
        return False

    examine_all = True
    num_changed = 0
    while num_changed > 0 or examine_all:
        num_changed = 0
        if examine_all:
            candidates = range(n)
        else:
            candidates = np.flatnonzero(
                (alphas > alpha_eps) & (alphas < box - alpha_eps))
        for i2 in candidates:
            num_changed += examine(int(i2))
            if n_updates >= max_updates:
                return alphas, bias, n_updates, False
        if examine_all:
            examine_all = False
        elif num_changed == 0:
            examine_all = True
    return alphas, bias, n_updates, True
