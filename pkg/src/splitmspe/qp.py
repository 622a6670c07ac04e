"""Small dense bound-constrained quadratic problems.

``box_lstsq`` minimizes ``0.5 ||Zw - y||^2`` over ``lower <= w <= upper``
working on ``Z`` itself (after a QR reduction), so nearly collinear columns
keep their conditioning instead of squaring it; ``nnls`` is the special case
``w >= 0``. ``box_qp`` handles problems given as ``0.5 w'Qw - c'w`` by
factoring ``Q``. All three start from scipy's BVLS solution, refine it with
primal active-set steps and then verify the KKT conditions.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import lsq_linear

from .errors import NumericalError, ParameterError

KKT_TOL = 1e-10


def kkt_violation(Q, c, w, lower, upper) -> float:
    """Largest violation of the box-QP optimality conditions, scaled by the
    problem magnitude."""
    scale = max(1.0, float(np.max(np.abs(Q), initial=0.0)), float(np.max(np.abs(c), initial=0.0)))
    return _violation(Q @ w - c, w, lower, upper) / scale


def _active(w, lower, upper, eps):
    with np.errstate(invalid="ignore"):
        at_lo = np.isfinite(lower) & (w <= lower + eps * np.maximum(1.0, np.abs(lower)))
        at_hi = np.isfinite(upper) & (w >= upper - eps * np.maximum(1.0, np.abs(upper)))
    return at_lo, at_hi


def _sqrt_factor(Q, c):
    lam, V = np.linalg.eigh(0.5 * (Q + Q.T))
    keep = lam > lam[-1] * 1e-14 if lam[-1] > 0 else np.zeros_like(lam, dtype=bool)
    root = np.sqrt(lam[keep])
    A = root[:, None] * V[:, keep].T
    b = (V[:, keep].T @ c) / root
    return A, b


def box_qp(Q, c, lower, upper, tol: float = KKT_TOL) -> np.ndarray:
    """Minimize ``0.5 w'Qw - c'w`` subject to ``lower <= w <= upper``.

    ``Q`` must be symmetric positive semidefinite with ``c`` in its range
    (true whenever the problem comes from a least-squares objective).
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    d = c.shape[0]
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (d,)).copy()
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (d,)).copy()
    if Q.shape != (d, d):
        raise ParameterError("Q and c have inconsistent shapes")
    if np.any(lower > upper):
        raise ParameterError("lower bound exceeds upper bound")
    A, b = _sqrt_factor(Q, c)
    if A.shape[0] == 0:
        # Q == 0 and c == 0: every feasible point is optimal
        return np.clip(np.zeros(d), lower, upper)
    res = lsq_linear(A, b, bounds=(lower, upper), method="bvls", tol=1e-14, lsmr_tol=None)
    w = np.clip(res.x, lower, upper)
    w = _polish_ls(A, b, w, lower, upper)
    viol = kkt_violation(Q, c, w, lower, upper)
    if viol > tol:
        raise NumericalError(f"box QP solution violates KKT conditions by {viol:.3g}")
    return w


def _reduce(Z, y):
    """Triangular (R, b) with ||Zw - y||^2 = ||Rw - b||^2 + const."""
    k = Z.shape[1]
    if Z.shape[0] <= k + 1:
        return Z, y
    R = np.linalg.qr(np.column_stack([Z, y]), mode="r")
    return R[:k, :k], R[:k, k]


def ls_kkt_violation(Z, y, w, lower, upper) -> float:
    """KKT violation of ``min 0.5 ||Zw - y||^2`` with the gradient formed
    from the residual."""
    g = Z.T @ (Z @ w - y)
    col = np.sqrt(np.sum(Z * Z, axis=0))
    scale = max(1.0, float(np.max(col, initial=0.0)) * max(float(np.linalg.norm(y)), float(np.linalg.norm(Z @ w))))
    return _violation(g, w, lower, upper) / scale


def _violation(g, w, lower, upper):
    at_lo, at_hi = _active(w, lower, upper, 1e-12)
    free = ~(at_lo | at_hi)
    v = 0.0
    if np.any(free):
        v = max(v, float(np.max(np.abs(g[free]))))
    lo_only = at_lo & ~at_hi
    if np.any(lo_only):
        v = max(v, float(np.max(np.maximum(-g[lo_only], 0.0))))
    hi_only = at_hi & ~at_lo
    if np.any(hi_only):
        v = max(v, float(np.max(np.maximum(g[hi_only], 0.0))))
    bound = max(float(np.max(lower - w, initial=0.0)), float(np.max(w - upper, initial=0.0)))
    return max(v, bound)


def box_lstsq(Z, y, lower, upper, tol: float = KKT_TOL) -> np.ndarray:
    """Bounded least squares ``argmin 0.5 ||Zw - y||^2``, ``lower <= w <= upper``."""
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    if Z.ndim != 2 or y.shape != (Z.shape[0],):
        raise ParameterError("box_lstsq needs a 2-d Z and a matching y")
    d = Z.shape[1]
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (d,)).copy()
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (d,)).copy()
    if np.any(lower > upper):
        raise ParameterError("lower bound exceeds upper bound")
    R, b = _reduce(Z, y)
    return _solve_factored(R, b, lower, upper, tol)


def _solve_factored(R, b, lower, upper, tol):
    if not np.any(R):
        return np.clip(np.zeros(R.shape[1]), lower, upper)
    res = lsq_linear(R, b, bounds=(lower, upper), method="bvls", tol=1e-14, lsmr_tol=None)
    w = np.clip(res.x, lower, upper)
    w = _polish_ls(R, b, w, lower, upper)
    viol = ls_kkt_violation(R, b, w, lower, upper)
    if viol > tol:
        raise NumericalError(f"bounded least squares solution violates KKT conditions by {viol:.3g}")
    return w


def _polish_ls(Z, y, w, lower, upper, max_iter: int = 100):
    """Active-set refinement of ``w`` on the factored problem (see
    :func:`_polish`)."""
    d = Z.shape[1]
    at_lo, at_hi = _active(w, lower, upper, 1e-9)
    out = np.clip(w, lower, upper)
    out[at_lo] = lower[at_lo]
    out[at_hi & ~at_lo] = upper[at_hi & ~at_lo]
    fixed = at_lo | at_hi
    for _ in range(max_iter):
        free = ~fixed
        target = out.copy()
        if np.any(free):
            rhs = y - Z[:, fixed] @ out[fixed]
            target[free] = np.linalg.lstsq(Z[:, free], rhs, rcond=None)[0]
        step = target - out
        t, block, bound = _ratio_test(out, step, free, lower, upper)
        out = out + max(t, 0.0) * step
        if block >= 0:
            out[block] = bound
            fixed[block] = True
            continue
        j = _worst_multiplier(Z.T @ (Z @ out - y), out, fixed, lower, upper, d)
        if j < 0:
            break
        fixed[j] = False
    out = np.clip(out, lower, upper)
    if ls_kkt_violation(Z, y, out, lower, upper) <= ls_kkt_violation(Z, y, w, lower, upper):
        return out
    return w


def _ratio_test(w, step, free, lower, upper):
    """Largest t <= 1 keeping ``w + t step`` feasible, and the blocking bound."""
    t, block, bound = 1.0, -1, 0.0
    for j in np.flatnonzero(free):
        if step[j] < 0 and np.isfinite(lower[j]):
            tj = (lower[j] - w[j]) / step[j]
            if tj < t:
                t, block, bound = tj, j, lower[j]
        elif step[j] > 0 and np.isfinite(upper[j]):
            tj = (upper[j] - w[j]) / step[j]
            if tj < t:
                t, block, bound = tj, j, upper[j]
    return t, block, bound


def _worst_multiplier(g, w, fixed, lower, upper, d):
    """Index of the fixed coordinate whose release most decreases the
    objective, or -1 when every multiplier has the right sign."""
    wrong = np.zeros(d)
    on_lo = fixed & (w == lower)
    on_hi = fixed & (w == upper) & ~on_lo
    wrong[on_lo] = np.maximum(-g[on_lo], 0.0)
    wrong[on_hi] = np.maximum(g[on_hi], 0.0)
    j = int(np.argmax(wrong))
    return j if wrong[j] > 0.0 else -1


def nnls(Z, y, tol: float = KKT_TOL) -> np.ndarray:
    """Non-negative least squares ``argmin_{delta >= 0} ||Z delta - y||``."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ParameterError("nnls needs a 2-d Z and a matching y")
    return box_lstsq(Z, y, 0.0, np.inf, tol)
