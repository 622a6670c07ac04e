"""Compiled cyclic coordinate-descent kernels.

Both kernels keep one residual vector per model and update it after every
coordinate move. ``XT`` is the transposed design (d x n, C-contiguous) so
column access is contiguous. The coordinate denominator uses the actual
column second moment (1/n) x_j'x_j, which is 1 for standardized data.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def soft_threshold(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def _dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@njit(cache=True)
def enet_objective_kernel(XT, y, beta, lam, alpha):
    d, n = XT.shape
    rss = 0.0
    for i in range(n):
        f = 0.0
        for j in range(d):
            f += XT[j, i] * beta[j]
        e = y[i] - f
        rss += e * e
    l1 = 0.0
    l2 = 0.0
    for j in range(d):
        l1 += abs(beta[j])
        l2 += beta[j] * beta[j]
    return rss / (2.0 * n) + lam * (0.5 * (1.0 - alpha) * l2 + alpha * l1)


@njit(cache=True)
def enet_cd(XT, y, beta, lam, alpha, tol, max_sweeps, trace):
    """Minimize (1/2n)||y - X b||^2 + lam((1-alpha)/2 ||b||^2 + alpha ||b||_1).

    ``beta`` is updated in place. When ``trace`` has length >= max_sweeps + 1
    the objective before the first sweep and after every sweep is written
    into it. Returns (sweeps, last_max_change, converged).
    """
    d, n = XT.shape
    record = trace.shape[0] > max_sweeps
    r = y.copy()
    for j in range(d):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= XT[j, i] * beta[j]
    colsq = np.empty(d)
    for j in range(d):
        colsq[j] = _dot(XT[j], XT[j]) / n
    thresh = lam * alpha
    ridge = lam * (1.0 - alpha)
    if record:
        trace[0] = enet_objective_kernel(XT, y, beta, lam, alpha)
    change = 0.0
    for sweep in range(max_sweeps):
        change = 0.0
        for j in range(d):
            old = beta[j]
            z = _dot(XT[j], r) / n + colsq[j] * old
            new = soft_threshold(z, thresh) / (colsq[j] + ridge)
            if new != old:
                delta = new - old
                for i in range(n):
                    r[i] -= XT[j, i] * delta
                beta[j] = new
                if abs(delta) > change:
                    change = abs(delta)
        if record:
            trace[sweep + 1] = enet_objective_kernel(XT, y, beta, lam, alpha)
        if change < tol:
            return sweep + 1, change, True
    return max_sweeps, change, False


@njit(cache=True)
def splitreg_objective_kernel(XT, y, betas, lam_s, alpha, lam_d):
    G, d = betas.shape
    total = 0.0
    for g in range(G):
        total += enet_objective_kernel(XT, y, betas[g], lam_s, alpha)
    div = 0.0
    for g in range(G):
        for h in range(G):
            if h != g:
                for j in range(d):
                    div += abs(betas[g, j]) * abs(betas[h, j])
    return total + 0.5 * lam_d * div


@njit(cache=True)
def splitreg_cd(XT, y, betas, lam_s, alpha, lam_d, tol, max_sweeps, trace):
    """Block cyclic descent over groups g = 0..G-1, then coordinates j = 0..d-1.

    Each move is the exact minimizer in (g, j) with everything else fixed:
    the diversity term adds lam_d * sum_{h != g} |beta_j^h| to the l1 weight.
    ``betas`` (G x d) is updated in place.
    """
    G, d = betas.shape
    n = XT.shape[1]
    record = trace.shape[0] > max_sweeps
    R = np.empty((G, n))
    for g in range(G):
        for i in range(n):
            R[g, i] = y[i]
        for j in range(d):
            if betas[g, j] != 0.0:
                for i in range(n):
                    R[g, i] -= XT[j, i] * betas[g, j]
    colsq = np.empty(d)
    for j in range(d):
        colsq[j] = _dot(XT[j], XT[j]) / n
    ridge = lam_s * (1.0 - alpha)
    if record:
        trace[0] = splitreg_objective_kernel(XT, y, betas, lam_s, alpha, lam_d)
    change = 0.0
    for sweep in range(max_sweeps):
        change = 0.0
        for g in range(G):
            for j in range(d):
                others = 0.0
                for h in range(G):
                    if h != g:
                        others += abs(betas[h, j])
                old = betas[g, j]
                z = _dot(XT[j], R[g]) / n + colsq[j] * old
                new = soft_threshold(z, lam_s * alpha + lam_d * others) / (colsq[j] + ridge)
                if new != old:
                    delta = new - old
                    for i in range(n):
                        R[g, i] -= XT[j, i] * delta
                    betas[g, j] = new
                    if abs(delta) > change:
                        change = abs(delta)
        if record:
            trace[sweep + 1] = splitreg_objective_kernel(XT, y, betas, lam_s, alpha, lam_d)
        if change < tol:
            return sweep + 1, change, True
    return max_sweeps, change, False
