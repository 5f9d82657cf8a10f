"""Compiled inner loops for projected gradient dynamics on matrix games.

Every public step function in :mod:`asymp.gda` and the fixed-point oracle in
:mod:`asymp.perturbation` route through these kernels, so single steps and
long runs produce bit-identical iterates.
"""

import numpy as np
from numba import njit

PERTURBED = 0
ANCHORED = 1
OPTIMISTIC = 2


@njit(cache=True)
def project(v):
    k = v.shape[0]
    u = np.sort(v)[::-1]
    css = 0.0
    theta = 0.0
    for i in range(k):
        css += u[i]
        t = (css - 1.0) / (i + 1)
        if u[i] - t > 0.0:
            theta = t
    out = np.empty(k)
    for i in range(k):
        d = v[i] - theta
        out[i] = d if d > 0.0 else 0.0
    return out


@njit(cache=True)
def matvec(A, y):
    m, n = A.shape
    out = np.zeros(m)
    for i in range(m):
        s = 0.0
        for j in range(n):
            s += A[i, j] * y[j]
        out[i] = s
    return out


@njit(cache=True)
def rmatvec(A, x):
    m, n = A.shape
    out = np.zeros(n)
    for j in range(n):
        s = 0.0
        for i in range(m):
            s += A[i, j] * x[i]
        out[j] = s
    return out


@njit(cache=True)
def grad_x(A, x, y, mu_x, anchor_x):
    return matvec(A, y) + mu_x * (x - anchor_x)


@njit(cache=True)
def grad_y(A, x, y, mu_y, anchor_y):
    # ascent direction for the maximizing player
    return rmatvec(A, x) - mu_y * (y - anchor_y)


@njit(cache=True)
def perturbed_step(A, x, y, eta, mu_x, mu_y, anchor_x, anchor_y):
    x1 = project(x - eta * grad_x(A, x, y, mu_x, anchor_x))
    y1 = project(y + eta * grad_y(A, x1, y, mu_y, anchor_y))
    return x1, y1


@njit(cache=True)
def optimistic_step(A, x, y, eta, mu_x, mu_y, gx_prev, gy_prev):
    zx = np.zeros_like(x)
    zy = np.zeros_like(y)
    gx = grad_x(A, x, y, mu_x, zx)
    x1 = project(x - eta * (2.0 * gx - gx_prev))
    gy = grad_y(A, x1, y, mu_y, zy)
    y1 = project(y + eta * (2.0 * gy - gy_prev))
    return x1, y1, gx, gy


@njit(cache=True)
def run(A, x0, y0, eta, mu_x, mu_y, kind, t_sigma, n_iters, record_every, xs, ys):
    """Iterate ``n_iters`` updates, writing every ``record_every``-th iterate.

    Row 0 of ``xs``/``ys`` holds the initial profile; the final iterate is
    always written to the last row. Returns the number of completed updates,
    which is smaller than ``n_iters`` only if a non-finite value appeared.
    """
    x = x0.copy()
    y = y0.copy()
    ax = np.zeros_like(x)
    ay = np.zeros_like(y)
    gx_prev = np.zeros_like(x)
    gy_prev = np.zeros_like(y)
    xs[0] = x
    ys[0] = y
    row = 1
    for s in range(1, n_iters + 1):
        if kind == ANCHORED and (s - 1) % t_sigma == 0:
            ax = x.copy()
            ay = y.copy()
        if kind == OPTIMISTIC:
            x, y, gx_prev, gy_prev = optimistic_step(A, x, y, eta, mu_x, mu_y, gx_prev, gy_prev)
        else:
            x, y = perturbed_step(A, x, y, eta, mu_x, mu_y, ax, ay)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            return s - 1
        if s % record_every == 0 or s == n_iters:
            xs[row] = x
            ys[row] = y
            row += 1
    return n_iters


@njit(cache=True)
def fixed_point(A, x0, y0, eta, mu_x, mu_y, tol, max_iters):
    """Run perturbed alternating steps until ``||z' - z|| / eta <= tol``."""
    x = x0.copy()
    y = y0.copy()
    zx = np.zeros_like(x)
    zy = np.zeros_like(y)
    residual = np.inf
    it = 0
    while it < max_iters:
        x1, y1 = perturbed_step(A, x, y, eta, mu_x, mu_y, zx, zy)
        it += 1
        d = 0.0
        for i in range(x.shape[0]):
            d += (x1[i] - x[i]) ** 2
        for j in range(y.shape[0]):
            d += (y1[j] - y[j]) ** 2
        residual = np.sqrt(d) / eta
        x = x1
        y = y1
        if residual <= tol:
            break
    return x, y, residual, it
