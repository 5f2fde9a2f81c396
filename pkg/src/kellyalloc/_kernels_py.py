"""NumPy fallback kernels.

Same call surface as the compiled extension (``kellyalloc._kernels``): growth
value/gradient/hessian over an enumerated outcome space, and the damped Newton
iteration for one active/inactive constraint combination. Everything here is
plain NumPy plus LAPACK via SciPy, so results match the compiled backend to
floating-point reassociation.

Inputs are trusted: callers validate shapes and the growth domain before
dispatching (the Newton kernel guards the domain itself, since it moves the
iterate).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack as _lapack

BACKEND_NAME = "python"

# Newton kernel status codes, shared with the compiled backend.
STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_MAX_ITERATIONS = 2
STATUS_DOMAIN = 3
STATUS_NONFINITE = 4

# Reciprocal condition estimate below this means the KKT matrix is treated
# as numerically singular (condition number above 1e14).
_RCOND_FLOOR = 1e-14


def growth_value(probs, rets, f):
    """Expected log growth: sum_i p_i * ln(1 + k_i . f)."""
    w = 1.0 + rets @ f
    return float(probs @ np.log(w))


def growth_gradient(probs, rets, f):
    """Gradient of the expected log growth with respect to each fraction."""
    w = 1.0 + rets @ f
    return (probs / w) @ rets


def growth_hessian(probs, rets, f):
    """Hessian of the expected log growth. Exactly symmetric by construction."""
    w = 1.0 + rets @ f
    weights = probs / (w * w)
    m = (rets * weights[:, None]).T @ rets
    # Symmetrize so both backends return bitwise-symmetric matrices even
    # though BLAS does not guarantee it for A^T diag(w) A.
    return -0.5 * (m + m.T)


def _kkt_residual(probs, rets, cons_grad, cons_off, active, x):
    n_c = rets.shape[1]
    f = x[:n_c]
    w = 1.0 + rets @ f
    alpha = (probs / w) @ rets
    n_l = cons_off.shape[0]
    if n_l == 0:
        return alpha
    y = x[n_c:]
    lam = np.where(active, y, 0.0)
    slack = np.where(active, 0.0, y)
    alpha = alpha - lam @ cons_grad
    beta = -(cons_grad @ f + cons_off + slack)
    return np.concatenate([alpha, beta])


def _kkt_jacobian(probs, rets, cons_grad, active, x):
    n_c = rets.shape[1]
    n_l = cons_grad.shape[0]
    n = n_c + n_l
    f = x[:n_c]
    w = 1.0 + rets @ f
    weights = probs / (w * w)
    m = (rets * weights[:, None]).T @ rets
    jac = np.zeros((n, n))
    jac[:n_c, :n_c] = -0.5 * (m + m.T)
    if n_l:
        jac[n_c:, :n_c] = -cons_grad
        jac[:n_c, n_c:] = np.where(active[None, :], -cons_grad.T, 0.0)
        idx = n_c + np.arange(n_l)
        jac[idx, idx] = np.where(active, 0.0, -1.0)
    return jac


def _lu_solve(jac, rhs):
    """LU solve with a condition estimate. Returns (delta, ok)."""
    anorm = float(np.abs(jac).sum(axis=0).max())
    lu, piv, info = _lapack.dgetrf(jac)
    if info != 0:
        return None, False
    rcond, info = _lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or not (rcond > _RCOND_FLOOR):
        return None, False
    delta, info = _lapack.dgetrs(lu, piv, rhs)
    if info != 0:
        return None, False
    return delta, True


def newton_kernel(probs, rets, cons_grad, cons_off, active, x0,
                  tol, max_iter, initial_step, max_halvings):
    """Damped Newton iteration on the KKT residual of one combination.

    Parameters mirror the compiled kernel: ``active`` is a uint8 vector over
    constraints, ``x0`` stacks fractions then multiplier/slack unknowns.

    Returns ``(x, status, iterations, residual_norm)`` where ``iterations``
    counts Newton updates actually applied and ``residual_norm`` is the last
    evaluated infinity norm (the norm at the returned iterate when the status
    is OK).
    """
    n_c = rets.shape[1]
    active = active.astype(bool)
    x = np.array(x0, dtype=float, copy=True)
    resid = np.inf
    iterations = 0
    for _ in range(max_iter):
        if np.any(1.0 + rets @ x[:n_c] <= 0.0):
            return x, STATUS_DOMAIN, iterations, resid
        residual = _kkt_residual(probs, rets, cons_grad, cons_off, active, x)
        if not np.all(np.isfinite(residual)):
            return x, STATUS_NONFINITE, iterations, resid
        resid = float(np.max(np.abs(residual)))
        if resid <= tol:
            return x, STATUS_OK, iterations, resid
        jac = _kkt_jacobian(probs, rets, cons_grad, active, x)
        if not np.all(np.isfinite(jac)):
            return x, STATUS_NONFINITE, iterations, resid
        delta, ok = _lu_solve(jac, residual)
        if not ok:
            return x, STATUS_SINGULAR, iterations, resid
        step = initial_step
        for _ in range(max_halvings + 1):
            trial = x - step * delta
            if np.all(1.0 + rets @ trial[:n_c] > 0.0):
                break
            step *= 0.5
        else:
            return x, STATUS_DOMAIN, iterations, resid
        x = trial
        iterations += 1
    return x, STATUS_MAX_ITERATIONS, iterations, resid
