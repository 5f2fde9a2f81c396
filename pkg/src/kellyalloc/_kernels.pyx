# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Mirrors ``kellyalloc._kernels_py``: growth value/gradient/hessian over an
enumerated outcome space and the damped Newton iteration for one
active/inactive constraint combination. The enumeration spends nearly all of
its time here, so the inner loops are written against raw buffers and LAPACK
is called directly (dgetrf/dgecon/dgetrs for the KKT solve, dlange for the
condition estimate input).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, log
from scipy.linalg.cython_lapack cimport dgecon, dgetrf, dgetrs, dlange

cnp.import_array()

BACKEND_NAME = "compiled"

STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_MAX_ITERATIONS = 2
STATUS_DOMAIN = 3
STATUS_NONFINITE = 4

cdef enum:
    _OK = 0
    _SINGULAR = 1
    _MAX_ITERATIONS = 2
    _DOMAIN = 3
    _NONFINITE = 4

cdef double _RCOND_FLOOR = 1e-14


def growth_value(const double[::1] probs, const double[:, ::1] rets, const double[::1] f):
    """Expected log growth: sum_i p_i * ln(1 + k_i . f)."""
    cdef Py_ssize_t n_o = rets.shape[0]
    cdef Py_ssize_t n_c = rets.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    cdef double w
    for i in range(n_o):
        w = 1.0
        for j in range(n_c):
            w += rets[i, j] * f[j]
        acc += probs[i] * log(w)
    return acc


def growth_gradient(const double[::1] probs, const double[:, ::1] rets, const double[::1] f):
    """Gradient of the expected log growth with respect to each fraction."""
    cdef Py_ssize_t n_o = rets.shape[0]
    cdef Py_ssize_t n_c = rets.shape[1]
    cdef cnp.ndarray out = np.zeros(n_c, dtype=np.float64)
    cdef double[::1] g = out
    cdef Py_ssize_t i, j
    cdef double w, q
    for i in range(n_o):
        w = 1.0
        for j in range(n_c):
            w += rets[i, j] * f[j]
        q = probs[i] / w
        for j in range(n_c):
            g[j] += q * rets[i, j]
    return out


def growth_hessian(const double[::1] probs, const double[:, ::1] rets, const double[::1] f):
    """Hessian of the expected log growth. Exactly symmetric by construction."""
    cdef Py_ssize_t n_o = rets.shape[0]
    cdef Py_ssize_t n_c = rets.shape[1]
    cdef cnp.ndarray out = np.zeros((n_c, n_c), dtype=np.float64)
    cdef double[:, ::1] h = out
    cdef Py_ssize_t i, j, k
    cdef double w, q
    for i in range(n_o):
        w = 1.0
        for j in range(n_c):
            w += rets[i, j] * f[j]
        q = probs[i] / (w * w)
        for j in range(n_c):
            for k in range(j, n_c):
                h[j, k] -= q * rets[i, j] * rets[i, k]
    for j in range(n_c):
        for k in range(j + 1, n_c):
            h[k, j] = h[j, k]
    return out


cdef bint _domain_ok(const double[:, ::1] rets, const double[::1] x) noexcept:
    """True when every outcome keeps 1 + k . f strictly positive."""
    cdef Py_ssize_t n_o = rets.shape[0]
    cdef Py_ssize_t n_c = rets.shape[1]
    cdef Py_ssize_t i, j
    cdef double w
    for i in range(n_o):
        w = 1.0
        for j in range(n_c):
            w += rets[i, j] * x[j]
        if not (w > 0.0):
            return False
    return True


def newton_kernel(const double[::1] probs, const double[:, ::1] rets,
                  const double[:, ::1] cons_grad, const double[::1] cons_off,
                  const cnp.uint8_t[::1] active, const double[::1] x0,
                  double tol, int max_iter, double initial_step,
                  int max_halvings):
    """Damped Newton iteration on the KKT residual of one combination.

    Returns ``(x, status, iterations, residual_norm)``; see the fallback
    backend for the exact contract.
    """
    cdef Py_ssize_t n_o = rets.shape[0]
    cdef Py_ssize_t n_c = rets.shape[1]
    cdef Py_ssize_t n_l = cons_off.shape[0]
    cdef Py_ssize_t n = n_c + n_l
    cdef int n_int = <int> n
    cdef int one = 1
    cdef int info = 0

    cdef cnp.ndarray x_arr = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] x = x_arr
    cdef cnp.ndarray trial_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] trial = trial_arr
    cdef cnp.ndarray w_arr = np.empty(n_o, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef cnp.ndarray q_arr = np.empty(n_o, dtype=np.float64)
    cdef double[::1] q = q_arr
    cdef cnp.ndarray resid_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] resid_vec = resid_arr
    cdef cnp.ndarray delta_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] delta = delta_arr
    cdef cnp.ndarray jac_arr = np.zeros((n, n), dtype=np.float64, order="F")
    cdef double[::1, :] jac = jac_arr
    cdef cnp.ndarray ipiv_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] ipiv = ipiv_arr
    cdef cnp.ndarray work_arr = np.empty(4 * n, dtype=np.float64)
    cdef double[::1] work = work_arr
    cdef cnp.ndarray iwork_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] iwork = iwork_arr

    cdef int status = _MAX_ITERATIONS
    cdef int iterations = 0
    cdef double resid = np.inf
    cdef double acc, val, anorm, rcond, step, h
    cdef Py_ssize_t i, j, k, l, it, halve
    cdef bint ok, finite
    cdef char norm_one = b"1"
    cdef char no_trans = b"N"

    for it in range(max_iter):
        # Wealth factors; the initial point may sit outside the log domain.
        ok = True
        for i in range(n_o):
            val = 1.0
            for j in range(n_c):
                val += rets[i, j] * x[j]
            w[i] = val
            if not (val > 0.0):
                ok = False
        if not ok:
            status = _DOMAIN
            break

        # Residual: stationarity rows then constraint/slack rows.
        for j in range(n_c):
            acc = 0.0
            for i in range(n_o):
                acc += probs[i] / w[i] * rets[i, j]
            for l in range(n_l):
                if active[l]:
                    acc -= x[n_c + l] * cons_grad[l, j]
            resid_vec[j] = acc
        for l in range(n_l):
            acc = cons_off[l]
            for j in range(n_c):
                acc += cons_grad[l, j] * x[j]
            if not active[l]:
                acc += x[n_c + l]
            resid_vec[n_c + l] = -acc

        finite = True
        for i in range(n):
            if not isfinite(resid_vec[i]):
                finite = False
                break
        if not finite:
            status = _NONFINITE
            break

        resid = 0.0
        for i in range(n):
            val = fabs(resid_vec[i])
            if val > resid:
                resid = val
        if resid <= tol:
            status = _OK
            break

        # Jacobian, column-major for LAPACK.
        for j in range(n):
            for i in range(n):
                jac[i, j] = 0.0
        for i in range(n_o):
            q[i] = probs[i] / (w[i] * w[i])
        for j in range(n_c):
            for k in range(j, n_c):
                h = 0.0
                for i in range(n_o):
                    h -= q[i] * rets[i, j] * rets[i, k]
                jac[j, k] = h
                jac[k, j] = h
        for l in range(n_l):
            for j in range(n_c):
                jac[n_c + l, j] = -cons_grad[l, j]
                if active[l]:
                    jac[j, n_c + l] = -cons_grad[l, j]
            if not active[l]:
                jac[n_c + l, n_c + l] = -1.0

        finite = True
        for j in range(n):
            for i in range(n):
                if not isfinite(jac[i, j]):
                    finite = False
                    break
            if not finite:
                break
        if not finite:
            status = _NONFINITE
            break

        anorm = dlange(&norm_one, &n_int, &n_int, &jac[0, 0], &n_int, &work[0])
        dgetrf(&n_int, &n_int, &jac[0, 0], &n_int, &ipiv[0], &info)
        if info != 0:
            status = _SINGULAR
            break
        dgecon(&norm_one, &n_int, &jac[0, 0], &n_int, &anorm, &rcond,
               &work[0], &iwork[0], &info)
        if info != 0 or not (rcond > _RCOND_FLOOR):
            status = _SINGULAR
            break
        for i in range(n):
            delta[i] = resid_vec[i]
        dgetrs(&no_trans, &n_int, &one, &jac[0, 0], &n_int, &ipiv[0],
               &delta[0], &n_int, &info)
        if info != 0:
            status = _SINGULAR
            break

        # Halve the step until the trial point stays inside the log domain.
        step = initial_step
        ok = False
        for halve in range(max_halvings + 1):
            for i in range(n):
                trial[i] = x[i] - step * delta[i]
            if _domain_ok(rets, trial):
                ok = True
                break
            step *= 0.5
        if not ok:
            status = _DOMAIN
            break
        for i in range(n):
            x[i] = trial[i]
        iterations += 1

    return x_arr, status, iterations, resid
