# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: term-program jet evaluation and RK4 flow tracing.

Semantics match the pure-numpy twin ``_ref`` exactly; see its docstring for
the term-program layout and the meaning of the flow status codes.
"""

import numpy as np

from libc.math cimport isfinite, log, pow, sqrt

KIND_MONOMIAL = 0
KIND_RADIAL = 1
KIND_DIPOLE = 2

FLOW_OK = 0
FLOW_CRITICAL = 1
FLOW_SINGULAR = 2
FLOW_NONFINITE = 3


cdef inline double ipow(double x, int e) noexcept nogil:
    cdef double r = 1.0
    cdef int i
    for i in range(e):
        r *= x
    return r


cdef double _acc_monomial(int n, double w, const int[:, ::1] expn, int t,
                          const double[::1] p, double[::1] grad,
                          double[:, ::1] hess) noexcept nogil:
    cdef int i, j, k, ei, ej
    cdef double v = 1.0, g, d, c
    for k in range(n):
        v *= ipow(p[k], expn[t, k])
    for i in range(n):
        ei = expn[t, i]
        if ei == 0:
            continue
        g = ei
        for k in range(n):
            g *= ipow(p[k], expn[t, k] - (1 if k == i else 0))
        grad[i] += w * g
        if ei >= 2:
            d = ei * (ei - 1)
            for k in range(n):
                d *= ipow(p[k], expn[t, k] - (2 if k == i else 0))
            hess[i, i] += w * d
        for j in range(i + 1, n):
            ej = expn[t, j]
            if ej == 0:
                continue
            c = ei * ej
            for k in range(n):
                c *= ipow(p[k], expn[t, k] - (1 if k == i else 0) - (1 if k == j else 0))
            hess[i, j] += w * c
            hess[j, i] += w * c
    return w * v


cdef double _acc_radial(int n, double w, const double[:, ::1] centers, int t,
                        const double[::1] p, double[::1] grad,
                        double[:, ::1] hess) noexcept nogil:
    cdef int i, j
    cdef double r2 = 0.0, xi, xj, v, q, rm_n, diag, off
    for i in range(n):
        xi = p[i] - centers[t, i]
        r2 += xi * xi
    if n == 2:
        v = 0.5 * log(r2)
        # (xi * xj) kept as an explicit subexpression so hess[i, j] and
        # hess[j, i] round identically
        off = w * (2.0 / (r2 * r2))
        for i in range(n):
            xi = p[i] - centers[t, i]
            grad[i] += w * xi / r2
            hess[i, i] += w / r2
            for j in range(n):
                xj = p[j] - centers[t, j]
                hess[i, j] -= off * (xi * xj)
        return w * v
    q = 2.0 - n
    rm_n = pow(r2, -0.5 * n)
    v = pow(r2, 0.5 * q)
    off = w * q * (n * rm_n / r2)
    for i in range(n):
        xi = p[i] - centers[t, i]
        grad[i] += w * q * rm_n * xi
        hess[i, i] += w * q * rm_n
        for j in range(n):
            xj = p[j] - centers[t, j]
            hess[i, j] -= off * (xi * xj)
    return w * v


cdef double _acc_dipole(int n, double w, const double[:, ::1] centers,
                        const double[:, ::1] dirs, int t, const double[::1] p,
                        double[::1] grad, double[:, ::1] hess) noexcept nogil:
    cdef int i, j
    cdef double r2 = 0.0, a = 0.0, xi, xj, v, q, rm_n2, cxx, cxd
    for i in range(n):
        xi = p[i] - centers[t, i]
        r2 += xi * xi
        a += xi * dirs[t, i]
    if n == 2:
        v = a / r2
        cxd = 2.0 / (r2 * r2)
        cxx = 8.0 * a / (r2 * r2 * r2)
        for i in range(n):
            xi = p[i] - centers[t, i]
            grad[i] += w * (dirs[t, i] / r2 - 2.0 * a * xi / (r2 * r2))
            hess[i, i] -= w * cxd * a
            for j in range(n):
                xj = p[j] - centers[t, j]
                hess[i, j] += w * (cxx * (xi * xj)
                                   - cxd * (xi * dirs[t, j] + xj * dirs[t, i]))
        return w * v
    q = 2.0 - n
    rm_n2 = pow(r2, -0.5 * n - 1.0)
    v = q * rm_n2 * r2 * a
    cxx = n * (n + 2.0) * rm_n2 / r2 * a
    cxd = n * rm_n2
    for i in range(n):
        xi = p[i] - centers[t, i]
        grad[i] += w * q * (rm_n2 * r2 * dirs[t, i] - n * rm_n2 * a * xi)
        hess[i, i] -= w * q * cxd * a
        for j in range(n):
            xj = p[j] - centers[t, j]
            hess[i, j] += w * q * (cxx * (xi * xj)
                                   - cxd * (xi * dirs[t, j] + xj * dirs[t, i]))
    return w * v


cdef double _jet_accumulate(int n, int m, const int[::1] kinds,
                            const double[::1] weights, const int[:, ::1] expn,
                            const double[:, ::1] centers, const double[:, ::1] dirs,
                            const double[::1] p, double[::1] grad,
                            double[:, ::1] hess) noexcept nogil:
    """Accumulate into pre-zeroed grad/hess; returns the value."""
    cdef int t
    cdef double v = 0.0
    for t in range(m):
        if kinds[t] == 0:
            v += _acc_monomial(n, weights[t], expn, t, p, grad, hess)
        elif kinds[t] == 1:
            v += _acc_radial(n, weights[t], centers, t, p, grad, hess)
        else:
            v += _acc_dipole(n, weights[t], centers, dirs, t, p, grad, hess)
    return v


def jet(int n, terms, p):
    """Evaluate a term program; returns ``(value, gradient, hessian)``."""
    kinds_a, weights_a, expn_a, centers_a, dirs_a = terms
    cdef const int[::1] kinds = kinds_a
    cdef const double[::1] weights = weights_a
    cdef const int[:, ::1] expn = expn_a
    cdef const double[:, ::1] centers = centers_a
    cdef const double[:, ::1] dirs = dirs_a
    p_arr = np.ascontiguousarray(p, dtype=np.float64)
    grad_arr = np.zeros(n)
    hess_arr = np.zeros((n, n))
    cdef const double[::1] pv = p_arr
    cdef double[::1] gv = grad_arr
    cdef double[:, ::1] hv = hess_arr
    cdef double value
    value = _jet_accumulate(n, kinds.shape[0], kinds, weights, expn, centers,
                            dirs, pv, gv, hv)
    return value, grad_arr, hess_arr


cdef int _stage(int n, int m, const int[::1] kinds, const double[::1] weights,
                const int[:, ::1] expn, const double[:, ::1] centers,
                const double[:, ::1] dirs, const double[:, ::1] sing,
                double excl2, double eps_grad, const double[::1] pos,
                double[::1] grad, double[:, ::1] hess, double[::1] normal,
                double* value, double* gnorm, double* mcurv) noexcept nogil:
    cdef int i, j, t
    cdef double dx, d2, v, g2, gn, qnn, tr, hm, row
    for t in range(sing.shape[0]):
        d2 = 0.0
        for i in range(n):
            dx = pos[i] - sing[t, i]
            d2 += dx * dx
        if d2 < excl2:
            return 2
    for i in range(n):
        grad[i] = 0.0
        for j in range(n):
            hess[i, j] = 0.0
    v = _jet_accumulate(n, m, kinds, weights, expn, centers, dirs, pos, grad, hess)
    g2 = 0.0
    for i in range(n):
        g2 += grad[i] * grad[i]
    if not (isfinite(v) and isfinite(g2)):
        return 3
    gn = sqrt(g2)
    if gn < eps_grad:
        return 1
    for i in range(n):
        normal[i] = grad[i] / gn
    qnn = 0.0
    tr = 0.0
    for i in range(n):
        tr += hess[i, i]
        row = 0.0
        for j in range(n):
            row += hess[i, j] * normal[j]
        qnn += normal[i] * row
    hm = (qnn - tr) / ((n - 1) * gn)
    if not isfinite(hm):
        return 3
    value[0] = v
    gnorm[0] = gn
    mcurv[0] = hm
    return 0


def flow_rk4(int n, terms, sing_centers, p0, double arc_length, double step,
             double eps_grad, double excl_radius):
    """Fixed-step RK4 on the augmented system (position, curvature integral).

    Same contract as the reference implementation.
    """
    kinds_a, weights_a, expn_a, centers_a, dirs_a = terms
    cdef const int[::1] kinds = kinds_a
    cdef const double[::1] weights = weights_a
    cdef const int[:, ::1] expn = expn_a
    cdef const double[:, ::1] centers = centers_a
    cdef const double[:, ::1] dirs = dirs_a
    sing_a = np.ascontiguousarray(sing_centers, dtype=np.float64).reshape(-1, n)
    cdef const double[:, ::1] sing = sing_a
    cdef double excl2 = excl_radius * excl_radius
    cdef int nterms = kinds.shape[0]

    cdef double ratio = arc_length / step
    cdef long n_full = <long>ratio
    if ratio - n_full > 1.0 - 1e-9:
        n_full += 1
    cdef double rem = arc_length - n_full * step
    cdef double tol = 1e-12 * (arc_length if arc_length > 1.0 else 1.0)
    if rem < tol:
        rem = 0.0
    cdef long n_steps = n_full + (1 if rem > 0.0 else 0)
    cdef long m_max = n_steps + 1

    s_out = np.empty(m_max)
    pos_out = np.empty((m_max, n))
    gn_out = np.empty(m_max)
    mc_out = np.empty(m_max)
    ci_out = np.empty(m_max)
    val_out = np.empty(m_max)
    cdef double[::1] s_v = s_out
    cdef double[:, ::1] pos_v = pos_out
    cdef double[::1] gn_v = gn_out
    cdef double[::1] mc_v = mc_out
    cdef double[::1] ci_v = ci_out
    cdef double[::1] val_v = val_out

    scratch = np.zeros((8, n))
    cdef double[:, ::1] w_v = scratch
    hess_arr = np.empty((n, n))
    cdef double[:, ::1] hess = hess_arr
    cdef double[::1] pos = w_v[0]
    cdef double[::1] stage_pos = w_v[1]
    cdef double[::1] grad = w_v[2]
    cdef double[::1] n1 = w_v[3]
    cdef double[::1] n2 = w_v[4]
    cdef double[::1] n3 = w_v[5]
    cdef double[::1] n4 = w_v[6]
    cdef double[::1] pcomp = w_v[7]

    p0_arr = np.ascontiguousarray(p0, dtype=np.float64)
    cdef const double[::1] p0_v = p0_arr
    cdef int i
    for i in range(n):
        pos[i] = p0_v[i]

    cdef double value = 0.0, gnorm = 0.0, h1 = 0.0, h2 = 0.0, h3 = 0.0, h4 = 0.0
    cdef double integ = 0.0, comp = 0.0, y = 0.0, t = 0.0, hk
    cdef int status
    cdef long k, m

    status = _stage(n, nterms, kinds, weights, expn, centers, dirs, sing,
                    excl2, eps_grad, pos, grad, hess, n1, &value, &gnorm, &h1)
    if status != 0:
        return (status, s_out[:0], pos_out[:0], gn_out[:0], mc_out[:0],
                ci_out[:0], val_out[:0])

    s_v[0] = 0.0
    for i in range(n):
        pos_v[0, i] = pos[i]
    gn_v[0] = gnorm
    mc_v[0] = h1
    ci_v[0] = 0.0
    val_v[0] = value
    m = 1

    with nogil:
        for k in range(n_steps):
            hk = step if k < n_full else rem
            # n1/h1 hold the stage at the current sample already
            for i in range(n):
                stage_pos[i] = pos[i] + 0.5 * hk * n1[i]
            status = _stage(n, nterms, kinds, weights, expn, centers, dirs, sing,
                            excl2, eps_grad, stage_pos, grad, hess, n2,
                            &value, &gnorm, &h2)
            if status != 0:
                break
            for i in range(n):
                stage_pos[i] = pos[i] + 0.5 * hk * n2[i]
            status = _stage(n, nterms, kinds, weights, expn, centers, dirs, sing,
                            excl2, eps_grad, stage_pos, grad, hess, n3,
                            &value, &gnorm, &h3)
            if status != 0:
                break
            for i in range(n):
                stage_pos[i] = pos[i] + hk * n3[i]
            status = _stage(n, nterms, kinds, weights, expn, centers, dirs, sing,
                            excl2, eps_grad, stage_pos, grad, hess, n4,
                            &value, &gnorm, &h4)
            if status != 0:
                break
            # compensated summation keeps the accumulation roundoff near 1 ulp
            for i in range(n):
                y = (hk / 6.0) * (n1[i] + 2.0 * n2[i] + 2.0 * n3[i] + n4[i]) - pcomp[i]
                t = pos[i] + y
                pcomp[i] = (t - pos[i]) - y
                pos[i] = t
            y = (hk / 6.0) * (h1 + 2.0 * h2 + 2.0 * h3 + h4) - comp
            t = integ + y
            comp = (t - integ) - y
            integ = t
            status = _stage(n, nterms, kinds, weights, expn, centers, dirs, sing,
                            excl2, eps_grad, pos, grad, hess, n1,
                            &value, &gnorm, &h1)
            if status != 0:
                break
            s_v[m] = arc_length if k == n_steps - 1 else (k + 1) * step
            for i in range(n):
                pos_v[m, i] = pos[i]
            gn_v[m] = gnorm
            mc_v[m] = h1
            ci_v[m] = integ
            val_v[m] = value
            m += 1
        else:
            status = 0

    return (status, s_out[:m], pos_out[:m], gn_out[:m], mc_out[:m],
            ci_out[:m], val_out[:m])
