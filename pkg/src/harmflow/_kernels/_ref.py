"""Pure-numpy reference kernels.

This module is the readable twin of the compiled extension ``_core``. Both
expose the same two entry points with identical semantics:

``jet(n, terms, p)``
    Evaluate value, gradient and Hessian of a flattened term program at ``p``.

``flow_rk4(n, terms, sing_centers, p0, arc_length, step, eps_grad, excl_radius)``
    Integrate the unit-speed flow along the normalized gradient with
    classical fixed-step RK4, accumulating the level-set mean-curvature
    integral as an augmented state component.

A term program is the flattened form of a scalar field: each term is either a
monomial, a radial potential (``|p-c|^(2-n)``, or ``log|p-c|`` in the plane),
or the directional derivative of a radial potential. Arrays:

``kinds``   int32 (m,)    0 monomial, 1 radial potential, 2 dipole
``weights`` float64 (m,)  multiplier (monomial coefficients are folded in)
``expn``    int32 (m, n)  monomial exponents (zero for other kinds)
``centers`` float64 (m, n)
``dirs``    float64 (m, n) dipole direction (unit length)
"""

import numpy as np

KIND_MONOMIAL = 0
KIND_RADIAL = 1
KIND_DIPOLE = 2

FLOW_OK = 0
FLOW_CRITICAL = 1
FLOW_SINGULAR = 2
FLOW_NONFINITE = 3


def _accumulate_monomial(w, e, p, grad, hess):
    n = p.size
    v = 1.0
    for k in range(n):
        v *= p[k] ** int(e[k])
    for i in range(n):
        ei = int(e[i])
        if ei == 0:
            continue
        g = float(ei)
        for k in range(n):
            g *= p[k] ** (int(e[k]) - (1 if k == i else 0))
        grad[i] += w * g
        if ei >= 2:
            d = float(ei * (ei - 1))
            for k in range(n):
                d *= p[k] ** (int(e[k]) - (2 if k == i else 0))
            hess[i, i] += w * d
        for j in range(i + 1, n):
            ej = int(e[j])
            if ej == 0:
                continue
            c = float(ei * ej)
            for k in range(n):
                c *= p[k] ** (int(e[k]) - (1 if k == i else 0) - (1 if k == j else 0))
            hess[i, j] += w * c
            hess[j, i] += w * c
    return w * v


def _accumulate_radial(w, c, p, grad, hess):
    n = p.size
    x = p - c
    r2 = float(x @ x)
    eye = np.eye(n)
    if n == 2:
        # log r
        v = 0.5 * np.log(r2)
        grad += w * x / r2
        hess += w * (eye / r2 - 2.0 * np.outer(x, x) / (r2 * r2))
    else:
        # r^(2-n)
        q = 2.0 - n
        rm_n = r2 ** (-0.5 * n)          # r^(-n)
        v = r2 ** (0.5 * q)              # r^(2-n)
        grad += (w * q * rm_n) * x
        hess += (w * q) * (rm_n * eye - (n * rm_n / r2) * np.outer(x, x))
    return w * v


def _accumulate_dipole(w, c, d, p, grad, hess):
    n = p.size
    x = p - c
    r2 = float(x @ x)
    a = float(x @ d)
    eye = np.eye(n)
    xx = np.outer(x, x)
    xd = np.outer(x, d)
    if n == 2:
        v = a / r2
        grad += w * (d / r2 - 2.0 * a * x / (r2 * r2))
        hess += w * (-2.0 * (xd + xd.T + a * eye) / (r2 * r2)
                     + 8.0 * a * xx / (r2 * r2 * r2))
    else:
        q = 2.0 - n
        rm_n2 = r2 ** (-0.5 * n - 1.0)   # r^(-n-2)
        v = q * (rm_n2 * r2) * a         # q r^(-n) a
        grad += (w * q) * (-n * rm_n2 * a * x + (rm_n2 * r2) * d)
        hess += (w * q) * (n * (n + 2.0) * (rm_n2 / r2) * a * xx
                           - n * rm_n2 * (a * eye + xd + xd.T))
    return w * v


def jet(n, terms, p):
    """Evaluate a term program; returns ``(value, gradient, hessian)``."""
    kinds, weights, expn, centers, dirs = terms
    p = np.asarray(p, dtype=np.float64)
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    value = 0.0
    # overflow to inf is intentional here: callers check finiteness and
    # report it, matching the compiled kernel's silent IEEE semantics
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(kinds.shape[0]):
            w = weights[t]
            k = kinds[t]
            if k == KIND_MONOMIAL:
                value += _accumulate_monomial(w, expn[t], p, grad, hess)
            elif k == KIND_RADIAL:
                value += _accumulate_radial(w, centers[t], p, grad, hess)
            else:
                value += _accumulate_dipole(w, centers[t], dirs[t], p, grad, hess)
    return value, grad, hess


def _stage(n, terms, sing_centers, excl2, eps_grad, pos):
    """Evaluate one flow stage: unit normal and mean curvature at ``pos``.

    Returns ``(status, value, gnorm, normal, mean_curv)``; on failure only
    the status is meaningful.
    """
    for c in sing_centers:
        dx = pos - c
        if float(dx @ dx) < excl2:
            return FLOW_SINGULAR, 0.0, 0.0, None, 0.0
    value, grad, hess = jet(n, terms, pos)
    g2 = float(grad @ grad)
    if not (np.isfinite(value) and np.isfinite(g2)):
        return FLOW_NONFINITE, 0.0, 0.0, None, 0.0
    gnorm = np.sqrt(g2)
    if gnorm < eps_grad:
        return FLOW_CRITICAL, 0.0, 0.0, None, 0.0
    normal = grad / gnorm
    mean_curv = (float(normal @ hess @ normal) - float(np.trace(hess))) / ((n - 1) * gnorm)
    if not np.isfinite(mean_curv):
        return FLOW_NONFINITE, 0.0, 0.0, None, 0.0
    return FLOW_OK, value, gnorm, normal, mean_curv


def flow_rk4(n, terms, sing_centers, p0, arc_length, step, eps_grad, excl_radius):
    """Fixed-step RK4 on the augmented system (position, curvature integral).

    Returns ``(status, s, positions, grad_norms, mean_curvs, curv_integrals,
    values)`` with one row per accepted sample; sample 0 is the start point.
    A nonzero status means the flow stopped before reaching ``arc_length``.
    """
    sing_centers = np.asarray(sing_centers, dtype=np.float64).reshape(-1, n)
    excl2 = excl_radius * excl_radius

    ratio = arc_length / step
    n_full = int(np.floor(ratio))
    if ratio - n_full > 1.0 - 1e-9:
        n_full += 1
    rem = arc_length - n_full * step
    if rem < 1e-12 * max(1.0, arc_length):
        rem = 0.0
    n_steps = n_full + (1 if rem > 0.0 else 0)

    m_max = n_steps + 1
    s_out = np.empty(m_max)
    pos_out = np.empty((m_max, n))
    gn_out = np.empty(m_max)
    mc_out = np.empty(m_max)
    ci_out = np.empty(m_max)
    val_out = np.empty(m_max)

    pos = np.array(p0, dtype=np.float64)
    status, value, gnorm, normal, mcurv = _stage(n, terms, sing_centers, excl2, eps_grad, pos)
    if status != FLOW_OK:
        return status, s_out[:0], pos_out[:0], gn_out[:0], mc_out[:0], ci_out[:0], val_out[:0]

    integ = 0.0
    comp = 0.0  # Kahan compensation for the integral accumulation
    pcomp = np.zeros(n)  # and for the position accumulation
    s_out[0] = 0.0
    pos_out[0] = pos
    gn_out[0] = gnorm
    mc_out[0] = mcurv
    ci_out[0] = 0.0
    val_out[0] = value
    m = 1

    for k in range(n_steps):
        hk = step if k < n_full else rem
        # k1 is the recording evaluation of the current sample
        n1, h1 = normal, mcurv
        status, _, _, n2, h2 = _stage(n, terms, sing_centers, excl2, eps_grad,
                                      pos + (0.5 * hk) * n1)
        if status != FLOW_OK:
            break
        status, _, _, n3, h3 = _stage(n, terms, sing_centers, excl2, eps_grad,
                                      pos + (0.5 * hk) * n2)
        if status != FLOW_OK:
            break
        status, _, _, n4, h4 = _stage(n, terms, sing_centers, excl2, eps_grad,
                                      pos + hk * n3)
        if status != FLOW_OK:
            break
        # compensated summation keeps the accumulation roundoff near 1 ulp
        py = (hk / 6.0) * (n1 + 2.0 * n2 + 2.0 * n3 + n4) - pcomp
        pt = pos + py
        pcomp = (pt - pos) - py
        pos = pt
        y = (hk / 6.0) * (h1 + 2.0 * h2 + 2.0 * h3 + h4) - comp
        t = integ + y
        comp = (t - integ) - y
        integ = t
        status, value, gnorm, normal, mcurv = _stage(n, terms, sing_centers, excl2, eps_grad, pos)
        if status != FLOW_OK:
            break
        s_out[m] = arc_length if k == n_steps - 1 else (k + 1) * step
        pos_out[m] = pos
        gn_out[m] = gnorm
        mc_out[m] = mcurv
        ci_out[m] = integ
        val_out[m] = value
        m += 1
    else:
        status = FLOW_OK

    return status, s_out[:m], pos_out[:m], gn_out[:m], mc_out[:m], ci_out[:m], val_out[:m]
