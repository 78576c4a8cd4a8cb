"""Level-hypersurface geometry at a point.

Given the second-order jet of a field f with grad f != 0, the level set
through the point is an (n-1)-surface. This module builds an orthonormal
frame (unit normal N = grad f/|grad f| plus tangent basis), evaluates the
curvature of normal sections, and computes the mean curvature H three
independent ways that must agree:

* the closed formula  H = (N'QN - tr Q) / ((n-1) |grad f|),
* minus the tangent-diagonal trace of Q over (n-1) |grad f|,
* averaging the normal-section curvature over random tangent directions
  (plus a deterministic equispaced circle rule when n = 3).

Sign convention: a normal section through p with tangent v satisfies
gamma''(0) = kappa N, i.e. kappa = -Q(v,v)/|grad f|. With N oriented along
the gradient, the convex level spheres of f = |p|^2 get H = -1/r; the level
spheres of the decaying potential 1/|p| (N inward) get H = +1/r. At n = 2
the "mean" curvature is just the signed curvature of the level curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CriticalPoint, DimensionMismatch, NotTangent
from .fields import Jet2

#: Base factor for the critical-point threshold; see default_eps_grad.
EPS_GRAD_BASE = 1e-10

#: Equispaced angles for the deterministic tangent-circle rule at n=3.
CIRCLE_ANGLES = 64


@dataclass(frozen=True)
class LevelSetFrame:
    """Orthonormal frame of the level set: unit normal + tangent basis.

    tangent_basis has shape (n-1, n); its rows are mutually orthonormal
    and orthogonal to normal.
    """

    point: np.ndarray
    normal: np.ndarray
    tangent_basis: np.ndarray
    grad_norm: float


def default_eps_grad(jet: Jet2) -> float:
    """Adaptive critical-point threshold.

    Scales the base 1e-10 by the Hessian magnitude and the point's size, so
    a gradient that one step of size ~|p| could plausibly cancel counts as
    critical.
    """
    scale = max(1.0, float(np.max(np.abs(jet.point)))) if jet.point.size else 1.0
    hmax = float(np.max(np.abs(jet.hessian)))
    return EPS_GRAD_BASE * (1.0 + hmax * scale)


def _grad_norm_checked(jet: Jet2, eps_grad) -> float:
    eps = default_eps_grad(jet) if eps_grad is None else float(eps_grad)
    gn = float(np.linalg.norm(jet.gradient))
    if gn < eps:
        raise CriticalPoint(
            f"|grad| = {gn:.3e} < eps_grad = {eps:.3e} at {jet.point.tolist()}")
    return gn


def frame_at(jet: Jet2, eps_grad: float | None = None) -> LevelSetFrame:
    """Unit normal and tangent basis at the jet's point.

    The tangent basis comes from the Householder reflection exchanging N
    with the n-th coordinate axis: deterministic, orthonormal to machine
    precision, no Gram-Schmidt drift. Raises CriticalPoint when the
    gradient norm falls below eps_grad (default: adaptive, see
    default_eps_grad).
    """
    gn = _grad_norm_checked(jet, eps_grad)
    n = jet.dimension
    normal = jet.gradient / gn
    # w = N - sigma*e_n with sigma chosen so w_n cannot cancel
    sigma = -1.0 if normal[n - 1] >= 0.0 else 1.0
    w = normal.copy()
    w[n - 1] -= sigma
    refl = np.eye(n) - (2.0 / float(w @ w)) * np.outer(w, w)
    tangent = refl[:, : n - 1].T.copy()
    return LevelSetFrame(point=jet.point, normal=normal, tangent_basis=tangent,
                         grad_norm=gn)


def normal_section_curvature(jet: Jet2, v, eps_grad: float | None = None) -> float:
    """Signed curvature kappa = -Q(v,v)/|grad f| of the normal section along v.

    v must be a unit vector tangent to the level set (|v.N| <= 1e-8,
    ||v|-1| <= 1e-10); otherwise NotTangent is raised.
    """
    gn = _grad_norm_checked(jet, eps_grad)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (jet.dimension,):
        raise DimensionMismatch(f"tangent vector must have length {jet.dimension}")
    vnorm = float(np.linalg.norm(v))
    if abs(vnorm - 1.0) > 1e-10:
        raise NotTangent(f"|v| = {vnorm!r} is not 1 within 1e-10")
    proj = float(v @ jet.gradient) / gn
    if abs(proj) > 1e-8:
        raise NotTangent(f"v.N = {proj:.3e} exceeds the 1e-8 tangency tolerance")
    return -float(v @ jet.hessian @ v) / gn


def mean_curvature(jet: Jet2, eps_grad: float | None = None) -> float:
    """H = (Q(N,N) - tr Q) / ((n-1) |grad f|).

    For a harmonic field tr Q = 0 and this is Q(N,N)/((n-1)|grad f|). At
    n = 2 it reduces to the signed curvature of the level curve.
    """
    gn = _grad_norm_checked(jet, eps_grad)
    n = jet.dimension
    normal = jet.gradient / gn
    qnn = float(normal @ jet.hessian @ normal)
    return (qnn - float(np.trace(jet.hessian))) / ((n - 1) * gn)


def mean_curvature_by_tangent_trace(jet: Jet2, frame: LevelSetFrame) -> float:
    """H as minus the tangent-diagonal part of Q over (n-1)|grad f|.

    Since Q(N,N) + sum_i Q(t_i,t_i) = tr Q, this is algebraically the same
    as mean_curvature; numerically it exercises the tangent basis instead
    of the trace.
    """
    t = frame.tangent_basis
    diag = float(np.einsum("ij,jk,ik->", t, jet.hessian, t))
    return -diag / ((jet.dimension - 1) * frame.grad_norm)


def mean_curvature_by_averaging(jet: Jet2, frame: LevelSetFrame,
                                n_samples: int = 10_000,
                                seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo mean of the normal-section curvature over tangent directions.

    Directions are Gaussian vectors in the tangent span, normalized — i.e.
    uniform on the unit (n-2)-sphere of the tangent space. Returns
    (estimate, standard error of the mean). At n = 2 the tangent sphere is
    the pair {+t, -t} and the estimate is exact with zero spread.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    t = frame.tangent_basis
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, t.shape[0]))
    norms = np.linalg.norm(z, axis=1)
    while np.any(norms < 1e-12):  # essentially impossible, but stay exact
        bad = norms < 1e-12
        z[bad] = rng.standard_normal((int(np.count_nonzero(bad)), t.shape[0]))
        norms = np.linalg.norm(z, axis=1)
    v = (z / norms[:, None]) @ t
    kappa = -np.einsum("ij,jk,ik->i", v, jet.hessian, v) / frame.grad_norm
    estimate = float(np.mean(kappa))
    std_error = float(np.std(kappa, ddof=1) / math.sqrt(n_samples))
    return estimate, std_error


def mean_curvature_by_circle(jet: Jet2, frame: LevelSetFrame,
                             n_angles: int = CIRCLE_ANGLES) -> float:
    """Deterministic tangent-circle average, n = 3 only.

    Equispaced trapezoid rule on the circle v = cos(a) t1 + sin(a) t2; exact
    for the quadratic integrand Q(v,v), so it matches the closed formula to
    roundoff.
    """
    if jet.dimension != 3:
        raise DimensionMismatch("the circle rule needs a 2-D tangent space (n = 3)")
    if n_angles < 3:
        raise ValueError("n_angles must be >= 3")
    t1, t2 = frame.tangent_basis
    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    v = np.outer(np.cos(angles), t1) + np.outer(np.sin(angles), t2)
    kappa = -np.einsum("ij,jk,ik->i", v, jet.hessian, v) / frame.grad_norm
    return float(np.mean(kappa))
