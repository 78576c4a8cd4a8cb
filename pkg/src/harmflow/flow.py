"""Unit-speed gradient-flow tracing.

The flow solves phi'(s) = N(phi(s)) with N = grad u/|grad u|, ascending u,
by classical fixed-step RK4 on the augmented state (phi, I) where
I' = H(phi) accumulates the level-set mean-curvature integral. The final
partial step lands exactly at the requested arc length so endpoint
comparisons are well-defined.

Every RK4 stage evaluation enforces the no-critical-point hypothesis
(|grad u| >= eps_grad) and a singularity exclusion ball around potential
centers; a violation mid-flow truncates the trace and records the reason
instead of raising.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    CriticalPoint,
    NonfiniteValue,
    NotHarmonic,
    SingularPoint,
)
from .fields import ScalarField, _as_point, _lock, eval_jet

#: The flow aborts when it enters a ball of this radius around a pole.
SINGULAR_EXCLUSION_RADIUS = 1e-6

#: Default critical-point threshold for stage evaluations.
DEFAULT_EPS_GRAD = 1e-10

_REASONS = {
    _kernels.FLOW_CRITICAL: "critical_point",
    _kernels.FLOW_SINGULAR: "singular_point",
    _kernels.FLOW_NONFINITE: "nonfinite",
}


@dataclass(frozen=True)
class FlowTrace:
    """Sampled unit-speed flow line.

    Arrays share the leading axis (one row per accepted sample, sample 0 at
    s = 0). ``curvature_integrals[k]`` is the RK4-accumulated integral of H
    from 0 to s[k]; ``values[k]`` is u at the sample. ``terminated_early``
    is None for a complete trace, else one of "critical_point",
    "singular_point", "nonfinite".
    """

    dimension: int
    step: float
    arc_length: float
    eps_grad: float
    s: np.ndarray
    positions: np.ndarray
    grad_norms: np.ndarray
    mean_curvatures: np.ndarray
    curvature_integrals: np.ndarray
    values: np.ndarray
    terminated_early: str | None

    @property
    def n_samples(self) -> int:
        return int(self.s.size)

    @property
    def curvature_integral(self) -> float:
        """Integral of H over the whole retained arc."""
        return float(self.curvature_integrals[-1])

    @property
    def reached_target(self) -> bool:
        return self.terminated_early is None


def trace_flow(field: ScalarField, p0, arc_length: float, step: float,
               eps_grad: float = DEFAULT_EPS_GRAD) -> FlowTrace:
    """Trace the ascending unit-speed gradient flow from p0.

    Raises CriticalPoint/SingularPoint/NonfiniteValue when the start point
    itself is unusable; guard hits after at least one accepted sample
    truncate the trace and set ``terminated_early`` instead.
    """
    S = float(arc_length)
    h = float(step)
    if not (S > 0.0 and np.isfinite(S)):
        raise ValueError("arc_length must be positive and finite")
    if not (h > 0.0 and np.isfinite(h)):
        raise ValueError("step must be positive and finite")
    if h > S:
        raise ValueError(f"step {h} exceeds arc length {S}")
    n = field.dimension
    q0 = _as_point(p0, n)

    status, s, pos, gn, mc, ci, val = _kernels.flow_rk4(
        n, field._terms, field.singular_points, q0, S, h,
        float(eps_grad), SINGULAR_EXCLUSION_RADIUS)

    if s.size == 0:
        if status == _kernels.FLOW_CRITICAL:
            raise CriticalPoint(f"start point {q0.tolist()} is critical (eps_grad={eps_grad})")
        if status == _kernels.FLOW_SINGULAR:
            raise SingularPoint(f"start point {q0.tolist()} is inside a singular exclusion ball")
        raise NonfiniteValue(f"non-finite field values at start point {q0.tolist()}")

    return FlowTrace(
        dimension=n, step=h, arc_length=S, eps_grad=float(eps_grad),
        s=_lock(s), positions=_lock(pos), grad_norms=_lock(gn),
        mean_curvatures=_lock(mc), curvature_integrals=_lock(ci),
        values=_lock(val),
        terminated_early=_REASONS.get(status))


def gradient_norm_along(trace: FlowTrace) -> list[tuple[float, float]]:
    """(s, |grad u|) pairs along the trace.

    Along a unit-speed ascending flow this sequence equals d/ds of
    u(phi(s)).
    """
    return [(float(a), float(b)) for a, b in zip(trace.s, trace.grad_norms)]


def _d1_nonuniform(y0, y1, y2, h1, h2):
    """First derivative at the middle of three points; exact for quadratics."""
    return (h1 * h1 * y2 - h2 * h2 * y0 - (h1 * h1 - h2 * h2) * y1) / (h1 * h2 * (h1 + h2))


def _d2_nonuniform(y0, y1, y2, h1, h2):
    """Second derivative at the middle of three points; exact for quadratics."""
    return 2.0 * (h2 * y0 - (h1 + h2) * y1 + h1 * y2) / (h1 * h2 * (h1 + h2))


def check_log_derivative(trace: FlowTrace, field: ScalarField) -> list[tuple[float, float]]:
    """Residuals of H = (1/(n-1)) d/ds log|grad u| at interior samples.

    The identity is specific to harmonic u (it fails by Delta f/((n-1)|grad f|)
    otherwise), so a non-harmonic field is rejected with NotHarmonic. The
    derivative is a centered difference on the sample grid, which may be
    nonuniform at the last step; residuals are O(step^2).
    """
    if not field.harmonic:
        raise NotHarmonic(
            "the log-derivative identity requires a harmonic field; "
            f"{field!r} is not flagged harmonic")
    if trace.n_samples < 3:
        raise ValueError("need at least 3 samples for a centered difference")
    n1 = trace.dimension - 1
    logg = np.log(trace.grad_norms)
    out = []
    for k in range(1, trace.n_samples - 1):
        h1 = float(trace.s[k] - trace.s[k - 1])
        h2 = float(trace.s[k + 1] - trace.s[k])
        d = _d1_nonuniform(logg[k - 1], logg[k], logg[k + 1], h1, h2)
        out.append((float(trace.s[k]), float(trace.mean_curvatures[k] - d / n1)))
    return out


def second_derivative_identity(trace: FlowTrace, field: ScalarField) -> list[tuple[float, float]]:
    """Residuals of Q(N,N) = d^2/ds^2 u(phi(s)) at interior samples.

    This holds for any C^2 field (harmonicity not needed): along a
    unit-speed flow the second derivative of u along the line is the
    Hessian form on the unit normal. Q(N,N) is recomputed from exact jets
    at the sampled positions; the second difference is O(step^2).
    """
    if trace.n_samples < 3:
        raise ValueError("need at least 3 samples for a centered second difference")
    out = []
    for k in range(1, trace.n_samples - 1):
        jet = eval_jet(field, trace.positions[k])
        normal = jet.gradient / trace.grad_norms[k]
        qnn = float(normal @ jet.hessian @ normal)
        h1 = float(trace.s[k] - trace.s[k - 1])
        h2 = float(trace.s[k + 1] - trace.s[k])
        d2 = _d2_nonuniform(trace.values[k - 1], trace.values[k], trace.values[k + 1], h1, h2)
        out.append((float(trace.s[k]), qnn - d2))
    return out


def write_csv(trace: FlowTrace, path_or_file) -> None:
    """Write the trace as CSV: s, x_1..x_n, grad_norm, mean_curv, curv_integral.

    Floats are emitted via repr (round-trip exact).
    """
    def _dump(fh):
        w = csv.writer(fh)
        w.writerow(["s"] + [f"x_{i + 1}" for i in range(trace.dimension)]
                   + ["grad_norm", "mean_curv", "curv_integral"])
        for k in range(trace.n_samples):
            row = [trace.s[k], *trace.positions[k], trace.grad_norms[k],
                   trace.mean_curvatures[k], trace.curvature_integrals[k]]
            w.writerow([repr(float(x)) for x in row])

    if hasattr(path_or_file, "write"):
        _dump(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _dump(fh)
