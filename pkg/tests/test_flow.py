"""Unit-speed gradient-flow tracing against closed-form solutions."""

import io
import math

import numpy as np
import pytest

import harmflow as hf
from harmflow.errors import CriticalPoint, NonfiniteValue, NotHarmonic, SingularPoint
from harmflow.flow import write_csv

from conftest import HARMONIC_ENTRIES, draw_scenario

SADDLE_FLIPPED = [(-1.0, (2, 0)), (1.0, (0, 2))]  # u = y^2 - x^2


def _newtonian3():
    return hf.make_newtonian((0.0, 0.0, 0.0), 3)


# ---------------------------------------------------------------------------
# closed-form traces


def test_linear_trace_is_a_straight_line():
    f = hf.make_linear((0.0, 0.0, 1.0))
    tr = hf.trace_flow(f, (0.0, 0.0, 0.0), arc_length=1.0, step=0.01)
    assert tr.terminated_early is None
    assert tr.reached_target
    assert tr.positions[-1] == pytest.approx([0.0, 0.0, 1.0], abs=1e-13)
    assert tr.curvature_integral == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(tr.grad_norms, 1.0, rtol=1e-14)
    # every sample sits on the z-axis
    assert np.max(np.abs(tr.positions[:, :2])) < 1e-13


def test_radial_trace_moves_inward():
    # u = 1/r ascends toward the origin: position (2-s, 0, 0), H = 1/(2-s)
    tr = hf.trace_flow(_newtonian3(), (2.0, 0.0, 0.0), arc_length=0.9, step=1e-3)
    assert tr.reached_target
    np.testing.assert_allclose(tr.positions[:, 0], 2.0 - tr.s, atol=1e-10)
    assert tr.positions[-1, 0] == pytest.approx(1.1, abs=1e-10)
    assert tr.curvature_integral == pytest.approx(math.log(2.0 / 1.1), abs=1e-8)
    np.testing.assert_allclose(tr.mean_curvatures, 1.0 / (2.0 - tr.s), rtol=1e-9)


def test_axis_trace_of_harmonic_quadratic():
    # u = x^2 + y^2 - 2z^2 from (1,0,0): stays on the axis, x(s) = 1 + s
    f = hf.make_harmonic_polynomial([(1.0, (2, 0, 0)), (1.0, (0, 2, 0)), (-2.0, (0, 0, 2))])
    tr = hf.trace_flow(f, (1.0, 0.0, 0.0), arc_length=1.0, step=1e-3)
    assert tr.positions[-1] == pytest.approx([2.0, 0.0, 0.0], abs=1e-10)
    assert tr.curvature_integral == pytest.approx(0.5 * math.log(2.0), abs=1e-8)
    # |grad u| = 2x on the axis
    got = hf.gradient_norm_along(tr)
    assert got[0] == (0.0, pytest.approx(2.0))
    for s, g in got[::100]:
        assert g == pytest.approx(2.0 * (1.0 + s), rel=1e-9)


def test_gradient_norm_along_radial():
    tr = hf.trace_flow(_newtonian3(), (2.0, 0.0, 0.0), arc_length=0.9, step=1e-3)
    for s, g in hf.gradient_norm_along(tr)[::200]:
        assert g == pytest.approx(1.0 / (2.0 - s) ** 2, rel=1e-9)


# ---------------------------------------------------------------------------
# structural invariants


def test_unit_speed_and_sample_grid():
    tr = hf.trace_flow(_newtonian3(), (2.0, 0.0, 0.0), arc_length=0.9005, step=1e-3)
    steps = np.diff(tr.s)
    assert steps[-1] == pytest.approx(5e-4, rel=1e-9)  # partial final step
    inc = np.linalg.norm(np.diff(tr.positions, axis=0), axis=1)
    np.testing.assert_allclose(inc[:-1], 1e-3, atol=1e-6)  # |dphi| = h to 1e-3*h
    assert tr.s[0] == 0.0
    assert np.all(steps > 0)


@pytest.mark.parametrize("entry", HARMONIC_ENTRIES[::3], ids=lambda e: e.name)
def test_monotone_ascent_and_level_bracketing(entry):
    rng = np.random.default_rng(55)
    p0, S = draw_scenario(entry, rng)
    tr = hf.trace_flow(entry.field, p0, arc_length=S, step=1e-3)
    assert tr.terminated_early is None
    assert np.all(np.diff(tr.values) > 0)  # flow strictly ascends u
    assert np.all(tr.grad_norms > 0)
    # intermediate-value instrumentation: interior levels are bracketed
    for a in np.linspace(tr.values[0], tr.values[-1], 7)[1:-1]:
        k = np.searchsorted(tr.values, a)
        assert 0 < k < tr.n_samples
        assert tr.values[k - 1] <= a <= tr.values[k]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_rk4_order_on_radial_benchmarks(n):
    """Endpoint and integral errors shrink ~16x per halving until roundoff."""
    f = hf.make_newtonian([0.0] * n, n)
    if n == 2:
        # log r ascends outward; drive it inward by flipping the sign
        f = hf.combine([(-1.0, f)])
    p0 = np.zeros(n)
    p0[0] = 2.0
    S = 0.9
    r_end = 2.0 - S
    exact_integral = math.log(2.0 / r_end)
    errs_pos, errs_int = [], []
    for h in (4e-3, 2e-3, 1e-3):
        tr = hf.trace_flow(f, p0, arc_length=S, step=h)
        target = np.zeros(n)
        target[0] = r_end
        errs_pos.append(np.linalg.norm(tr.positions[-1] - target))
        errs_int.append(abs(tr.curvature_integral - exact_integral))
    for errs in (errs_pos, errs_int):
        for e0, e1 in zip(errs, errs[1:]):
            if e0 < 1e-12:
                continue
            assert 10.0 < e0 / e1 < 22.0, errs


def test_reversal_returns_to_start():
    f = _newtonian3()
    tr = hf.trace_flow(f, (2.0, 0.0, 0.0), arc_length=0.9, step=1e-3)
    back = hf.trace_flow(hf.combine([(-1.0, f)]), tr.positions[-1],
                         arc_length=0.9, step=1e-3)
    assert np.linalg.norm(back.positions[-1] - [2.0, 0.0, 0.0]) < 1e-10


# ---------------------------------------------------------------------------
# guard behavior


def test_flow_stops_at_a_critical_point():
    # u = y^2 - x^2 from (1, 0) flows straight at the saddle point at the origin
    f = hf.make_harmonic_polynomial(SADDLE_FLIPPED)
    tr = hf.trace_flow(f, (1.0, 0.0), arc_length=1.5, step=1e-3)
    assert tr.terminated_early == "critical_point"
    assert not tr.reached_target
    assert tr.s[-1] == pytest.approx(0.999, abs=2e-3)
    assert np.max(np.abs(tr.positions[:, 1])) < 1e-12


def test_flow_stops_at_a_singular_ball():
    tr = hf.trace_flow(_newtonian3(), (2e-6, 0.0, 0.0), arc_length=4e-6, step=1e-8)
    assert tr.terminated_early == "singular_point"
    assert not tr.reached_target
    assert tr.s[-1] == pytest.approx(1e-6, rel=0.05)


def test_flow_truncated_before_first_step_keeps_one_sample():
    # the first RK4 stage probes inside the exclusion ball
    tr = hf.trace_flow(_newtonian3(), (1.5e-6, 0.0, 0.0), arc_length=4e-6, step=2e-6)
    assert tr.n_samples == 1
    assert tr.terminated_early == "singular_point"


def test_start_point_failures_raise():
    saddle = hf.make_harmonic_polynomial([(1.0, (2, 0)), (-1.0, (0, 2))])
    with pytest.raises(CriticalPoint):
        hf.trace_flow(saddle, (0.0, 0.0), arc_length=1.0, step=1e-3)
    with pytest.raises(SingularPoint):
        hf.trace_flow(_newtonian3(), (5e-7, 0.0, 0.0), arc_length=1.0, step=1e-3)
    blowup = hf.make_polynomial([(1.0, (600, 0))])
    with pytest.raises(NonfiniteValue):
        hf.trace_flow(blowup, (10.0, 0.0), arc_length=1.0, step=1e-3)


def test_parameter_validation():
    f = _newtonian3()
    with pytest.raises(ValueError):
        hf.trace_flow(f, (2.0, 0.0, 0.0), arc_length=-1.0, step=1e-3)
    with pytest.raises(ValueError):
        hf.trace_flow(f, (2.0, 0.0, 0.0), arc_length=1.0, step=0.0)
    with pytest.raises(ValueError):
        hf.trace_flow(f, (2.0, 0.0, 0.0), arc_length=0.5, step=0.7)


# ---------------------------------------------------------------------------
# pointwise derivative identities along traces


def test_log_derivative_linear_is_zero():
    f = hf.make_linear((1.0, 1.0))
    tr = hf.trace_flow(f, (0.0, 0.0), arc_length=0.5, step=1e-2)
    res = hf.check_log_derivative(tr, f)
    assert len(res) == tr.n_samples - 2
    assert max(abs(r) for _, r in res) < 1e-12


def test_log_derivative_radial():
    tr = hf.trace_flow(_newtonian3(), (2.0, 0.0, 0.0), arc_length=0.9, step=1e-3)
    res = hf.check_log_derivative(tr, _newtonian3())
    assert max(abs(r) for _, r in res) <= 1e-5


def test_log_derivative_requires_harmonic():
    sphere = hf.make_polynomial([(1.0, (2, 0)), (1.0, (0, 2))])
    tr = hf.trace_flow(sphere, (1.0, 0.0), arc_length=0.5, step=1e-3)
    with pytest.raises(NotHarmonic):
        hf.check_log_derivative(tr, sphere)


def test_log_derivative_needs_three_samples():
    f = hf.make_linear((1.0, 0.0))
    tr = hf.trace_flow(f, (0.0, 0.0), arc_length=1e-3, step=1e-3)
    assert tr.n_samples == 2
    with pytest.raises(ValueError):
        hf.check_log_derivative(tr, f)


def test_second_derivative_identity_quadratic():
    # f = |p|^2 from (1,0,0): g(s) = (1+s)^2, g'' = 2 = N'QN; exact for FD
    sphere = hf.make_polynomial([(1.0, (2, 0, 0)), (1.0, (0, 2, 0)), (1.0, (0, 0, 2))])
    tr = hf.trace_flow(sphere, (1.0, 0.0, 0.0), arc_length=0.8, step=1e-3)
    res = hf.second_derivative_identity(tr, sphere)
    assert max(abs(r) for _, r in res) < 1e-7


def test_second_derivative_identity_converges_quadratically():
    f = _newtonian3()
    maxres = []
    for h in (2e-3, 1e-3):
        tr = hf.trace_flow(f, (2.0, 0.0, 0.0), arc_length=0.8, step=h)
        res = hf.second_derivative_identity(tr, f)
        maxres.append(max(abs(r) for _, r in res))
    assert 3.0 < maxres[0] / maxres[1] < 5.0


# ---------------------------------------------------------------------------
# serialization


def test_csv_round_trip():
    tr = hf.trace_flow(_newtonian3(), (2.0, 0.0, 0.0), arc_length=0.05, step=1e-2)
    buf = io.StringIO()
    write_csv(tr, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "s,x_1,x_2,x_3,grad_norm,mean_curv,curv_integral"
    assert len(lines) == tr.n_samples + 1
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    np.testing.assert_array_equal(data[:, 0], tr.s)
    np.testing.assert_array_equal(data[:, 1:4], tr.positions)
    np.testing.assert_array_equal(data[:, 4], tr.grad_norms)
    np.testing.assert_array_equal(data[:, 5], tr.mean_curvatures)
    np.testing.assert_array_equal(data[:, 6], tr.curvature_integrals)


def test_csv_to_path(tmp_path):
    tr = hf.trace_flow(hf.make_linear((1.0, 0.0)), (0.0, 0.0), arc_length=0.1, step=0.05)
    out = tmp_path / "trace.csv"
    write_csv(tr, out)
    text = out.read_text()
    assert text.startswith("s,x_1,x_2,grad_norm")
    assert len(text.strip().splitlines()) == 4  # header + 3 samples
