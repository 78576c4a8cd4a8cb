"""Backend interchangeability: the Cython and numpy kernels must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

import harmflow as hf
from harmflow import _kernels
from harmflow._kernels import available_backends, get_backend

from conftest import ALL_ENTRIES, draw_point

HAVE_COMPILED = "compiled" in available_backends()
needs_compiled = pytest.mark.skipif(not HAVE_COMPILED,
                                    reason="compiled backend not built")


def _both():
    return get_backend("compiled"), get_backend("python")


def test_backend_registry():
    assert "python" in available_backends()
    assert hf.backend_name in available_backends()
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_constants_shared():
    ref = get_backend("python")
    assert (_kernels.KIND_MONOMIAL, _kernels.KIND_RADIAL, _kernels.KIND_DIPOLE) == (0, 1, 2)
    assert _kernels.FLOW_OK == ref.FLOW_OK == 0


@needs_compiled
@pytest.mark.parametrize("entry", ALL_ENTRIES, ids=lambda e: e.name)
def test_jets_agree(entry):
    core, ref = _both()
    n = entry.field.dimension
    rng = np.random.default_rng(17)
    for _ in range(30):
        p = draw_point(entry, rng)
        v1, g1, H1 = core.jet(n, entry.field._terms, p)
        v2, g2, H2 = ref.jet(n, entry.field._terms, p)
        scale = max(abs(v1), float(np.max(np.abs(g1))), float(np.max(np.abs(H1))), 1.0)
        assert abs(v1 - v2) <= 1e-13 * scale
        np.testing.assert_allclose(g1, g2, atol=1e-13 * scale, rtol=0)
        np.testing.assert_allclose(H1, H2, atol=1e-13 * scale, rtol=0)


@needs_compiled
def test_radial_flow_is_bit_identical():
    core, ref = _both()
    f = hf.make_newtonian((0.0, 0.0, 0.0), 3)
    args = (3, f._terms, f.singular_points, np.array([2.0, 0.0, 0.0]),
            0.9, 1e-3, 1e-10, 1e-6)
    r1, r2 = core.flow_rk4(*args), ref.flow_rk4(*args)
    assert r1[0] == r2[0] == _kernels.FLOW_OK
    for a, b in zip(r1[1:], r2[1:]):
        np.testing.assert_array_equal(a, b)


@needs_compiled
@pytest.mark.parametrize("name", ["combo-n2-0", "combo-n3-1", "combo-n4-0",
                                  "combo-n5-1", "dipole-n3", "zonal-cubic-n3"])
def test_generic_flows_agree(name):
    core, ref = _both()
    entry = next(e for e in ALL_ENTRIES if e.name == name)
    n = entry.field.dimension
    p0 = draw_point(entry, np.random.default_rng(5))
    args = (n, entry.field._terms, entry.field.singular_points, p0,
            0.8, 1e-3, 1e-10, 1e-6)
    r1, r2 = core.flow_rk4(*args), ref.flow_rk4(*args)
    assert r1[0] == r2[0]
    for a, b in zip(r1[1:], r2[1:]):
        scale = max(1.0, float(np.max(np.abs(a))))
        np.testing.assert_allclose(a, b, atol=1e-12 * scale, rtol=0)


@needs_compiled
@pytest.mark.parametrize("case", ["critical", "singular", "nonfinite"])
def test_guard_statuses_agree(case):
    core, ref = _both()
    if case == "critical":
        f = hf.make_harmonic_polynomial([(-1.0, (2, 0)), (1.0, (0, 2))])
        args = (2, f._terms, f.singular_points, np.array([1.0, 0.0]),
                1.5, 1e-3, 1e-10, 1e-6)
        want = _kernels.FLOW_CRITICAL
    elif case == "singular":
        f = hf.make_newtonian((0.0, 0.0, 0.0), 3)
        args = (3, f._terms, f.singular_points, np.array([2e-6, 0.0, 0.0]),
                4e-6, 1e-8, 1e-10, 1e-6)
        want = _kernels.FLOW_SINGULAR
    else:
        f = hf.make_polynomial([(1.0, (600, 0))])
        args = (2, f._terms, f.singular_points, np.array([10.0, 0.0]),
                1.0, 1e-3, 1e-10, 1e-6)
        want = _kernels.FLOW_NONFINITE
    r1, r2 = core.flow_rk4(*args), ref.flow_rk4(*args)
    assert r1[0] == r2[0] == want
    assert r1[1].size == r2[1].size  # same truncation point


@pytest.mark.parametrize("backend", available_backends())
class TestSampleGrid:
    """Step-count edges: the sample grid must land exactly on S."""

    def _flow(self, backend, S, h):
        impl = get_backend(backend)
        f = hf.make_linear((1.0, 0.0))
        status, s, *_ = impl.flow_rk4(2, f._terms, f.singular_points,
                                      np.zeros(2), S, h, 1e-10, 1e-6)
        assert status == _kernels.FLOW_OK
        return s

    def test_exact_multiple(self, backend):
        s = self._flow(backend, 0.3, 0.1)
        np.testing.assert_allclose(s, [0.0, 0.1, 0.2, 0.3], atol=1e-15)
        assert s[-1] == 0.3  # no spurious sliver step

    def test_partial_final_step(self, backend):
        s = self._flow(backend, 0.25, 0.1)
        assert s.size == 4
        assert s[-1] == 0.25

    def test_single_step(self, backend):
        s = self._flow(backend, 1e-3, 1e-3)
        assert s.size == 2
        assert s[-1] == 1e-3


def test_env_var_selects_python_backend():
    env = dict(os.environ, HARMFLOW_BACKEND="python")
    code = "import harmflow; print(harmflow.backend_name)"
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True,
                          text=True, env=env, timeout=60)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "python"


def test_env_var_rejects_unknown_backend():
    env = dict(os.environ, HARMFLOW_BACKEND="cuda")
    proc = subprocess.run([sys.executable, "-c", "import harmflow"],
                          capture_output=True, text=True, env=env, timeout=60)
    assert proc.returncode != 0
    assert "HARMFLOW_BACKEND" in proc.stderr


@needs_compiled
def test_python_backend_runs_the_full_identity_check():
    # the reference backend is a drop-in: same verify result to tight tolerance
    env = dict(os.environ, HARMFLOW_BACKEND="python")
    code = (
        "import harmflow as hf\n"
        "rec = hf.verify_identity(hf.make_newtonian((0,0,0), 3), (2,0,0), 1.0, 1e-3)\n"
        "print(repr(rec.rel_error))\n"
    )
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True,
                          text=True, env=env, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert float(proc.stdout) <= 1e-9
