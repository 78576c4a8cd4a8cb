"""Kernel backend selection.

Two interchangeable backends implement the hot loops (term-program jet
evaluation and RK4 flow tracing):

* ``compiled`` -- Cython extension ``_core``, built at install time
* ``python``   -- pure-numpy reference ``_ref``

``HARMFLOW_BACKEND`` picks one at import: ``auto`` (default) prefers the
compiled extension and silently falls back, ``compiled`` fails hard if the
extension is missing, ``python`` forces the reference implementation.
"""

import os

from . import _ref

KIND_MONOMIAL = _ref.KIND_MONOMIAL
KIND_RADIAL = _ref.KIND_RADIAL
KIND_DIPOLE = _ref.KIND_DIPOLE
FLOW_OK = _ref.FLOW_OK
FLOW_CRITICAL = _ref.FLOW_CRITICAL
FLOW_SINGULAR = _ref.FLOW_SINGULAR
FLOW_NONFINITE = _ref.FLOW_NONFINITE


def _load():
    choice = os.environ.get("HARMFLOW_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "compiled", "python"):
        raise ImportError(
            f"HARMFLOW_BACKEND={choice!r}: expected 'auto', 'compiled' or 'python'"
        )
    if choice == "python":
        return _ref, "python"
    try:
        from . import _core
    except ImportError:
        if choice == "compiled":
            raise ImportError(
                "HARMFLOW_BACKEND=compiled but the _core extension is not built"
            )
        return _ref, "python"
    return _core, "compiled"


_impl, backend_name = _load()

jet = _impl.jet
flow_rk4 = _impl.flow_rk4


def available_backends():
    """Names of the backends importable in this environment."""
    out = ["python"]
    try:
        from . import _core  # noqa: F401
    except ImportError:
        pass
    else:
        out.insert(0, "compiled")
    return out


def get_backend(name):
    """Return the backend module for ``name`` ('compiled' or 'python')."""
    if name == "python":
        return _ref
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
