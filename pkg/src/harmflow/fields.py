"""Scalar fields with exact derivatives.

The field catalog covers linear functions, polynomials (with a symbolic
harmonicity check on the monomial exponents), radial potentials
(``|p-c|^(2-n)`` for n >= 3, ``log|p-c|`` in the plane), dipoles (directional
derivatives of the radial potential), and weighted combinations. Every field
carries closed-form value/gradient/Hessian evaluators; a finite-difference
jet is provided as an independent oracle for the tests.

Fields are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DimensionMismatch,
    InvalidFieldSpec,
    NonfiniteValue,
    SingularPoint,
)

# Evaluations closer than this to a potential's center are refused.
SINGULAR_EVAL_RADIUS = 1e-9

# Default finite-difference steps, scaled by max(1, |p|_inf) at the point.
FD_STEP_GRADIENT = 1e-5
FD_STEP_HESSIAN = 1e-4


@dataclass(frozen=True)
class Jet2:
    """Second-order jet: value, gradient and Hessian of a field at a point."""

    point: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    dimension: int


class ScalarField:
    """An n-dimensional scalar field with exact derivative evaluators.

    Do not instantiate directly; use the ``make_*`` constructors or
    :func:`combine`. Internally the field is a flat "term program" (see
    ``_kernels._ref``) shared by both evaluation backends.
    """

    __slots__ = ("_n", "_descriptor", "_harmonic", "_terms", "_singular")

    def __init__(self, dimension, descriptor, harmonic, terms, singular):
        self._n = int(dimension)
        self._descriptor = descriptor
        self._harmonic = bool(harmonic)
        self._terms = terms
        self._singular = singular

    @property
    def dimension(self) -> int:
        return self._n

    @property
    def harmonic(self) -> bool:
        """True iff the field is harmonic by construction (trace-free Hessian)."""
        return self._harmonic

    @property
    def descriptor(self) -> dict:
        """JSON-serializable description; round-trips via field_from_descriptor."""
        return copy.deepcopy(self._descriptor)

    @property
    def singular_points(self) -> np.ndarray:
        """Centers where the field is undefined, shape (k, n); read-only."""
        return self._singular

    def value(self, p) -> float:
        return eval_jet(self, p).value

    def gradient(self, p) -> np.ndarray:
        return eval_jet(self, p).gradient

    def hessian(self, p) -> np.ndarray:
        return eval_jet(self, p).hessian

    def __repr__(self):
        kind = self._descriptor.get("kind", "?")
        return f"ScalarField({kind!r}, n={self._n}, harmonic={self._harmonic})"


def _as_point(p, n: int) -> np.ndarray:
    q = np.asarray(p, dtype=np.float64)
    if q.ndim != 1 or q.size != n:
        raise DimensionMismatch(f"expected a point of length {n}, got shape {q.shape}")
    return q


def _lock(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _build(dimension, descriptor, harmonic, term_list, singular) -> ScalarField:
    """Assemble the flat term arrays from (kind, weight, expn, center, dir) tuples."""
    n = int(dimension)
    m = len(term_list)
    kinds = np.zeros(m, dtype=np.int32)
    weights = np.zeros(m, dtype=np.float64)
    expn = np.zeros((m, n), dtype=np.int32)
    centers = np.zeros((m, n), dtype=np.float64)
    dirs = np.zeros((m, n), dtype=np.float64)
    for t, (kind, w, e, c, d) in enumerate(term_list):
        kinds[t] = kind
        weights[t] = w
        if e is not None:
            expn[t] = e
        if c is not None:
            centers[t] = c
        if d is not None:
            dirs[t] = d
    sing = np.asarray(singular, dtype=np.float64).reshape(-1, n)
    terms = tuple(_lock(a) for a in (kinds, weights, expn, centers, dirs))
    return ScalarField(n, descriptor, harmonic, terms, _lock(sing))


def eval_jet(field: ScalarField, p) -> Jet2:
    """Exact second-order jet of ``field`` at ``p``.

    Raises DimensionMismatch for a wrong-length point, SingularPoint when p
    is within SINGULAR_EVAL_RADIUS of a potential's center, and
    NonfiniteValue if any output fails to be finite.
    """
    n = field.dimension
    q = _as_point(p, n)
    for c in field.singular_points:
        if math.sqrt(float((q - c) @ (q - c))) < SINGULAR_EVAL_RADIUS:
            raise SingularPoint(f"evaluation at {q.tolist()} hits the center {c.tolist()}")
    value, grad, hess = _kernels.jet(n, field._terms, q)
    if not (np.isfinite(value) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        raise NonfiniteValue(f"non-finite jet at {q.tolist()}")
    return Jet2(point=_lock(q.copy()), value=float(value), gradient=_lock(grad),
                hessian=_lock(hess), dimension=n)


def laplacian(jet: Jet2) -> float:
    """Trace of the Hessian."""
    return float(np.trace(jet.hessian))


# ---------------------------------------------------------------------------
# catalog constructors


def make_linear(coeffs) -> ScalarField:
    """u(p) = coeffs . p — harmonic in every dimension."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 1 or c.size < 2:
        raise InvalidFieldSpec("linear field needs a coefficient vector of length >= 2")
    if not np.all(np.isfinite(c)):
        raise InvalidFieldSpec("linear coefficients must be finite")
    n = c.size
    terms = []
    for i in range(n):
        if c[i] != 0.0:
            e = np.zeros(n, dtype=np.int32)
            e[i] = 1
            terms.append((_kernels.KIND_MONOMIAL, float(c[i]), e, None, None))
    descriptor = {"kind": "linear", "coeffs": [float(v) for v in c]}
    return _build(n, descriptor, True, terms, np.zeros((0, n)))


def _normalize_monomials(monomials):
    """Validate and coerce a (coeff, exponents) list; returns (n, list)."""
    items = list(monomials)
    if not items:
        raise InvalidFieldSpec("polynomial needs at least one monomial")
    n = None
    out = []
    for entry in items:
        try:
            coeff, exps = entry
        except (TypeError, ValueError):
            raise InvalidFieldSpec(f"monomial entry {entry!r} is not a (coeff, exponents) pair")
        coeff = float(coeff)
        if not math.isfinite(coeff):
            raise InvalidFieldSpec("monomial coefficient must be finite")
        e = tuple(int(x) for x in exps)
        if any(int(x) != float(x) for x in exps) or any(x < 0 for x in e):
            raise InvalidFieldSpec(f"exponents must be nonnegative integers, got {tuple(exps)}")
        if n is None:
            n = len(e)
        elif len(e) != n:
            raise InvalidFieldSpec("all monomials must share the same dimension")
        out.append((coeff, e))
    if n < 2:
        raise InvalidFieldSpec("polynomial dimension must be >= 2")
    return n, out


def _laplacian_monomials(n, monos):
    """Symbolic Laplacian of a monomial list, as an exponent-keyed dict."""
    acc = {}
    scale = 0.0
    for coeff, e in monos:
        for i in range(n):
            if e[i] >= 2:
                contrib = coeff * e[i] * (e[i] - 1)
                key = e[:i] + (e[i] - 2,) + e[i + 1:]
                acc[key] = acc.get(key, 0.0) + contrib
                scale += abs(contrib)
    return acc, scale


def _is_harmonic_poly(n, monos) -> bool:
    acc, scale = _laplacian_monomials(n, monos)
    if scale == 0.0:
        return True
    return all(abs(v) <= 1e-12 * scale for v in acc.values())


def make_polynomial(monomials) -> ScalarField:
    """Polynomial from (coeff, exponent-tuple) monomials.

    The harmonic flag is computed symbolically from the exponents, so
    mislabeled test fields cannot occur.
    """
    n, monos = _normalize_monomials(monomials)
    terms = [(_kernels.KIND_MONOMIAL, coeff, np.array(e, dtype=np.int32), None, None)
             for coeff, e in monos]
    descriptor = {
        "kind": "polynomial",
        "monomials": [{"coeff": coeff, "exponents": list(e)} for coeff, e in monos],
    }
    return _build(n, descriptor, _is_harmonic_poly(n, monos), terms, np.zeros((0, n)))


def make_harmonic_polynomial(monomials) -> ScalarField:
    """Like make_polynomial, but requires the Laplacian to vanish identically."""
    n, monos = _normalize_monomials(monomials)
    if not _is_harmonic_poly(n, monos):
        acc, _ = _laplacian_monomials(n, monos)
        bad = {k: v for k, v in acc.items() if v != 0.0}
        raise InvalidFieldSpec(f"polynomial is not harmonic; Laplacian residual {bad}")
    f = make_polynomial(monos)
    descriptor = f.descriptor
    descriptor["kind"] = "harmonic-polynomial"
    return ScalarField(n, descriptor, True, f._terms, f._singular)


def make_newtonian(center, dimension: int) -> ScalarField:
    """u = |p - c|^(2-n) for n >= 3; u = log|p - c| for n = 2."""
    n = int(dimension)
    if n < 2:
        raise InvalidFieldSpec("dimension must be >= 2")
    c = np.asarray(center, dtype=np.float64)
    if c.ndim != 1 or c.size != n:
        raise DimensionMismatch(f"center must have length {n}, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise InvalidFieldSpec("center must be finite")
    descriptor = {"kind": "newtonian", "center": [float(v) for v in c], "dimension": n}
    terms = [(_kernels.KIND_RADIAL, 1.0, None, c, None)]
    return _build(n, descriptor, True, terms, c.reshape(1, n))


def make_dipole(center, direction) -> ScalarField:
    """Directional derivative of the radial potential along ``direction``.

    The direction is normalized; a zero direction is rejected.
    """
    c = np.asarray(center, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    if c.ndim != 1 or d.ndim != 1 or c.size != d.size:
        raise DimensionMismatch("center and direction must be 1-D of equal length")
    n = c.size
    if n < 2:
        raise InvalidFieldSpec("dimension must be >= 2")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(d))):
        raise InvalidFieldSpec("center and direction must be finite")
    dn = float(np.linalg.norm(d))
    if dn == 0.0:
        raise InvalidFieldSpec("dipole direction must be nonzero")
    d = d / dn
    descriptor = {
        "kind": "dipole",
        "center": [float(v) for v in c],
        "direction": [float(v) for v in d],
    }
    terms = [(_kernels.KIND_DIPOLE, 1.0, None, c, d)]
    return _build(n, descriptor, True, terms, c.reshape(1, n))


def combine(terms) -> ScalarField:
    """Weighted sum of fields: combine([(w1, f1), (w2, f2), ...]).

    Jets are assembled by linearity; the result is harmonic iff every
    constituent is. Singular centers are the union of the constituents'.
    """
    items = list(terms)
    if not items:
        raise InvalidFieldSpec("combine needs at least one (weight, field) term")
    n = None
    for entry in items:
        try:
            w, f = entry
        except (TypeError, ValueError):
            raise InvalidFieldSpec(f"combine entry {entry!r} is not a (weight, field) pair")
        if not isinstance(f, ScalarField):
            raise InvalidFieldSpec("combine terms must wrap ScalarField instances")
        if not math.isfinite(float(w)):
            raise InvalidFieldSpec("combine weights must be finite")
        if n is None:
            n = f.dimension
        elif f.dimension != n:
            raise DimensionMismatch("combine terms must share one dimension")

    kinds = np.concatenate([f._terms[0] for _, f in items])
    weights = np.concatenate([float(w) * f._terms[1] for w, f in items])
    expn = np.concatenate([f._terms[2] for _, f in items], axis=0)
    centers = np.concatenate([f._terms[3] for _, f in items], axis=0)
    dirs = np.concatenate([f._terms[4] for _, f in items], axis=0)

    seen = set()
    sing_rows = []
    for _, f in items:
        for c in f.singular_points:
            key = tuple(c.tolist())
            if key not in seen:
                seen.add(key)
                sing_rows.append(c)
    sing = (np.array(sing_rows) if sing_rows else np.zeros((0, n)))

    descriptor = {
        "kind": "combine",
        "terms": [{"weight": float(w), "field": f.descriptor} for w, f in items],
    }
    harmonic = all(f.harmonic for _, f in items)
    flat = tuple(_lock(np.ascontiguousarray(a)) for a in (kinds, weights, expn, centers, dirs))
    return ScalarField(n, descriptor, harmonic, flat, _lock(sing))


def field_from_descriptor(descriptor) -> ScalarField:
    """Rebuild a field from its JSON descriptor (inverse of .descriptor)."""
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise InvalidFieldSpec(f"field descriptor must be a dict with a 'kind': {descriptor!r}")
    kind = descriptor["kind"]
    try:
        if kind == "linear":
            return make_linear(descriptor["coeffs"])
        if kind == "polynomial":
            return make_polynomial(
                [(m["coeff"], m["exponents"]) for m in descriptor["monomials"]])
        if kind == "harmonic-polynomial":
            return make_harmonic_polynomial(
                [(m["coeff"], m["exponents"]) for m in descriptor["monomials"]])
        if kind == "newtonian":
            return make_newtonian(descriptor["center"], descriptor["dimension"])
        if kind == "dipole":
            return make_dipole(descriptor["center"], descriptor["direction"])
        if kind == "combine":
            return combine([(t["weight"], field_from_descriptor(t["field"]))
                            for t in descriptor["terms"]])
    except KeyError as exc:
        raise InvalidFieldSpec(f"descriptor for {kind!r} is missing key {exc}")
    raise InvalidFieldSpec(f"unknown field kind {kind!r}")


# Static catalog metadata for the CLI listing.
CATALOG = [
    {"kind": "linear", "parameters": "coeffs (length n)",
     "dimensions": "n >= 2", "harmonic": "always"},
    {"kind": "polynomial", "parameters": "monomials: [{coeff, exponents}]",
     "dimensions": "n >= 2", "harmonic": "iff Laplacian vanishes (checked symbolically)"},
    {"kind": "harmonic-polynomial", "parameters": "monomials: [{coeff, exponents}]",
     "dimensions": "n >= 2", "harmonic": "always (constructor rejects others)"},
    {"kind": "newtonian", "parameters": "center, dimension",
     "dimensions": "n >= 2 (log|p-c| at n=2, |p-c|^(2-n) above)", "harmonic": "always"},
    {"kind": "dipole", "parameters": "center, direction (normalized)",
     "dimensions": "n >= 2", "harmonic": "always"},
    {"kind": "combine", "parameters": "terms: [{weight, field}]",
     "dimensions": "n of its terms", "harmonic": "iff all terms harmonic"},
]


# ---------------------------------------------------------------------------
# finite-difference oracle


def _value_at(field: ScalarField, q: np.ndarray) -> float:
    for c in field.singular_points:
        if math.sqrt(float((q - c) @ (q - c))) < SINGULAR_EVAL_RADIUS:
            raise SingularPoint(f"finite-difference stencil hits the center {c.tolist()}")
    value, _, _ = _kernels.jet(field.dimension, field._terms, q)
    return float(value)


def fd_jet(field: ScalarField, p, h: float | None = None) -> Jet2:
    """Finite-difference jet: central O(h^2) stencils for gradient and Hessian.

    With h=None the steps default to FD_STEP_GRADIENT / FD_STEP_HESSIAN
    scaled by max(1, |p|_inf). Used as the independent derivative oracle in
    the tests; the library itself never differentiates numerically.
    """
    n = field.dimension
    q = _as_point(p, n)
    scale = max(1.0, float(np.max(np.abs(q))) if q.size else 1.0)
    hg = float(h) if h is not None else FD_STEP_GRADIENT * scale
    hh = float(h) if h is not None else FD_STEP_HESSIAN * scale
    if hg <= 0 or hh <= 0:
        raise InvalidFieldSpec("finite-difference step must be positive")

    f0 = _value_at(field, q)
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = 1.0
        fp = _value_at(field, q + hg * ei)
        fm = _value_at(field, q - hg * ei)
        grad[i] = (fp - fm) / (2.0 * hg)
        fph = _value_at(field, q + hh * ei)
        fmh = _value_at(field, q - hh * ei)
        hess[i, i] = (fph - 2.0 * f0 + fmh) / (hh * hh)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = 1.0
            fpp = _value_at(field, q + hh * (ei + ej))
            fpm = _value_at(field, q + hh * (ei - ej))
            fmp = _value_at(field, q - hh * (ei - ej))
            fmm = _value_at(field, q - hh * (ei + ej))
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * hh * hh)

    if not (np.isfinite(f0) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        raise NonfiniteValue(f"non-finite finite-difference jet at {q.tolist()}")
    return Jet2(point=_lock(q.copy()), value=f0, gradient=_lock(grad),
                hessian=_lock(hess), dimension=n)
