"""Shared test catalog: concrete fields in dimensions 2-5 with sampling metadata.

Each entry pairs a field with a sampling box and a list of distance
functions to its critical set. Flow-based tests keep start points far
enough from critical sets and poles that a unit-speed arc of length S
cannot enter the trouble zone (triangle inequality: every arc point stays
within S of the start).
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
import pytest

import harmflow as hf

# Margins for random flow scenarios: an arc of length S from an accepted
# start point stays >= 0.4 away from critical sets and >= 0.5 from poles.
CRITICAL_MARGIN = 0.4
SINGULAR_MARGIN = 0.5
GRAD_FLOOR = 0.05


@dataclass
class Entry:
    name: str
    field: hf.ScalarField
    box: tuple
    # distance functions p -> distance to a critical set component
    keepouts: list = dc_field(default_factory=list)

    def __repr__(self):
        return f"Entry({self.name})"


def _origin_dist(p):
    return float(np.linalg.norm(p))


def _harmonic_quadratic(rng, n):
    """Random traceless quadratic: q1*(x_a^2 - x_b^2) + q2*x_j*x_k."""
    a, b = rng.choice(n, size=2, replace=False)
    j, k = sorted(rng.choice(n, size=2, replace=False))
    q1, q2 = rng.uniform(-1.0, 1.0, 2)
    ea = [0] * n
    eb = [0] * n
    ejk = [0] * n
    ea[a], eb[b] = 2, 2
    ejk[j] += 1
    ejk[k] += 1
    return hf.make_harmonic_polynomial([(q1, ea), (-q1, eb), (q2, ejk)])


def _combo(rng, n, i):
    """Three-term combination with a dominant linear part.

    The linear gradient (norm 4) outweighs the quadratic term (weight 0.15,
    |grad| <= ~2.6 inside the reachable region) and the far-away potential
    (center at 8 along an axis, |grad| <= ~0.2), so the combination has no
    critical point any scenario flow can reach.
    """
    c = rng.normal(size=n)
    c *= 4.0 / np.linalg.norm(c)
    quad = _harmonic_quadratic(rng, n)
    center = np.zeros(n)
    center[int(rng.integers(n))] = 8.0
    f = hf.combine([
        (1.0, hf.make_linear(c)),
        (0.15, quad),
        (1.0, hf.make_newtonian(center, n)),
    ])
    return Entry(f"combo-n{n}-{i}", f, (-1.5, 1.5))


def _build_harmonic_catalog():
    rng = np.random.default_rng(20260823)
    entries = []
    lin_coeffs = {
        2: [1.0, -2.0],
        3: [0.0, 0.0, 1.0],
        4: [0.5, 0.5, 0.5, 0.5],
        5: [0.6, 0.0, 0.0, 0.0, 0.8],
    }
    for n in (2, 3, 4, 5):
        entries.append(Entry(f"linear-n{n}", hf.make_linear(lin_coeffs[n]), (-2.0, 2.0)))

    poly = hf.make_harmonic_polynomial
    entries += [
        Entry("saddle-n2", poly([(1, (2, 0)), (-1, (0, 2))]), (-2.0, 2.0), [_origin_dist]),
        Entry("bilinear-n2", poly([(1, (1, 1))]), (-2.0, 2.0), [_origin_dist]),
        # real part of (x + i y)^3
        Entry("cubic-n2", poly([(1, (3, 0)), (-3, (1, 2))]), (-2.0, 2.0), [_origin_dist]),
        Entry("axis-quad-n3", poly([(1, (2, 0, 0)), (1, (0, 2, 0)), (-2, (0, 0, 2))]),
              (-2.0, 2.0), [_origin_dist]),
        Entry("tilted-n3", poly([(1, (1, 1, 0)), (1, (0, 0, 1))]), (-2.0, 2.0)),
        Entry("zonal-cubic-n3",
              poly([(1, (0, 0, 3)), (-1.5, (2, 0, 1)), (-1.5, (0, 2, 1))]),
              (-1.8, 1.8), [_origin_dist]),
        Entry("quad-n4",
              poly([(1, (2, 0, 0, 0)), (-1, (0, 2, 0, 0)),
                    (1, (0, 0, 2, 0)), (-1, (0, 0, 0, 2))]),
              (-1.8, 1.8), [_origin_dist]),
        Entry("bilinear-n4", poly([(1, (1, 1, 0, 0)), (1, (0, 0, 1, 1))]),
              (-1.8, 1.8), [_origin_dist]),
        Entry("quad-lin-n5",
              poly([(1, (2, 0, 0, 0, 0)), (-1, (0, 2, 0, 0, 0)),
                    (1, (0, 0, 2, 0, 0)), (-1, (0, 0, 0, 2, 0)),
                    (1, (0, 0, 0, 0, 1))]),
              (-1.5, 1.5)),
        Entry("bilinear-lin-n5",
              poly([(1, (1, 1, 0, 0, 0)), (1, (0, 0, 1, 1, 0)),
                    (1, (0, 0, 0, 0, 1))]),
              (-1.5, 1.5)),
    ]

    for n in (2, 3, 4, 5):
        entries.append(Entry(f"newtonian-n{n}", hf.make_newtonian([0.0] * n, n),
                             (-2.5, 2.5)))
        d = np.zeros(n)
        d[0], d[-1] = 1.0, 1.0
        entries.append(Entry(f"dipole-n{n}", hf.make_dipole([0.0] * n, d),
                             (-2.5, 2.5)))

    for n in (2, 3, 4, 5):
        for i in range(2):
            entries.append(_combo(rng, n, i))
    return entries


def _build_nonharmonic_extras():
    mk = hf.make_polynomial
    entries = []
    for n in (2, 3, 4, 5):
        monos = [(1, tuple(2 if i == k else 0 for i in range(n))) for k in range(n)]
        entries.append(Entry(f"sphere-n{n}", mk(monos), (-2.0, 2.0), [_origin_dist]))
    entries.append(Entry("aniso-n3", mk([(1, (2, 0, 0)), (2, (0, 2, 0)), (3, (0, 0, 2))]),
                         (-2.0, 2.0), [_origin_dist]))
    entries.append(Entry("cubic-nonharm-n2", mk([(1, (3, 0)), (1, (0, 1))]),
                         (-2.0, 2.0)))
    return entries


HARMONIC_ENTRIES = _build_harmonic_catalog()
NONHARMONIC_ENTRIES = _build_nonharmonic_extras()
ALL_ENTRIES = HARMONIC_ENTRIES + NONHARMONIC_ENTRIES


def draw_point(entry, rng, margin=0.3, grad_floor=GRAD_FLOOR, max_tries=10_000):
    """A random non-critical, non-singular point inside the entry's box."""
    n = entry.field.dimension
    lo, hi = entry.box
    sing = entry.field.singular_points
    for _ in range(max_tries):
        p = rng.uniform(lo, hi, n)
        if any(d(p) < margin for d in entry.keepouts):
            continue
        if sing.size and float(np.min(np.linalg.norm(sing - p, axis=1))) < margin:
            continue
        jet = hf.eval_jet(entry.field, p)
        if float(np.linalg.norm(jet.gradient)) < grad_floor:
            continue
        return p
    raise RuntimeError(f"no usable point found for {entry.name}")


def draw_scenario(entry, rng, s_range=(0.1, 1.0), max_tries=10_000):
    """A random (p0, S) pair whose whole arc respects the safety margins."""
    n = entry.field.dimension
    lo, hi = entry.box
    sing = entry.field.singular_points
    for _ in range(max_tries):
        S = float(rng.uniform(*s_range))
        p = rng.uniform(lo, hi, n)
        if any(d(p) < S + CRITICAL_MARGIN for d in entry.keepouts):
            continue
        if sing.size and float(np.min(np.linalg.norm(sing - p, axis=1))) < S + SINGULAR_MARGIN:
            continue
        jet = hf.eval_jet(entry.field, p)
        if float(np.linalg.norm(jet.gradient)) < GRAD_FLOOR:
            continue
        return p, S
    raise RuntimeError(f"no usable scenario found for {entry.name}")


@pytest.fixture(scope="session")
def harmonic_entries():
    return HARMONIC_ENTRIES


@pytest.fixture(scope="session")
def all_entries():
    return ALL_ENTRIES
