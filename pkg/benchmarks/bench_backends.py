#!/usr/bin/env python3
"""Timing comparison between the compiled and pure-python kernel backends.

Runs the two operations that dominate wall-clock time -- second-order jet
evaluation and fixed-step RK4 flow tracing -- on a few representative fields
and prints a per-case table with the compiled speedup.  Both backends are
loaded side by side, so the HARMFLOW_BACKEND environment variable is ignored
here.

Usage:
    python3 benchmarks/bench_backends.py [--points N] [--repeats K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from harmflow.fields import (
    combine,
    make_harmonic_polynomial,
    make_linear,
    make_newtonian,
)
from harmflow.flow import DEFAULT_EPS_GRAD, SINGULAR_EXCLUSION_RADIUS
from harmflow._kernels import available_backends, get_backend


def _cases():
    """(label, field, flow start, arc length) for the benchmark fields."""
    newt3 = make_newtonian([0.0, 0.0, 0.0], 3)

    # A composite field with all three term kinds, similar in cost to the
    # random scenario fields used by the verification suite.
    combo4 = combine([
        (1.0, make_linear([3.0, 1.0, -2.0, 0.5])),
        (0.15, make_harmonic_polynomial([
            (1.0, (2, 0, 0, 0)), (-1.0, (0, 2, 0, 0)),
            (0.7, (1, 0, 1, 0)), (-0.4, (0, 1, 0, 1)),
        ])),
        (1.0, make_newtonian([8.0, 0.0, 0.0, 0.0], 4)),
    ])

    poly3 = make_harmonic_polynomial([
        (1.0, (0, 0, 3)), (-1.5, (2, 0, 1)), (-1.5, (0, 2, 1)),
    ])

    return [
        ("newtonian 3d", newt3, np.array([2.0, 0.0, 0.0]), 0.9),
        ("zonal cubic 3d", poly3, np.array([0.3, 0.2, 1.2]), 0.4),
        ("combo 4d", combo4, np.array([0.5, 0.3, -0.2, 0.4]), 0.8),
    ]


def _best_of(repeats, fn):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_jet(backend, field, points, repeats):
    jet = backend.jet
    n = field.dimension
    terms = field._terms

    def run():
        for p in points:
            jet(n, terms, p)

    return _best_of(repeats, run)


def bench_flow(backend, field, p0, arc_length, step, repeats):
    flow = backend.flow_rk4

    def run():
        flow(field.dimension, field._terms, field.singular_points, p0,
             arc_length, step, DEFAULT_EPS_GRAD, SINGULAR_EXCLUSION_RADIUS)

    return _best_of(repeats, run)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=5000,
                    help="number of jet evaluations per case (default 5000)")
    ap.add_argument("--repeats", type=int, default=3,
                    help="best-of-K timing repeats (default 3)")
    ap.add_argument("--step", type=float, default=1e-3,
                    help="RK4 step size for the flow cases (default 1e-3)")
    args = ap.parse_args(argv)

    names = available_backends()
    backends = [(name, get_backend(name)) for name in names]
    print(f"backends: {', '.join(names)}")
    print(f"jet points per case: {args.points}, flow step: {args.step}, "
          f"best of {args.repeats}\n")

    rng = np.random.default_rng(0)
    rows = []
    for label, field, p0, S in _cases():
        pts = rng.uniform(0.3, 1.0, size=(args.points, field.dimension))
        times = {name: bench_jet(b, field, pts, args.repeats)
                 for name, b in backends}
        rows.append((f"jet  {label}", times))
        times = {name: bench_flow(b, field, p0, S, args.step, args.repeats)
                 for name, b in backends}
        rows.append((f"flow {label} (S={S})", times))

    header = f"{'case':<28}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, times in rows:
        line = f"{label:<28}" + "".join(f"{times[n] * 1e3:>10.2f}ms"
                                        for n in names)
        if len(names) == 2:
            a, b = (times[n] for n in names)
            line += f"{b / a:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
