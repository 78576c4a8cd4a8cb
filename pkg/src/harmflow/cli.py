"""Command-line front end.

Subcommands:

* ``list-fields``  — print the field catalog
* ``curvature``    — level-set mean curvature at a point, three ways
* ``trace``        — gradient-flow trace to CSV
* ``verify``       — run a scenario file, write a JSON/CSV report
* ``convergence``  — step-refinement study of the identity error

Exit codes: 0 ok, 1 tolerance failure, 2 critical point, 3 early flow
termination, 64 usage/schema error.

Configuration precedence: command-line flag > scenario-file ``defaults`` >
built-in defaults (step 1e-3, eps_grad 1e-10, tolerance 1e-6). JSON output
uses full round-trip float precision; human-readable summaries use 6
significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone

import jsonschema

from . import diffgeo, fields, flow, verify
from .errors import (
    CriticalPoint,
    DimensionMismatch,
    HarmflowError,
    InvalidFieldSpec,
    NonfiniteValue,
    NotHarmonic,
    ScenarioError,
    SingularPoint,
)

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CRITICAL = 2
EXIT_EARLY_TERMINATION = 3
EXIT_USAGE = 64

BUILTIN_DEFAULTS = {"step": 1e-3, "eps_grad": 1e-10, "tolerance": 1e-6, "seed": 0}


# ---------------------------------------------------------------------------
# scenario-file schema

_FIELD_DEF = {
    "anyOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "linear"},
                "coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 2},
            },
            "required": ["kind", "coeffs"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"enum": ["polynomial", "harmonic-polynomial"]},
                "monomials": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "properties": {
                            "coeff": {"type": "number"},
                            "exponents": {
                                "type": "array",
                                "items": {"type": "integer", "minimum": 0},
                                "minItems": 2,
                            },
                        },
                        "required": ["coeff", "exponents"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["kind", "monomials"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "newtonian"},
                "center": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "dimension": {"type": "integer", "minimum": 2},
            },
            "required": ["kind", "center", "dimension"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "dipole"},
                "center": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "direction": {"type": "array", "items": {"type": "number"}, "minItems": 2},
            },
            "required": ["kind", "center", "direction"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "combine"},
                "terms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "properties": {
                            "weight": {"type": "number"},
                            "field": {"$ref": "#/$defs/field"},
                        },
                        "required": ["weight", "field"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["kind", "terms"],
            "additionalProperties": False,
        },
    ]
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "version": {"enum": ["1"]},
        "defaults": {
            "type": "object",
            "properties": {
                "step": {"type": "number", "exclusiveMinimum": 0},
                "eps_grad": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "scenarios": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "field": {"$ref": "#/$defs/field"},
                    "p0": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                    "arc_length": {"type": "number", "exclusiveMinimum": 0},
                    "step": {"type": "number", "exclusiveMinimum": 0},
                    "label": {"type": "string"},
                },
                "required": ["field", "p0", "arc_length"],
                "additionalProperties": False,
            },
        },
        "random_block": {
            "type": "object",
            "properties": {
                "fields": {"type": "array", "items": {"$ref": "#/$defs/field"}, "minItems": 1},
                "dimensions": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "count": {"type": "integer", "minimum": 1},
                "box": {"type": "array", "items": {"type": "number"},
                        "minItems": 2, "maxItems": 2},
                "S_range": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                            "minItems": 2, "maxItems": 2},
            },
            "required": ["fields", "count", "box", "S_range"],
            "additionalProperties": False,
        },
    },
    "required": ["version", "scenarios"],
    "additionalProperties": False,
    "$defs": {"field": _FIELD_DEF},
}


def validate_scenario_file(doc) -> None:
    """Schema-check a parsed scenario file; raises ScenarioError."""
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario file invalid at {path}: {exc.message}")
    # cross-field check the schema cannot express
    for i, sc in enumerate(doc.get("scenarios", [])):
        try:
            f = fields.field_from_descriptor(sc["field"])
        except (InvalidFieldSpec, DimensionMismatch) as exc:
            raise ScenarioError(f"scenario {i}: bad field descriptor: {exc}")
        if len(sc["p0"]) != f.dimension:
            raise ScenarioError(
                f"scenario {i}: p0 has length {len(sc['p0'])} but the field "
                f"has dimension {f.dimension}")
    for i, desc in enumerate((doc.get("random_block") or {}).get("fields", [])):
        try:
            fields.field_from_descriptor(desc)
        except (InvalidFieldSpec, DimensionMismatch) as exc:
            raise ScenarioError(f"random_block field {i}: bad descriptor: {exc}")


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract reserves 2 for
    critical points, so remap to 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_vector(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}")


def _parse_field(text: str):
    """Field descriptor: inline JSON or @path to a JSON file."""
    raw = text
    if text.startswith("@"):
        with open(text[1:]) as fh:
            raw = fh.read()
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"field descriptor is not valid JSON: {exc}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="harmflow",
        description="Gradient-flow verification of the level-set "
                    "curvature/gradient-norm identity for harmonic fields.",
        epilog="Configuration precedence: flags > scenario-file defaults > "
               "built-ins (step 1e-3, eps_grad 1e-10, tolerance 1e-6).",
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list-fields", help="print the field catalog")

    c = sub.add_parser("curvature", help="mean curvature at a point, three ways")
    c.add_argument("--field", required=True, type=_parse_field,
                   help="field descriptor (inline JSON or @file)")
    c.add_argument("--point", required=True, type=_parse_vector,
                   help="evaluation point, comma-separated")
    c.add_argument("--eps-grad", type=float, default=None,
                   help="critical-point threshold (default: adaptive)")
    c.add_argument("--samples", type=int, default=10_000,
                   help="Monte-Carlo sample count (default 10000)")
    c.add_argument("--seed", type=int, default=None, help="Monte-Carlo seed")

    t = sub.add_parser("trace", help="write a flow trace as CSV")
    t.add_argument("--field", required=True, type=_parse_field)
    t.add_argument("--p0", required=True, type=_parse_vector,
                   help="start point, comma-separated")
    t.add_argument("--arc-length", required=True, type=float)
    t.add_argument("--step", type=float, default=None)
    t.add_argument("--eps-grad", type=float, default=None)
    t.add_argument("--output", default=None, help="CSV path (default stdout)")

    v = sub.add_parser("verify", help="run a scenario file and report")
    v.add_argument("scenario_file", help="path to the JSON scenario file")
    v.add_argument("--output", default=None, help="report path (default stdout)")
    v.add_argument("--format", choices=["json", "csv"], default="json")
    v.add_argument("--step", type=float, default=None)
    v.add_argument("--eps-grad", type=float, default=None)
    v.add_argument("--tolerance", type=float, default=None)
    v.add_argument("--seed", type=int, default=None)

    g = sub.add_parser("convergence", help="error-order study over step sizes")
    g.add_argument("--field", required=True, type=_parse_field)
    g.add_argument("--p0", required=True, type=_parse_vector)
    g.add_argument("--arc-length", required=True, type=float)
    g.add_argument("--steps", type=_parse_vector, default=[8e-3, 4e-3, 2e-3, 1e-3],
                   help="comma-separated step sizes, decreasing "
                        "(default 8e-3,4e-3,2e-3,1e-3)")
    g.add_argument("--eps-grad", type=float, default=None)
    return p


# ---------------------------------------------------------------------------
# subcommands


def _load_field(descriptor) -> fields.ScalarField:
    try:
        return fields.field_from_descriptor(descriptor)
    except (InvalidFieldSpec, DimensionMismatch) as exc:
        raise ScenarioError(f"bad field descriptor: {exc}")


def cmd_list_fields(args, out) -> int:
    width = max(len(c["kind"]) for c in fields.CATALOG)
    out.write("available field kinds:\n\n")
    for c in fields.CATALOG:
        out.write(f"  {c['kind']:<{width}}  parameters: {c['parameters']}\n")
        out.write(f"  {'':<{width}}  dimensions: {c['dimensions']}; "
                  f"harmonic: {c['harmonic']}\n")
    return EXIT_OK


def cmd_curvature(args, out) -> int:
    field = _load_field(args.field)
    jet = fields.eval_jet(field, args.point)
    frame = diffgeo.frame_at(jet, args.eps_grad)
    h_formula = diffgeo.mean_curvature(jet, args.eps_grad)
    h_trace = diffgeo.mean_curvature_by_tangent_trace(jet, frame)
    seed = args.seed if args.seed is not None else BUILTIN_DEFAULTS["seed"]
    h_mc, se = diffgeo.mean_curvature_by_averaging(jet, frame, args.samples, seed)

    out.write(f"field: {args.field.get('kind')} (n={field.dimension}, "
              f"harmonic={field.harmonic})\n")
    out.write(f"point: {_fmt_vec(args.point)}\n")
    out.write(f"|grad f|             = {frame.grad_norm:.6g}\n")
    out.write(f"unit normal N        = {_fmt_vec(frame.normal)}\n")
    out.write(f"H (Hessian formula)  = {h_formula:.6g}\n")
    out.write(f"H (tangent trace)    = {h_trace:.6g}\n")
    spread = abs(h_formula - h_trace)
    if field.dimension == 3:
        h_circle = diffgeo.mean_curvature_by_circle(jet, frame)
        out.write(f"H (circle average)   = {h_circle:.6g}\n")
        spread = max(spread, abs(h_formula - h_circle))
    out.write(f"H (Monte-Carlo)      = {h_mc:.6g} +/- {se:.3g} "
              f"({args.samples} samples, seed {seed})\n")
    out.write(f"deterministic spread = {spread:.3g}\n")
    return EXIT_OK


def cmd_trace(args, out) -> int:
    field = _load_field(args.field)
    step = args.step if args.step is not None else BUILTIN_DEFAULTS["step"]
    eps = args.eps_grad if args.eps_grad is not None else BUILTIN_DEFAULTS["eps_grad"]
    try:
        trace = flow.trace_flow(field, args.p0, args.arc_length, step, eps_grad=eps)
    except (SingularPoint, NonfiniteValue) as exc:
        sys.stderr.write(f"flow failed at the start point: {exc}\n")
        return EXIT_EARLY_TERMINATION

    if args.output is None:
        flow.write_csv(trace, out)
    else:
        flow.write_csv(trace, args.output)
    if trace.terminated_early is not None:
        sys.stderr.write(
            f"flow terminated early ({trace.terminated_early}) at s = "
            f"{trace.s[-1]:.6g} of {trace.arc_length:.6g}; partial trace written\n")
        return EXIT_EARLY_TERMINATION
    return EXIT_OK


def _fmt_vec(v) -> str:
    return "(" + ", ".join(f"{float(x):.6g}" for x in v) + ")"


def cmd_verify(args, out) -> int:
    with open(args.scenario_file) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario file is not valid JSON: {exc}")
    validate_scenario_file(doc)

    file_defaults = doc.get("defaults", {})

    def setting(flag_value, key):
        if flag_value is not None:
            return flag_value
        if key in file_defaults:
            return file_defaults[key]
        return BUILTIN_DEFAULTS[key]

    step = float(setting(args.step, "step"))
    eps_grad = float(setting(args.eps_grad, "eps_grad"))
    seed = int(setting(args.seed, "seed"))
    tolerance = float(args.tolerance if args.tolerance is not None
                      else BUILTIN_DEFAULTS["tolerance"])

    scenarios = list(doc.get("scenarios", []))
    if doc.get("random_block"):
        import numpy as np

        rng = np.random.default_rng(seed)
        scenarios += verify.expand_random_block(doc["random_block"], rng)

    report = verify.batch_run(scenarios, seed=seed,
                              defaults={"step": step, "eps_grad": eps_grad},
                              tolerance=tolerance)
    envelope = {
        "version": "1",
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "defaults": {"step": step, "eps_grad": eps_grad, "tolerance": tolerance},
        "records": report["records"],
        "summary": report["summary"],
    }

    if args.format == "json":
        text = json.dumps(envelope, indent=2, sort_keys=True) + "\n"
        if args.output is None:
            out.write(text)
        else:
            with open(args.output, "w") as fh:
                fh.write(text)
    else:
        rows = _csv_rows(report["records"])
        if args.output is None:
            _write_csv_rows(out, rows)
        else:
            with open(args.output, "w", newline="") as fh:
                _write_csv_rows(fh, rows)

    s = report["summary"]
    max_err = s["max_rel_error"]
    sys.stderr.write(
        f"{s['completed']}/{s['count']} scenarios completed "
        f"({s['early_terminated']} early, {s['failed']} failed); "
        + (f"max rel_error {max_err:.6g}" if max_err is not None else "no completed runs")
        + f"; tolerance {tolerance:.6g}\n")
    return EXIT_OK if s["tolerance_failures"] == 0 else EXIT_TOLERANCE


def _csv_rows(records) -> list:
    rows = [["field", "n", "p0", "S", "h", "lhs", "rhs", "rel_error", "status"]]
    for r in records:
        kind = (r.get("field") or {}).get("kind", "?")
        rows.append([
            kind,
            r.get("dimension", ""),
            " ".join(repr(float(x)) for x in r.get("p0", [])),
            repr(float(r["arc_length"])) if "arc_length" in r else "",
            repr(float(r["step"])) if "step" in r else "",
            repr(float(r["lhs"])) if "lhs" in r else "",
            repr(float(r["rhs"])) if "rhs" in r else "",
            repr(float(r["rel_error"])) if "rel_error" in r else "",
            r.get("status", ""),
        ])
    return rows


def _write_csv_rows(fh, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    for row in rows:
        w.writerow(row)


def cmd_convergence(args, out) -> int:
    field = _load_field(args.field)
    eps = args.eps_grad if args.eps_grad is not None else BUILTIN_DEFAULTS["eps_grad"]
    study = verify.convergence_study(field, args.p0, args.arc_length,
                                     args.steps, eps_grad=eps)
    out.write(f"{'step':>12}  {'rel_error':>12}\n")
    for h, err in study.entries:
        out.write(f"{h:>12.6g}  {err:>12.6g}\n")
    if study.at_floor:
        out.write("all errors at the roundoff floor (<= 1e-13); no meaningful order fit\n")
    else:
        out.write(f"fitted error order: {study.order:.3g}\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = sys.stdout
    try:
        if args.command == "list-fields":
            return cmd_list_fields(args, out)
        if args.command == "curvature":
            return cmd_curvature(args, out)
        if args.command == "trace":
            return cmd_trace(args, out)
        if args.command == "verify":
            return cmd_verify(args, out)
        if args.command == "convergence":
            return cmd_convergence(args, out)
        parser.error(f"unknown command {args.command!r}")
    except ScenarioError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except CriticalPoint as exc:
        sys.stderr.write(f"critical point: {exc}\n")
        return EXIT_CRITICAL
    except NotHarmonic as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except HarmflowError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_EARLY_TERMINATION
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
