"""Batch front-end: ``qfe <command> --config <path> [--out] [--csv] [--grid N] [--cutoff N]``.

Scenario files are JSON documents with the top-level fields
``schema_version, name, kind, algebra, model, options, seed``.  Matrices are
nested arrays whose entries are either real numbers or ``[re, im]`` pairs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import dynentropy
from .errors import InvalidArgument, QFEError
from .spectra import Algebra, DirectIntegralModel, FiberGrid, MultiplicationModel, build_uniform_grid
from .verify import run_suite

SCHEMA_VERSION = 1
COMMANDS = ("formula", "cor14", "rate", "verify")
MACHINE_TOL = 1e-12


class ConfigError(InvalidArgument):
    """Scenario document does not match the schema; ``field`` holds the path."""


# --- parsing helpers -------------------------------------------------------

_PI_RE = re.compile(r"^\s*([-+]?\d*\.?\d*(?:[eE][-+]?\d+)?)\s*\*?\s*pi\s*$")


def _real(value, path):
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number", field=path)
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ConfigError(f"{path}: non-finite number", field=path)
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            coeff = m.group(1)
            return (float(coeff) if coeff not in ("", "+", "-") else float(coeff + "1")) * math.pi
    raise ConfigError(f"{path}: expected a number or '<c>pi', got {value!r}", field=path)


def _entry(value, path):
    if isinstance(value, list):
        if len(value) != 2:
            raise ConfigError(f"{path}: complex entries are [re, im] pairs", field=path)
        return complex(_real(value[0], f"{path}[0]"), _real(value[1], f"{path}[1]"))
    return complex(_real(value, path))


def parse_matrix(value, path):
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise ConfigError(f"{path}: expected a matrix (list of rows)", field=path)
    rows = [[_entry(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(value)]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ConfigError(f"{path}: matrix must be square", field=path)
    return np.array(rows, dtype=complex).reshape(n, n)


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def _int(value, path, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{path}: expected an integer >= {minimum}", field=path)
    return value


def _get(mapping, key, path, required=True, default=None):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected an object", field=path)
    if key not in mapping:
        if required:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{where}: missing field", field=where)
        return default
    return mapping[key]


def parse_fourier(items, path):
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{path}: expected a nonempty list of {{k, matrix}}", field=path)
    coeffs = {}
    for i, item in enumerate(items):
        k = _get(item, "k", f"{path}[{i}]")
        if isinstance(k, bool) or not isinstance(k, int):
            raise ConfigError(f"{path}[{i}].k: expected an integer", field=f"{path}[{i}].k")
        coeffs[k] = coeffs.get(k, 0) + parse_matrix(_get(item, "matrix", f"{path}[{i}]"), f"{path}[{i}].matrix")
    return coeffs


def parse_grid(spec, path, override=None):
    if override is not None:
        return build_uniform_grid(override)
    if "n_nodes" in spec:
        return build_uniform_grid(_int(spec["n_nodes"], f"{path}.n_nodes"))
    nodes = [_real(x, f"{path}.nodes[{i}]") for i, x in enumerate(_get(spec, "nodes", path))]
    weights = [_real(x, f"{path}.weights[{i}]") for i, x in enumerate(_get(spec, "weights", path))]
    try:
        return FiberGrid(np.array(nodes), np.array(weights))
    except QFEError as exc:
        raise ConfigError(f"{path}: {exc}", field=path) from exc


def _with_field(exc, path):
    if getattr(exc, "field", None) is None:
        exc.field = path
    elif not exc.field.startswith(path):
        exc.field = f"{path}.{exc.field}"
    return exc


def build_direct_integral(model, algebra, grid_override=None):
    path = "model"
    grid = parse_grid(_get(model, "grid", path, required=False, default={"n_nodes": 64}), f"{path}.grid", grid_override)
    singular = _real(_get(model, "singular_rate", path, required=False, default=0.0), f"{path}.singular_rate")
    try:
        if "fibers" in model:
            fibers = model["fibers"]
            if not isinstance(fibers, list):
                raise ConfigError(f"{path}.fibers: expected a list", field=f"{path}.fibers")
            mats = tuple(parse_matrix(f, f"{path}.fibers[{j}]") if f else np.zeros((0, 0)) for j, f in enumerate(fibers))
            if grid_override is not None and len(mats) != len(grid):
                raise ConfigError("--grid cannot resample explicit fibers", field=f"{path}.fibers")
            return DirectIntegralModel(grid, mats, algebra, singular)
        if "fourier" in model:
            coeffs = parse_fourier(model["fourier"], f"{path}.fourier")
            sym = dynentropy.SymbolFunction.from_fourier(coeffs, len(grid), algebra) if len(grid) else None
            fibers = tuple(sym.samples) if sym is not None else ()
            return DirectIntegralModel(grid, fibers, algebra, singular)
        if len(grid) == 0 or model.get("empty", False):
            return DirectIntegralModel.singular_only(algebra, singular)
    except QFEError as exc:
        raise _with_field(exc, path)
    raise ConfigError(f"{path}: need 'fibers' or 'fourier'", field=path)


def _function(spec, path):
    """Scalar function of ``x`` from ``{"constant"}``, ``{"poly"}`` or ``{"fourier": {cos, sin}}``."""
    if isinstance(spec, (int, float, str)) and not isinstance(spec, bool):
        c = _real(spec, path)
        return lambda x: np.full_like(x, c)
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}: expected a function description", field=path)
    if "constant" in spec:
        c = _real(spec["constant"], f"{path}.constant")
        return lambda x: np.full_like(x, c)
    if "poly" in spec:
        coeffs = [_real(c, f"{path}.poly[{i}]") for i, c in enumerate(spec["poly"])]
        return lambda x: np.polynomial.polynomial.polyval(x, coeffs)
    if "fourier" in spec:
        fs = spec["fourier"]
        cos = [_real(c, f"{path}.fourier.cos[{i}]") for i, c in enumerate(_get(fs, "cos", f"{path}.fourier", False, []))]
        sin = [_real(c, f"{path}.fourier.sin[{i}]") for i, c in enumerate(_get(fs, "sin", f"{path}.fourier", False, []))]

        def fn(x):
            out = np.zeros_like(x)
            for k, c in enumerate(cos):
                out = out + c * np.cos(k * x)
            for k, c in enumerate(sin):
                out = out + c * np.sin(k * x)
            return out

        return fn
    raise ConfigError(f"{path}: expected one of constant, poly, fourier", field=path)


def build_multiplication(model, algebra, nodes):
    path = "model"
    raw = _get(model, "intervals", path)
    if not isinstance(raw, list):
        raise ConfigError(f"{path}.intervals: expected a list of [a, b]", field=f"{path}.intervals")
    intervals = []
    for i, iv in enumerate(raw):
        if not isinstance(iv, list) or len(iv) != 2:
            raise ConfigError(f"{path}.intervals[{i}]: expected [a, b]", field=f"{path}.intervals[{i}]")
        intervals.append((_real(iv[0], f"{path}.intervals[{i}][0]"), _real(iv[1], f"{path}.intervals[{i}][1]")))
    op = _function(_get(model, "omega_prime", path), f"{path}.omega_prime")
    rho = _function(_get(model, "rho", path), f"{path}.rho")
    try:
        return MultiplicationModel.from_functions(intervals, op, rho, algebra, nodes)
    except QFEError as exc:
        raise _with_field(exc, path)


def build_symbol(model, algebra, n_nodes):
    path = "model"
    try:
        if "fourier" in model:
            return dynentropy.SymbolFunction.from_fourier(parse_fourier(model["fourier"], f"{path}.fourier"), n_nodes, algebra)
        if "samples" in model:
            samples = [parse_matrix(s, f"{path}.samples[{j}]") for j, s in enumerate(model["samples"])]
            return dynentropy.SymbolFunction(build_uniform_grid(len(samples)), np.array(samples), algebra)
    except QFEError as exc:
        raise _with_field(exc, path)
    raise ConfigError(f"{path}: need 'fourier' or 'samples'", field=path)


def load_scenario(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", field="config") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", field="config") from exc
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object", field="")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}", field="schema_version")
    kind = _get(doc, "kind", "")
    if kind not in COMMANDS:
        raise ConfigError(f"kind must be one of {COMMANDS}", field="kind")
    name = doc.get("name", Path(path).stem)
    if not isinstance(name, str):
        raise ConfigError("name must be a string", field="name")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer", field="seed")
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("options must be an object", field="options")
    doc = dict(doc, name=name, seed=seed, options=options)
    return doc


# --- reports ---------------------------------------------------------------


def _value(name, value, unit, tolerance, provenance):
    return {"name": name, "value": float(value), "unit": unit, "tolerance": float(tolerance), "provenance": provenance}


def _check(name, value, tolerance, provenance, passed=None):
    if passed is None:
        passed = bool(abs(value) <= tolerance)
    return {"name": name, "passed": bool(passed), "value": float(value), "tolerance": float(tolerance), "provenance": provenance}


def new_report(doc, command):
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": doc["name"],
        "command": command,
        "algebra": doc.get("algebra"),
        "seed": doc["seed"],
        "values": [],
        "tables": {},
        "warnings": [],
        "checks": [],
    }


def _algebra(doc):
    try:
        return Algebra.parse(_get(doc, "algebra", ""))
    except QFEError as exc:
        raise ConfigError(str(exc), field="algebra") from exc


def run_formula(doc, grid=None, cutoff=None):
    algebra = _algebra(doc)
    model_doc = _get(doc, "model", "")
    model = build_direct_integral(model_doc, algebra, grid)
    report = new_report(doc, "formula")
    value = dynentropy.entropy_theorem11(model)
    tol = MACHINE_TOL
    n = len(model.grid)
    if n >= 2 and "fourier" in model_doc:
        coarse = build_direct_integral(model_doc, algebra, n // 2)
        tol = max(tol, abs(value - dynentropy.entropy_theorem11(coarse)))
    report["values"].append(_value("entropy", value, "nats/step", tol, "formula"))
    report["values"].append(_value("singular_rate", model.singular_rate, "spectral mass", 0.0, "input"))
    integrand = dynentropy.fiber_integrand(model)
    report["tables"]["fibers"] = [
        {"node": j, "theta": float(t), "weight": float(w), "integrand": float(v), "dim": int(d)}
        for j, (t, w, v, d) in enumerate(zip(model.grid.nodes, model.grid.weights, integrand, model.dims))
    ]
    return report


def run_cor14(doc, grid=None, cutoff=None):
    algebra = _algebra(doc)
    options = doc["options"]
    nodes = grid or _int(options.get("nodes_per_interval", 64), "options.nodes_per_interval")
    model_doc = _get(doc, "model", "")
    model = build_multiplication(model_doc, algebra, nodes)
    value = dynentropy.entropy_cor14(model)
    tol = MACHINE_TOL
    if nodes >= 2:
        coarse = dynentropy.entropy_cor14(build_multiplication(model_doc, algebra, nodes // 2))
        tol = max(tol, abs(value - coarse))
    report = new_report(doc, "cor14")
    report["values"].append(_value("entropy", value, "nats/step", tol, "formula"))
    fn = dynentropy.entropy_functional(algebra)
    report["tables"]["samples"] = [
        {"x": float(x), "weight": float(w), "omega_prime": float(o), "rho": float(r), "integrand": float(fn(r) * abs(o))}
        for x, w, o, r in zip(model.x, model.weights, model.omega_prime, model.rho)
    ]
    return report


def run_rate(doc, grid=None, cutoff=None):
    algebra = _algebra(doc)
    options = doc["options"]
    sizes = options.get("sizes", [32, 64, 128, 256])
    if not isinstance(sizes, list) or not sizes:
        raise ConfigError("options.sizes: expected a nonempty list", field="options.sizes")
    sizes = [_int(s, f"options.sizes[{i}]") for i, s in enumerate(sizes)]
    n_nodes = grid or _int(options.get("grid", max(4 * max(sizes), 64)), "options.grid")
    tol_rate = _real(options.get("rate_tolerance", 5e-2), "options.rate_tolerance")
    tol_extra = _real(options.get("extrapolation_tolerance", 5e-3), "options.extrapolation_tolerance")
    symbol = build_symbol(_get(doc, "model", ""), algebra, n_nodes)
    rep = dynentropy.entropy_rate_empirical(symbol, sizes)
    formula_tol = MACHINE_TOL
    if n_nodes >= 2:
        coarse_nodes = max(n_nodes // 2, 1)
        coarse = dynentropy.entropy_theorem11(build_symbol(doc["model"], algebra, coarse_nodes).as_model())
        formula_tol = max(formula_tol, abs(rep.formula_value - coarse))
    report = new_report(doc, "rate")
    report["values"].append(_value("formula_value", rep.formula_value, "nats/step", formula_tol, "formula"))
    report["values"].append(
        _value("rate_last", rep.rates[-1], "nats/step", abs(rep.rates[-1] - rep.formula_value), "empirical")
    )
    report["values"].append(
        _value("extrapolated_rate", rep.extrapolated_rate, "nats/step", abs(rep.extrapolated_rate - rep.rates[-1]), "empirical")
    )
    report["tables"]["rate"] = [
        {"n": n, "entropy": s, "rate": r, "error": e}
        for n, s, r, e in zip(rep.sizes, rep.entropies, rep.rates, rep.errors)
    ]
    report["checks"].append(_check("rate_vs_formula", rep.rates[-1] - rep.formula_value, tol_rate, "empirical"))
    report["checks"].append(
        _check("extrapolated_vs_formula", rep.extrapolated_rate - rep.formula_value, tol_extra, "empirical")
    )
    return report


def run_verify(doc, grid=None, cutoff=None):
    options = doc["options"]
    cutoff = cutoff or _int(options.get("cutoff", 32), "options.cutoff")
    workers = _int(options.get("workers", 4), "options.workers")
    scale = _real(options.get("scale", 1.0), "options.scale")
    if scale <= 0:
        raise ConfigError("options.scale must be positive", field="options.scale")
    results = run_suite(seed=doc["seed"], cutoff=cutoff, workers=workers, scale=scale)
    report = new_report(doc, "verify")
    for r in results:
        report["checks"].append(_check(r.name, r.value, r.tolerance, r.provenance, r.passed))
    passed = sum(r.passed for r in results)
    report["values"].append(_value("checks_passed", passed, "count", 0.0, "oracle"))
    report["values"].append(_value("checks_failed", len(results) - passed, "count", 0.0, "oracle"))
    return report


RUNNERS = {"formula": run_formula, "cor14": run_cor14, "rate": run_rate, "verify": run_verify}


def run(config, command, out=None, csv_path=None, grid=None, cutoff=None):
    """Execute one scenario and return ``(report, exit_code)``."""
    doc = load_scenario(config)
    if doc["kind"] != command:
        raise ConfigError(f"config kind {doc['kind']!r} does not match command {command!r}", field="kind")
    report = RUNNERS[command](doc, grid=grid, cutoff=cutoff)
    report["status"] = "pass" if all(c["passed"] for c in report["checks"]) else "fail"
    if out is not None:
        write_report(report, out)
    if csv_path is not None:
        write_csv(report, csv_path)
    return report, (0 if report["status"] == "pass" else 3)


def write_report(report, path):
    Path(path).write_text(json.dumps(report, indent=2, allow_nan=False) + "\n")


def read_report(path):
    return json.loads(Path(path).read_text())


def write_csv(report, path):
    tables = report["tables"]
    if tables:
        rows = next(iter(tables.values()))
    else:
        rows = report["checks"]
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def build_parser():
    parser = argparse.ArgumentParser(prog="qfe", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", help="write the JSON report here (default: stdout)")
    parser.add_argument("--csv", help="write the main table as CSV")
    parser.add_argument("--grid", type=int, help="override the circle grid / nodes per interval")
    parser.add_argument("--cutoff", type=int, help="override the Fock cutoff used by CCR checks")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    for flag in ("grid", "cutoff"):
        value = getattr(args, flag)
        if value is not None and value < 1:
            print(f"error: --{flag}: must be a positive integer", file=sys.stderr)
            return 2
    try:
        report, code = run(args.config, args.command, args.out, args.csv, args.grid, args.cutoff)
    except QFEError as exc:
        field = getattr(exc, "field", None)
        message = str(exc)
        if field and not message.startswith(field):
            message = f"{field}: {message}"
        print(f"error: {message}", file=sys.stderr)
        return exc.exit_code
    if args.out is None:
        print(json.dumps(report, indent=2, allow_nan=False))
    return code


if __name__ == "__main__":
    sys.exit(main())
