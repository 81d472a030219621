"""Command-line front end: config parsing, runs, and plot-ready exports.

Configs are flat INI files with four sections ([scenario], [physics],
[sampling], [detection]); unknown sections or keys are rejected with the
offending line.  A run writes trajectories.csv, screen.csv, histogram.csv and
report.json plus a manifest listing every output with its checksum.  All
numeric output uses shortest round-trip decimal text, files are written to a
temporary name and atomically renamed, and two runs with the same seed
produce byte-identical data files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .ensemble import InitialConstraint, SamplerError
from .guidance import NodeProximityError, UndefinedFringeError
from .packets import (
    AmplitudeUnderflowError,
    NormalizationError,
    PhysicalConfig,
    Variant,
)
from .quadrature import QuadratureError
from .scenarios import PRESETS, SCENARIO_VARIANT, ScenarioSpec, preset, run_scenario, validate_regime

ENV_OUTPUT_DIR = "TWINSLIT_OUT"

NUMERICAL_ERRORS = (
    QuadratureError,
    SamplerError,
    NormalizationError,
    NodeProximityError,
    AmplitudeUnderflowError,
    UndefinedFringeError,
)

PRESET_DESCRIPTIONS = {
    "entangled_two_slit": "entangled pair, one double slit, pinned center of mass",
    "unentangled_two_slit": "product pair, one double slit, equilibrium sampling",
    "entangled_four_slit": "entangled pair, two facing double slits, pinned center",
    "unentangled_two_slit_fringe": "product pair in a fringe-resolving far-field regime",
    "unentangled_two_slit_gap": "product pair, displaced center, opposite-side selection",
}


class ConfigError(ValueError):
    """A config file could not be parsed or validated."""


_SCHEMA_KEYS = {
    "scenario": {
        "scenario": str,
        "exchange_sign": "sign",
        "selective_detection": bool,
        "condition_on_selection": bool,
    },
    "physics": {
        "sigma0": float,
        "slit_offset": float,
        "ky": float,
        "mass": float,
        "hbar": float,
        "tau": float,
        "detector_width": float,
    },
    "sampling": {
        "constraint": str,
        "y0": float,
        "mean_y0": float,
        "delta_y0": float,
        "nonnegative_com": bool,
        "n_pairs": int,
        "seed": int,
        "integrator_tol": float,
    },
    "detection": {
        "epsilon": float,
        "bin_width": float,
        "threshold_fraction": float,
        "trajectory_export": int,
    },
}


def _line_of(text, key):
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(key) and (
            stripped[len(key):].lstrip().startswith("=") or stripped == key
        ):
            return lineno
    return None


def _convert(raw, kind, section, key, text):
    line = _line_of(text, key)
    where = f"[{section}] {key}" + (f" (line {line})" if line else "")
    raw = raw.strip()
    if kind is bool:
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {raw!r}") from None
    if kind == "sign":
        if raw in ("+1", "1", "+"):
            return 1
        if raw in ("-1", "-"):
            return -1
        raise ConfigError(f"{where}: expected +1 or -1, got {raw!r}")
    return raw


def parse_config(text):
    """Parse config text into a fully resolved :class:`ScenarioSpec`.

    Missing keys take their documented defaults; unknown sections, unknown
    keys, bad types and invariant violations are reported with the section,
    key and line.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA_KEYS[section]:
                line = _line_of(text, key)
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]"
                    + (f" (line {line})" if line else "")
                )
            values[(section, key)] = _convert(raw, _SCHEMA_KEYS[section][key], section, key, text)

    name = values.get(("scenario", "scenario"))
    if name is None:
        raise ConfigError("missing required key 'scenario' in [scenario]")
    if name not in SCENARIO_VARIANT:
        raise ConfigError(
            f"unknown scenario name {name!r}; expected one of "
            + ", ".join(sorted(SCENARIO_VARIANT))
        )

    def get(section, key, default):
        return values.get((section, key), default)

    variant = SCENARIO_VARIANT[name]
    default_constraint = (
        "unconstrained" if variant is Variant.UNENTANGLED_PRODUCT else "fixed_com"
    )
    mode = get("sampling", "constraint", default_constraint)
    if mode not in ("unconstrained", "fixed_com", "spread_com"):
        raise ConfigError(
            f"[sampling] constraint: expected unconstrained, fixed_com or "
            f"spread_com, got {mode!r}"
        )
    try:
        constraint = InitialConstraint(
            mode=mode,
            y0=get("sampling", "y0", 0.0),
            mean_y0=get("sampling", "mean_y0", 0.0),
            delta_y0=get("sampling", "delta_y0", 0.0),
            nonnegative_com=get("sampling", "nonnegative_com", False),
        )
        tau = get("physics", "tau", 1.0)
        config = PhysicalConfig(
            sigma0=get("physics", "sigma0", 1.0),
            slit_offset=get("physics", "slit_offset", 1.0),
            ky=get("physics", "ky", 0.0),
            mass=get("physics", "mass", 1.0),
            hbar=get("physics", "hbar", 1.0),
            detector_width=get("physics", "detector_width", 0.5),
        )
        config = replace(config, flight_time=config.time_at_tau(tau))
        spec = ScenarioSpec(
            name=name,
            exchange_sign=get("scenario", "exchange_sign", 1),
            config=config,
            constraint=constraint,
            n_pairs=get("sampling", "n_pairs", 10_000),
            seed=get("sampling", "seed", 0),
            selective_detection=get("scenario", "selective_detection", False),
            target_tau=tau,
            condition_on_selection=get("scenario", "condition_on_selection", False),
            epsilon=get("detection", "epsilon", 0.1),
            bin_width=get("detection", "bin_width", 0.25),
            threshold_fraction=get("detection", "threshold_fraction", 0.1),
            integrator_tol=get("sampling", "integrator_tol", 1e-8),
            trajectory_export=get("detection", "trajectory_export", 100),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return spec


def emit_config(spec):
    """Render a spec as canonical config text; parse(emit(spec)) == spec."""
    c = spec.config
    k = spec.constraint
    lines = [
        "[scenario]",
        f"scenario = {spec.name}",
        f"exchange_sign = {spec.exchange_sign:+d}",
        f"selective_detection = {str(spec.selective_detection).lower()}",
        f"condition_on_selection = {str(spec.condition_on_selection).lower()}",
        "",
        "[physics]",
        f"sigma0 = {c.sigma0!r}",
        f"slit_offset = {c.slit_offset!r}",
        f"ky = {c.ky!r}",
        f"mass = {c.mass!r}",
        f"hbar = {c.hbar!r}",
        f"tau = {spec.target_tau!r}",
        f"detector_width = {c.detector_width!r}",
        "",
        "[sampling]",
        f"constraint = {k.mode}",
        f"y0 = {k.y0!r}",
        f"mean_y0 = {k.mean_y0!r}",
        f"delta_y0 = {k.delta_y0!r}",
        f"nonnegative_com = {str(k.nonnegative_com).lower()}",
        f"n_pairs = {spec.n_pairs}",
        f"seed = {spec.seed}",
        f"integrator_tol = {spec.integrator_tol!r}",
        "",
        "[detection]",
        f"epsilon = {spec.epsilon!r}",
        f"bin_width = {spec.bin_width!r}",
        f"threshold_fraction = {spec.threshold_fraction!r}",
        f"trajectory_export = {spec.trajectory_export}",
        "",
    ]
    return "\n".join(lines)


def _jsonable(obj):
    """Recursively convert report content to strict-JSON-safe values."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _atomic_write(path, data):
    tmp = f"{path}.tmp.{os.getpid()}"
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode, newline="" if mode == "w" else None) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _checksum(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def _csv_float(x):
    return repr(float(x))


def _write_outputs(outdir, spec, run):
    os.makedirs(outdir, exist_ok=True)
    ens = run.ensemble
    stats = run.stats

    buf = io.StringIO()
    buf.write("pair_index,t,y1,y2\n")
    if ens.recorded_paths is not None:
        for row, pair_index in enumerate(ens.record_indices):
            for t, (y1, y2) in zip(ens.times, ens.recorded_paths[row]):
                buf.write(
                    f"{pair_index},{_csv_float(t)},{_csv_float(y1)},{_csv_float(y2)}\n"
                )
    _atomic_write(os.path.join(outdir, "trajectories.csv"), buf.getvalue())

    accepted_ids = {r.pair_index for r in run.records if r.accepted}
    buf = io.StringIO()
    buf.write("pair_index,Y1,Y2,accepted\n")
    for record in ens.records:
        flag = "true" if record.pair_index in accepted_ids else "false"
        buf.write(
            f"{record.pair_index},{_csv_float(record.y1)},{_csv_float(record.y2)},{flag}\n"
        )
    _atomic_write(os.path.join(outdir, "screen.csv"), buf.getvalue())

    hist = stats.histogram
    buf = io.StringIO()
    buf.write("bin_lo,bin_hi,count\n")
    for lo, hi, count in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
        buf.write(f"{_csv_float(lo)},{_csv_float(hi)},{int(count)}\n")
    _atomic_write(os.path.join(outdir, "histogram.csv"), buf.getvalue())

    report = _jsonable(run.report.to_dict())
    schema = load_report_schema()
    validate_report(report, schema)
    _atomic_write(
        os.path.join(outdir, "report.json"),
        json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n",
    )
    _atomic_write(os.path.join(outdir, "resolved_config.ini"), emit_config(spec))

    return ["trajectories.csv", "screen.csv", "histogram.csv", "report.json", "resolved_config.ini"]


def load_report_schema():
    schema_path = os.path.join(os.path.dirname(__file__), "schema", "report.schema.json")
    with open(schema_path, "r") as fh:
        return json.load(fh)


def validate_report(obj, schema, path="$"):
    """Minimal JSON-schema checker (type/required/properties/items/enum)."""
    kinds = schema.get("type")
    if kinds is not None:
        if isinstance(kinds, str):
            kinds = [kinds]
        checks = {
            "object": lambda v: isinstance(v, dict),
            "array": lambda v: isinstance(v, list),
            "string": lambda v: isinstance(v, str),
            "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
            "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
            "boolean": lambda v: isinstance(v, bool),
            "null": lambda v: v is None,
        }
        if not any(checks[k](obj) for k in kinds):
            raise ValueError(f"{path}: expected {kinds}, got {type(obj).__name__}")
    if "enum" in schema and obj not in schema["enum"]:
        raise ValueError(f"{path}: {obj!r} not in {schema['enum']}")
    if isinstance(obj, dict):
        for key in schema.get("required", []):
            if key not in obj:
                raise ValueError(f"{path}: missing required key {key!r}")
        props = schema.get("properties", {})
        for key, sub in props.items():
            if key in obj:
                validate_report(obj[key], sub, f"{path}.{key}")
    if isinstance(obj, list) and "items" in schema:
        for i, item in enumerate(obj):
            validate_report(item, schema["items"], f"{path}[{i}]")
    return True


def _write_manifest(outdir, spec, config_path, overrides, filenames, elapsed):
    from .scenarios import _spec_echo

    manifest = {
        "tool": "twinslit",
        "version": __version__,
        "config_file": os.path.abspath(config_path) if config_path else None,
        "output_dir": os.path.abspath(outdir),
        "seed": spec.seed,
        "overrides": overrides,
        "scenario": spec.name,
        "resolved_spec": _spec_echo(spec),
        "wall_clock_seconds": elapsed,
        "written_at_unix": time.time(),
        "files": {
            name: {"sha256": _checksum(os.path.join(outdir, name))} for name in filenames
        },
    }
    _atomic_write(
        os.path.join(outdir, "run_manifest.json"),
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n",
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="twinslit",
        description="Pilot-wave trajectory ensembles vs Born-rule statistics "
        "for two-particle double-slit experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario config and write outputs")
    run_p.add_argument("config", help="path to an INI scenario config")
    run_p.add_argument("--out", help="output directory (default: $TWINSLIT_OUT or ./twinslit-out)")
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--pairs", type=int, help="override the number of pairs")
    run_p.add_argument("--tau", type=float, help="override the target spreading parameter")

    check_p = sub.add_parser("check", help="validate a config and print its regime table")
    check_p.add_argument("config", help="path to an INI scenario config")

    sub.add_parser("list-scenarios", help="list the built-in scenario presets")
    return parser


def _apply_overrides(spec, args):
    overrides = {}
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
        overrides["seed"] = args.seed
    if args.pairs is not None:
        spec = replace(spec, n_pairs=args.pairs)
        overrides["pairs"] = args.pairs
    if args.tau is not None:
        config = replace(spec.config, flight_time=spec.config.time_at_tau(args.tau))
        spec = replace(spec, config=config, target_tau=args.tau)
        overrides["tau"] = args.tau
    return spec, overrides


def _load_spec(path):
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    return parse_config(text)


def _regime_table(spec):
    lines = [f"scenario: {spec.name} (tau = {spec.target_tau:g})"]
    lines.append(f"{'condition':40s} {'status':10s} margin")
    for check in validate_regime(spec):
        status = "satisfied" if check.satisfied else "violated"
        margin = "nan" if not np.isfinite(check.margin) else f"{check.margin:.4g}"
        lines.append(f"{check.id:40s} {status:10s} {margin}")
    return "\n".join(lines)


def run(argv=None):
    """CLI entry point returning an exit code (0 ok, 2 config, 3 numerical)."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for name in sorted(PRESETS):
            print(f"{name:32s} {PRESET_DESCRIPTIONS.get(name, '')}")
        return 0

    if args.command == "check":
        try:
            spec = _load_spec(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        print(_regime_table(spec))
        return 0

    # run
    try:
        spec = _load_spec(args.config)
        spec, overrides = _apply_overrides(spec, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    outdir = args.out or os.environ.get(ENV_OUTPUT_DIR) or "twinslit-out"
    started = time.monotonic()
    try:
        result = run_scenario(spec)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    elapsed = time.monotonic() - started

    filenames = _write_outputs(outdir, spec, result)
    _write_manifest(outdir, spec, args.config, overrides, filenames, elapsed)

    bqm = result.report.bqm
    sqm = result.report.sqm
    print(f"scenario {spec.name}: {spec.n_pairs} pairs, seed {spec.seed}")
    print(f"  symmetric fraction (eps={spec.epsilon:g}): {bqm['symmetric_fraction']:.6f}")
    print(f"  same-side probability:                {sqm['p_same_side']:.6e}")
    print(f"  excluded trajectories:                {bqm['excluded_count']}")
    print(f"  outputs: {os.path.abspath(outdir)}")
    return 0


def main():
    sys.exit(run())
