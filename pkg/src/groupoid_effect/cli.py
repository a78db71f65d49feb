"""Command line entry point: ``groupoid-effect run`` and ``groupoid-effect list-scenarios``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigurationError, InputError
from .numlin import ToleranceProfile, parse_overrides
from .report import emit_report
from .runner import SCENARIOS, SUITE, ScenarioConfig, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CONFIG_KEYS = {"scenario", "params", "samples", "seed", "format", "out", "tolerances"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="groupoid-effect",
                                description="Effects of isotropic arrows and checks on groupoid homomorphisms.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario (or 'all' for the built-in suite)")
    run.add_argument("--scenario", help=f"one of {', '.join(SCENARIOS)}, or all")
    run.add_argument("--param", action="append", default=[], metavar="K=V",
                     help="scenario parameter, repeatable")
    run.add_argument("--samples", type=int, help="sample budget; 1000 reproduces the default counts")
    run.add_argument("--seed", type=int, help="seed for the per-check PCG64 generators")
    run.add_argument("--format", choices=("json", "csv", "text"))
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--config", help="JSON file with the same keys as the flags")
    run.add_argument("--no-timing", action="store_true", help="omit the timing block from JSON")
    sub.add_parser("list-scenarios", help="list scenarios with their parameters")
    return p


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config key(s) {sorted(unknown)}")
    if not isinstance(data.get("params", {}), dict):
        raise ConfigurationError("config 'params' must be an object")
    return data


def _parse_params(items) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"--param expects K=V, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def resolve(args) -> tuple:
    """Merge config file, flags and GE_TOL_OVERRIDE into run settings.

    Flags win over the config file; the environment variable is applied last
    on top of any ``tolerances`` object in the config.
    """
    cfg = _load_config(args.config) if args.config else {}
    scenario = args.scenario or cfg.get("scenario")
    if not scenario:
        raise ConfigurationError("no scenario given (use --scenario or a config file)")
    params = dict(cfg.get("params", {}))
    params.update(_parse_params(args.param))
    samples = args.samples if args.samples is not None else cfg.get("samples", 1000)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    fmt = args.format or cfg.get("format", "json")
    if fmt not in ("json", "csv", "text"):
        raise ConfigurationError(f"unknown format {fmt!r}")
    out = args.out if args.out is not None else cfg.get("out")
    tol = ToleranceProfile()
    if "tolerances" in cfg:
        if not isinstance(cfg["tolerances"], dict):
            raise ConfigurationError("config 'tolerances' must be an object")
        tol = tol.with_overrides(cfg["tolerances"])
    env = os.environ.get("GE_TOL_OVERRIDE", "").strip()
    if env:
        tol = tol.with_overrides(parse_overrides(env))
    if scenario == "all":
        if params:
            raise ConfigurationError("parameters cannot be combined with --scenario all")
        configs = [ScenarioConfig(name, {}, samples, seed, tol) for name in SUITE]
    else:
        configs = [ScenarioConfig(scenario, params, samples, seed, tol)]
    return configs, fmt, out


def cmd_run(args) -> int:
    try:
        configs, fmt, out = resolve(args)
        reports = [run_scenario(c) for c in configs]
    except (ConfigurationError, InputError) as exc:
        print(f"groupoid-effect: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = emit_report(reports[0] if len(reports) == 1 else reports, fmt,
                       include_timing=not args.no_timing)
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"groupoid-effect: cannot write {out}: {exc.strerror}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(text)
    return EXIT_FAIL if any(r.exit_code for r in reports) else EXIT_OK


def cmd_list(args) -> int:
    for spec in SCENARIOS.values():
        params = ", ".join(f"{k}={v!r}" for k, v in spec.defaults.items()) or "no parameters"
        print(f"{spec.name:<11} {spec.description}")
        print(f"{'':<11} params: {params}")
        print(f"{'':<11} checks: {', '.join(m[0] for m in spec.manifest)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_list(args)


if __name__ == "__main__":
    sys.exit(main())
