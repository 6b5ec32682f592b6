"""Command-line front end: run experiments from flags, config files, or presets.

Each run writes into the output directory:

* results.csv   tidy long table (experiment, seed, case, metric, value)
* summary.json  machine-readable summary of the experiment
* manifest.json resolved config, tool version, master seed, status
* chart.svg     static chart rendered from results.csv rows (optional)

Exit codes: 0 success, 1 runtime failure, 2 configuration error.  Identical
config and seed give byte-identical results.csv at any parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .experiments import (
    EXPERIMENT_KINDS,
    PRESET_ALIASES,
    PRESETS,
    ConfigError,
    ExperimentConfig,
    preset_config,
    run_experiment,
    validate_params,
)

OUTPUT_DIR_ENV = "EDGELAB_OUTPUT_DIR"
_TOP_LEVEL_KEYS = {"experiment", "params", "seed", "out", "formats", "parallel"}
_FORMATS = ("csv", "json", "svg")


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_results_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["experiment", "seed", "case", "metric", "value"])
        for row in rows:
            writer.writerow(
                [
                    row["experiment"],
                    row["seed"],
                    row["case"],
                    row["metric"],
                    _format_value(row["value"]),
                ]
            )


def read_results_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_manifest(out_dir: Path, payload: dict) -> None:
    _write_json(out_dir / "manifest.json", payload)


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    for key in raw:
        if key not in _TOP_LEVEL_KEYS:
            raise ConfigError(f"unknown key '{key}' in config file {path}")
    if "params" in raw and not isinstance(raw["params"], dict):
        raise ConfigError("key 'params' in the config file must be a mapping")
    return raw


def _parse_formats(text: str) -> tuple[str, ...]:
    formats = tuple(p.strip() for p in text.split(",") if p.strip())
    for fmt in formats:
        if fmt not in _FORMATS:
            raise ConfigError(f"unknown output format '{fmt}'; expected csv, json, svg")
    return formats


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--preset", help="named preset to start from")
    parser.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    parser.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_DIR_ENV} or ./runs/<experiment>)")
    parser.add_argument("--parallel", type=int, default=None, help="worker processes (default 1)")
    parser.add_argument(
        "--formats", default=None, help="comma list of outputs to write: csv,json,svg"
    )


# Flag name -> params key, per experiment kind.
_KIND_FLAGS: dict[str, dict[str, tuple[str, type]]] = {
    "kelly": {"--p": ("p", float), "--n-max": ("n_max", int), "--tol": ("tol", float)},
    "lottery": {
        "--popularity": ("popularity", str),
        "--others": ("others", int),
        "--jackpot": ("jackpot", float),
        "--ticket-price": ("ticket_price", float),
        "--draw-distribution": ("draw_distribution", str),
        "--strategy": ("strategy", str),
        "--draws": ("draws", int),
    },
    "sde": {
        "--model": ("model", str),
        "--paths": ("paths", int),
        "--t-end": ("t_end", float),
        "--n-steps": ("n_steps", int),
        "--store-paths": ("store_paths", int),
        "--r": ("r", float),
        "--sigma": ("sigma", float),
        "--kappa": ("kappa", float),
        "--lambda-hat": ("lambda_hat", float),
        "--sigma-hat": ("sigma_hat", float),
        "--lambda0": ("lambda0", float),
        "--s0": ("s0", float),
        "--mu": ("mu", float),
    },
    "arena": {
        "--market": ("market", str),
        "--policies": ("policies", str),
        "--seeds": ("seeds", int),
    },
    "hedge": {
        "--implied-vol": ("implied_vol", float),
        "--realized-vol": ("realized_vol", float),
        "--rate": ("rate", float),
        "--s0": ("s0", float),
        "--strike": ("strike", float),
        "--maturity": ("maturity", float),
        "--kind": ("kind", str),
        "--drift": ("drift", float),
        "--paths": ("paths", int),
        "--steps": ("steps", str),
    },
    "impact": {
        "--control-pairs": ("control_pairs", int),
        "--round-trips": ("round_trips", int),
        "--cycle-rounds": ("cycle_rounds", int),
        "--size": ("size", float),
    },
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgelab",
        description="Deterministic simulations of systematic market edges.",
    )
    parser.add_argument("--version", action="version", version=f"edgelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in EXPERIMENT_KINDS:
        kind_parser = sub.add_parser(kind, help=f"run the {kind} experiment")
        _add_common_flags(kind_parser)
        for flag, (key, value_type) in _KIND_FLAGS[kind].items():
            kind_parser.add_argument(flag, dest=f"param_{key}", type=value_type, default=None)

    run_parser = sub.add_parser("run", help="run a preset or a config file")
    _add_common_flags(run_parser)

    sub.add_parser("presets", help="list available presets")
    return parser


def _resolve_config(args: argparse.Namespace, kind: str | None) -> tuple[ExperimentConfig, Path, tuple[str, ...]]:
    base: dict = {"params": {}}
    if getattr(args, "preset", None):
        base = preset_config(args.preset)
    if getattr(args, "config", None):
        file_cfg = load_config_file(args.config)
        base_params = dict(base.get("params", {}))
        base_params.update(file_cfg.get("params", {}))
        base.update({k: v for k, v in file_cfg.items() if k != "params"})
        base["params"] = base_params

    experiment = base.get("experiment", kind)
    if experiment is None:
        raise ConfigError("no experiment selected: pass a subcommand, --preset, or a config file")
    if kind is not None and experiment != kind:
        raise ConfigError(
            f"config is for experiment '{experiment}' but the '{kind}' subcommand was invoked"
        )

    params = dict(base.get("params", {}))
    for key, value in vars(args).items():
        if key.startswith("param_") and value is not None:
            name = key[len("param_") :]
            if name == "market":
                try:
                    value = json.loads(value)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"--market must be a JSON object: {exc}") from None
            params[name] = value

    seed = args.seed if args.seed is not None else base.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"key 'seed' must be an integer, got {seed!r}")
    parallel = args.parallel if args.parallel is not None else base.get("parallel", 1)
    if not isinstance(parallel, int) or parallel < 1:
        raise ConfigError(f"key 'parallel' must be a positive integer, got {parallel!r}")
    formats_raw = args.formats if args.formats is not None else base.get("formats", "csv,json,svg")
    if isinstance(formats_raw, (list, tuple)):
        formats_raw = ",".join(formats_raw)
    formats = _parse_formats(formats_raw)

    out = args.out or base.get("out") or os.environ.get(OUTPUT_DIR_ENV)
    out_dir = Path(out) if out else Path("runs") / experiment

    resolved_params = validate_params(experiment, params)
    config = ExperimentConfig(
        experiment=experiment, params=resolved_params, seed=seed, parallel=parallel
    )
    return config, out_dir, formats


def _manifest_payload(config: ExperimentConfig, formats: tuple[str, ...], status: str, outputs: list[str], error: str | None = None) -> dict:
    payload = {
        "tool": "edgelab",
        "version": __version__,
        "experiment": config.experiment,
        "master_seed": config.seed,
        "parallel": config.parallel,
        "formats": list(formats),
        "params": config.params,
        "status": status,
        "outputs": outputs,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if error is not None:
        payload["error"] = error
    return payload


def execute(config: ExperimentConfig, out_dir: Path, formats: tuple[str, ...]) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[str] = []
    try:
        result = run_experiment(config)
        if "csv" in formats:
            write_results_csv(out_dir / "results.csv", result.rows)
            outputs.append("results.csv")
        if "json" in formats:
            _write_json(out_dir / "summary.json", result.summary)
            outputs.append("summary.json")
        if "svg" in formats:
            from .plotting import render_chart

            render_chart(config.experiment, result.rows, str(out_dir / "chart.svg"))
            outputs.append("chart.svg")
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001  (failure must leave a manifest)
        write_manifest(
            out_dir, _manifest_payload(config, formats, "failed", outputs, error=f"{type(exc).__name__}: {exc}")
        )
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    write_manifest(out_dir, _manifest_payload(config, formats, "success", outputs))
    print(f"wrote {', '.join(outputs + ['manifest.json'])} to {out_dir}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "presets":
        for name in sorted(PRESETS):
            print(f"{name}: {PRESETS[name]['experiment']}")
        for alias, target in sorted(PRESET_ALIASES.items()):
            print(f"{alias} -> {target}")
        return 0

    kind = args.command if args.command in EXPERIMENT_KINDS else None
    try:
        config, out_dir, formats = _resolve_config(args, kind)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return execute(config, out_dir, formats)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
