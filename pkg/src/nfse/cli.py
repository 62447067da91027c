"""Command-line front end: TOML config in, sweep CSV out."""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from nfse.estimators import ZalmsConfig
from nfse.harness import (
    ExperimentConfig,
    run_trial,
    sweep_pilot_length,
    sweep_snr,
)

USAGE_EXIT = 2

# TOML section -> (key -> ExperimentConfig field).  Keys follow the
# symbol names of the experiment setup (M subarrays, N antennas each,
# pilot length Q, step size mu, ...).
_SCHEMA = {
    "geometry": {
        "M": "num_subarrays",
        "N": "antennas_per_subarray",
        "lambda_c": "wavelength",
        "d": "antenna_spacing",
        "D": "subarray_spacing",
    },
    "channel": {
        "L": "num_paths",
        "r_min": "r_min",
        "sin_theta_min": "sin_theta_min",
        "sin_theta_max": "sin_theta_max",
        "path_placement": "path_placement",
    },
    "grid": {
        "mode": "grid_mode",
        "T_theta": "grid_num_angles",
        "r_step": "grid_r_step",
        "r_min": "grid_r_min",
        "r_max": "grid_r_max",
        "beta": "grid_beta",
        "T_r": "grid_num_distances",
    },
    "pilot": {"Q": "pilot_length"},
    "estimator": {"algorithms": "algorithms", "K": "sparsity"},
    "sweep": {
        "snr_db": "snr_db",
        "pilot_lengths": "pilot_lengths",
        "pilot_snr_db": "pilot_snr_db",
        "trials": "trials",
        "base_seed": "base_seed",
    },
}

_ZALMS_KEYS = {
    "mu": "step_size",
    "delta": "attractor_step",
    "alpha": "sharpness",
    "max_iters": "max_iters",
    "rel_tolerance": "rel_tolerance",
    "single_precision": "single_precision",
}


class ConfigError(ValueError):
    pass


def load_config(path: str) -> ExperimentConfig:
    """Parse a TOML experiment description into an ExperimentConfig."""
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from exc

    fields: dict = {}
    zalms_fields: dict = {}
    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key, value in content.items():
            if section == "estimator" and key in _ZALMS_KEYS:
                zalms_fields[_ZALMS_KEYS[key]] = value
                continue
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            if isinstance(value, list):
                value = tuple(value)
            fields[_SCHEMA[section][key]] = value
    try:
        if zalms_fields:
            defaults = ExperimentConfig().zalms
            fields["zalms"] = dataclasses.replace(defaults, **zalms_fields)
        cfg = ExperimentConfig(**fields)
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
    return cfg


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    updates: dict = {}
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if getattr(args, "algorithms", None):
        updates["algorithms"] = tuple(args.algorithms.split(","))
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    cfg.validate()
    return cfg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfse",
        description="Near-field sparse channel estimation NMSE experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML experiment config (defaults apply if omitted)")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--trials", type=int, help="override the trial count")
        p.add_argument("--algorithms", help="comma-separated algorithm subset")

    p = sub.add_parser("sweep-snr", help="NMSE versus SNR at fixed pilot length")
    common(p)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("sweep-pilot", help="NMSE versus pilot length at fixed SNR")
    common(p)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("estimate", help="run one trial and print per-algorithm NMSE")
    common(p)
    p.add_argument("--snr-db", type=float, help="trial SNR in dB (default: config pilot_snr_db)")
    p.add_argument("--pilot-length", type=int, help="trial pilot length (default: config Q)")
    p.add_argument("--trial-index", type=int, default=0)

    p = sub.add_parser("validate-config", help="check a config file and exit")
    p.add_argument("--config", required=True)
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate-config":
            load_config(args.config)
            print(f"{args.config}: ok")
            return 0
        cfg = ExperimentConfig() if args.config is None else load_config(args.config)
        cfg = _apply_overrides(cfg, args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT

    if args.command == "sweep-snr":
        sweep_snr(cfg).write_csv(args.out)
        print(f"wrote {args.out}")
        return 0
    if args.command == "sweep-pilot":
        sweep_pilot_length(cfg).write_csv(args.out)
        print(f"wrote {args.out}")
        return 0
    if args.command == "estimate":
        snr_db = args.snr_db if args.snr_db is not None else cfg.pilot_snr_db
        q = args.pilot_length if args.pilot_length is not None else cfg.pilot_length
        if not 1 <= q <= cfg.antennas_per_subarray:
            print(
                f"error: pilot length {q} must lie in [1, {cfg.antennas_per_subarray}]",
                file=sys.stderr,
            )
            return USAGE_EXIT
        results = run_trial(cfg, snr_db, q, args.trial_index)
        for algorithm in sorted(results):
            value = results[algorithm]
            if value is None:
                print(f"{algorithm}: failed")
            else:
                print(f"{algorithm}: nmse {value:.6g} ({10 * math.log10(value):.2f} dB)")
        return 0
    raise AssertionError(f"unhandled command {args.command}")  # pragma: no cover


def main() -> None:
    sys.exit(cli_main())
