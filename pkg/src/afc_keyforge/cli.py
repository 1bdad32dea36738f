"""Command-line front end: presets, ``key = value`` config files and CSV output."""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .harness import SCOPES, SimulationConfig, SweepPointResult, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2

DISTANCE_GRID = (1.0, 5.0, 10.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0)
TOLERANCE_LEVELS = (0, 500, 1500, 3000)

CSV_COLUMNS = (
    "experiment", "sweep_param_name", "sweep_value", "k_factor", "node_count",
    "tolerance", "policy_mode", "trials", "successes", "success_rate", "ci95",
)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentPreset:
    """A named experiment: config overrides plus the blocks it compares.

    Each block is a set of fields forced on top of the merged config; a preset
    without comparisons has a single empty block.
    """

    name: str
    overrides: dict = field(default_factory=dict)
    blocks: tuple[dict, ...] = ({},)


PRESETS = {
    p.name: p
    for p in (
        ExperimentPreset("sweep-error"),
        ExperimentPreset("sweep-distance", {"distance_m": DISTANCE_GRID, "sigma_h": (0.03,)}),
        ExperimentPreset("sweep-tolerance", blocks=tuple({"tolerance": (t,)} for t in TOLERANCE_LEVELS)),
        ExperimentPreset("compare-limited", blocks=({"policy_mode": "unlimited"}, {"policy_mode": "limited"})),
        ExperimentPreset("compare-nodes", blocks=({"node_count": 2}, {"node_count": 3})),
        ExperimentPreset("single-run", {"sigma_h": (0.03,)}),
    )
}


# -- value parsing ---------------------------------------------------------

def _parse_int(key: str, text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _parse_float(key: str, text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None


def _parse_sweep(key: str, text: str, conv) -> tuple:
    """``X``, ``A:B:N`` (N evenly spaced points) or ``a,b,c``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(key, f"range must be A:B:POINTS, got {text!r}")
        a, b = _parse_float(key, parts[0]), _parse_float(key, parts[1])
        n = _parse_int(key, parts[2])
        if n < 1:
            raise ConfigError(key, "range needs at least one point")
        vals = np.round(np.linspace(a, b, n), 12)
        if conv is _parse_int:
            return tuple(int(round(v)) for v in vals)
        return tuple(float(v) for v in vals)
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError(key, "empty value")
    return tuple(conv(key, t) for t in items)


def _parse_bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {text!r}")


def _parse_choice(choices):
    def parse(key: str, text: str) -> str:
        t = text.strip()
        if t not in choices:
            raise ConfigError(key, f"expected one of {', '.join(choices)}, got {t!r}")
        return t
    return parse


# config-file key -> (config field, parser)
KEYS = {
    "trials": ("trials", _parse_int),
    "nodes": ("node_count", _parse_int),
    "seed": ("master_seed", _parse_int),
    "sigma_n": ("sigma_n", _parse_float),
    "sigma_h": ("sigma_h", lambda k, t: _parse_sweep(k, t, _parse_float)),
    "distance": ("distance_m", lambda k, t: _parse_sweep(k, t, _parse_float)),
    "tolerance": ("tolerance", lambda k, t: _parse_sweep(k, t, _parse_int)),
    "k_factor": ("k_factors", lambda k, t: _parse_sweep(k, t, _parse_float)),
    "carrier_hz": ("carrier_hz", _parse_float),
    "pool_min": ("pool_min", _parse_int),
    "pool_max": ("pool_max", _parse_int),
    "pathloss": ("pathloss_mode", _parse_choice(("physical", "normalized"))),
    "scope": ("success_scope", _parse_choice(SCOPES)),
    "policy": ("policy_mode", _parse_choice(("unlimited", "limited"))),
    "limited": ("policy_mode", lambda k, t: "limited" if _parse_bool(k, t) else "unlimited"),
    "trial_bound": ("trial_division_bound", _parse_int),
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` starts a comment) into config-field overrides."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(key, "unknown configuration key")
        name, parse = KEYS[key]
        out[name] = parse(key, value)
    return out


def apply_overrides(config: SimulationConfig, overrides: dict) -> SimulationConfig:
    overrides = dict(overrides)
    policy = config.policy
    if "policy_mode" in overrides:
        policy = replace(policy, mode=overrides.pop("policy_mode"))
    if "trial_division_bound" in overrides:
        bound = overrides.pop("trial_division_bound")
        if bound < 2:
            raise ConfigError("trial_bound", "must be at least 2")
        policy = replace(policy, trial_division_bound=bound)
    return replace(config, policy=policy, **overrides)


def _validated(config: SimulationConfig) -> SimulationConfig:
    try:
        return config.validate()
    except (ValueError, OverflowError) as exc:
        key = "sweep" if "swept" in str(exc) else "config"
        raise ConfigError(key, str(exc)) from None


def load_config(
    path: Optional[str] = None,
    overrides: Optional[dict] = None,
    preset: Optional[ExperimentPreset] = None,
) -> SimulationConfig:
    """Defaults, then preset overrides, then the config file, then ``overrides``."""
    config = SimulationConfig()
    if preset is not None:
        config = apply_overrides(config, preset.overrides)
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        config = apply_overrides(config, parse_config_text(text))
    if overrides:
        config = apply_overrides(config, overrides)
    return _validated(config)


def _fmt_list(values) -> str:
    return ",".join(repr(v) for v in values)


def dump_config(config: SimulationConfig) -> str:
    """Serialize ``config`` in the config-file format; :func:`load_config` reads it back unchanged."""
    lines = [
        f"trials = {config.trials}",
        f"nodes = {config.node_count}",
        f"seed = {config.master_seed}",
        f"sigma_n = {config.sigma_n!r}",
        f"sigma_h = {_fmt_list(config.sigma_h)}",
        f"distance = {_fmt_list(config.distance_m)}",
        f"tolerance = {_fmt_list(config.tolerance)}",
        f"k_factor = {_fmt_list(config.k_factors)}",
        f"carrier_hz = {config.carrier_hz!r}",
        f"pool_min = {config.pool_min}",
        f"pool_max = {config.pool_max}",
        f"pathloss = {config.pathloss_mode}",
        f"scope = {config.success_scope}",
        f"policy = {config.policy.mode}",
        f"trial_bound = {config.policy.trial_division_bound}",
    ]
    return "\n".join(lines) + "\n"


# -- running ---------------------------------------------------------------

def block_configs(preset: ExperimentPreset, config: SimulationConfig) -> list[SimulationConfig]:
    return [_validated(apply_overrides(config, block)) for block in preset.blocks]


def _g(v) -> str:
    return f"{v:.6g}"


def result_rows(preset_name: str, config: SimulationConfig, results: Sequence[SweepPointResult]) -> list[list[str]]:
    rows = []
    for r in results:
        tol = r.sweep_value if config.sweep_param == "tolerance" else config.tolerance[0]
        rows.append([
            preset_name, config.sweep_param, _g(r.sweep_value), _g(r.k_factor),
            str(config.node_count), str(int(tol)), config.policy.mode, str(r.trials),
            str(r.successes), _g(r.success_rate), _g(r.ci95_halfwidth),
        ])
    return rows


def render_csv(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(rows)
    return buf.getvalue()


def _stderr_progress(label: str):
    def report(n: int, total: int, result: SweepPointResult) -> None:
        print(f"[{label}] {n}/{total} point(s)", file=sys.stderr)
    return report


def run_experiment(
    preset: ExperimentPreset,
    config: SimulationConfig,
    out: str,
    workers: int = 1,
    quiet: bool = False,
) -> int:
    """Run every block of ``preset`` and write one CSV holding all of them."""
    try:
        configs = block_configs(preset, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    for block, cfg in zip(preset.blocks, configs):
        label = preset.name + "".join(f" {k}={v}" for k, v in block.items())
        results = run_sweep(cfg, workers=workers, progress=None if quiet else _stderr_progress(label))
        rows.extend(result_rows(preset.name, cfg, results))
        for k in cfg.k_factors:
            rates = [r.success_rate for r in results if r.k_factor == k]
            print(f"{label} K={_g(k)}: success rate min {min(rates):.4f} max {max(rates):.4f}")
    try:
        Path(out).write_bytes(render_csv(rows).encode("utf-8"))
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="afc-keyforge", description="Success-rate experiments for Gaussian-prime key generation.")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--trials")
    p.add_argument("--nodes")
    p.add_argument("--seed")
    p.add_argument("--sigma-n", dest="sigma_n")
    p.add_argument("--sigma-h", dest="sigma_h", help="X or A:B:STEPS")
    p.add_argument("--distance", help="X or A:B:POINTS")
    p.add_argument("--tolerance")
    p.add_argument("--k-factor", dest="k_factor", action="append", help="repeatable")
    p.add_argument("--pool-min", dest="pool_min")
    p.add_argument("--pool-max", dest="pool_max")
    p.add_argument("--limited", action="store_true", help="trial division only, capped at --trial-bound")
    p.add_argument("--trial-bound", dest="trial_bound")
    p.add_argument("--pathloss", choices=("physical", "normalized"))
    p.add_argument("--scope", choices=SCOPES)
    p.add_argument("--workers", type=int, default=1, help="worker processes; 0 uses every CPU")
    p.add_argument("--out", help="CSV path (default: <preset>.csv)")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def flag_overrides(args: argparse.Namespace) -> dict:
    raw = {}
    for key in ("trials", "nodes", "seed", "sigma_n", "sigma_h", "distance", "tolerance",
                "pool_min", "pool_max", "trial_bound", "pathloss", "scope"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    if args.k_factor:
        raw["k_factor"] = ",".join(args.k_factor)
    if args.limited:
        raw["policy"] = "limited"
    out = {}
    for key, value in raw.items():
        name, parse = KEYS[key]
        out[name] = parse(key, value)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    preset = PRESETS[args.preset]
    try:
        config = load_config(args.config, flag_overrides(args), preset)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dump_config:
        sys.stdout.write(dump_config(config))
        return EXIT_OK
    if args.workers < 0:
        print("error: --workers must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    workers = args.workers or os.cpu_count() or 1
    return run_experiment(preset, config, args.out or f"{preset.name}.csv", workers, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
