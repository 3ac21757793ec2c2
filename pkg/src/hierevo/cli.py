"""Command-line interface: experiments, metrics, and statistics.

Every run is driven by a flat ``key = value`` config file plus flag overrides
(flags win), and writes a ``manifest.txt`` with the fully resolved
configuration so the run can be reproduced exactly from that file alone.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import __version__
from .evolution import EvolutionConfig, TREATMENTS
from .experiments import (
    EvolvabilityPlan,
    run_evolvability,
    run_treatment_trials,
    write_best_genomes,
    write_evolvability_csv,
    write_generations_csv,
)
from .mapelites import run_map_elites, write_archive_csv, write_archive_genomes
from .metrics import compute_metrics
from .netmodel import LayerShape, load_genome
from .problems import BUILTIN_PROBLEMS, get_problem
from .sampling import sample_networks, write_samples_csv
from .stats import bootstrap_median_ci, median_filter, rank_sum

WORKERS_ENV_VAR = "HIEREVO_WORKERS"


class CliError(Exception):
    """A one-line user-facing error; the message names the offending key."""


# key: (kind, default). kind in {int, float, bool, str, shape}
_EVOLVE_KEYS = {
    "treatment": ("str", "pcc"),
    "problem": ("str", "and-xor-and"),
    "shape": ("shape", None),
    "pop_size": ("int", 1000),
    "generations": ("int", 25000),
    "trials": ("int", 30),
    "cost_probability": ("float", 1.0),
    "bias_mutation_rate": ("float", 0.00067),
    "init_conn_min": ("int", 20),
    "init_conn_max": ("int", 100),
    "init_require_valid": ("bool", False),
    "pnsga_granularity": ("str", "generation"),
    "seed": ("int", 0),
    "workers": ("int", None),
    "out_dir": ("str", None),
}

_EVOLVABILITY_KEYS = dict(
    _EVOLVE_KEYS,
    **{
        "base_problem": ("str", "and-xor-and"),
        "target_problem": ("str", "and-equ-and"),
        "seeds_wanted": ("int", 30),
        "runs_per_seed": ("int", 30),
        "generation_cap": ("int", 25000),
        "trial_cap": ("int", None),
        "mutate_seed_copies": ("bool", True),
    },
)

_MAP_ELITES_KEYS = {
    "problem": ("str", "and-xor-and"),
    "shape": ("shape", None),
    "budget": ("int", 200000),
    "initial_batch": ("int", 1000),
    "bin_width": ("float", 0.05),
    "batch_size": ("int", 1),
    "bias_mutation_rate": ("float", 0.00067),
    "init_conn_min": ("int", 20),
    "init_conn_max": ("int", 100),
    "init_require_valid": ("bool", False),
    "seed": ("int", 0),
    "out_dir": ("str", None),
}

_SAMPLE_KEYS = {
    "shape": ("shape", None),
    "per_count": ("int", 20000),
    "count_min": ("int", 11),
    "count_max": ("int", 58),
    "seed": ("int", 0),
    "workers": ("int", None),
    "out_dir": ("str", None),
}


def _coerce(key: str, kind: str, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "shape":
            return tuple(int(part) for part in text.split(","))
        return text
    except ValueError:
        raise CliError(f"invalid {key}: cannot parse {raw!r} as {kind}") from None


def parse_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and ``#`` comments ignored."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"invalid config: cannot read {path}: {exc.strerror}") from exc
    values = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise CliError(f"invalid config: {path}:{lineno}: expected 'key = value'")
        key, _, value = text.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(keys: dict, args: argparse.Namespace) -> dict:
    """defaults < config file < flags; types coerced with key-named errors."""
    resolved = {key: default for key, (_, default) in keys.items()}
    if getattr(args, "config", None):
        for key, raw in parse_config_file(args.config).items():
            if key not in keys:
                raise CliError(f"invalid config key: {key}")
            resolved[key] = _coerce(key, keys[key][0], raw)
    for key, (kind, _) in keys.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = _coerce(key, kind, flag_value)
    if "workers" in keys and resolved.get("workers") is None:
        env = os.environ.get(WORKERS_ENV_VAR)
        resolved["workers"] = _coerce("workers", "int", env) if env else 1
    return resolved


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_manifest(out_dir: str, subcommand: str, resolved: dict) -> None:
    path = os.path.join(out_dir, "manifest.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# hierevo {__version__} manifest\n")
        fh.write(f"# subcommand: {subcommand}\n")
        for key, value in resolved.items():
            if value is None:
                continue
            fh.write(f"{key} = {_format_value(value)}\n")


def _require_out_dir(resolved: dict) -> str:
    out_dir = resolved.get("out_dir")
    if not out_dir:
        raise CliError("invalid out_dir: an output directory is required")
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _evolution_config(resolved: dict) -> EvolutionConfig:
    config = EvolutionConfig(
        treatment=resolved.get("treatment", "pcc"),
        problem=resolved["problem"],
        layer_sizes=resolved.get("shape"),
        pop_size=resolved.get("pop_size", 1000),
        generations=resolved.get("generations", 25000),
        cost_probability=resolved.get("cost_probability", 1.0),
        bias_mutation_rate=resolved.get("bias_mutation_rate", 0.00067),
        init_conn_min=resolved["init_conn_min"],
        init_conn_max=resolved["init_conn_max"],
        init_require_valid=resolved["init_require_valid"],
        pnsga_granularity=resolved.get("pnsga_granularity", "generation"),
        seed=resolved["seed"],
    )
    try:
        config.validate()
    except (ValueError, KeyError) as exc:
        raise CliError(str(exc)) from exc
    return config


def _positive(resolved: dict, key: str, minimum: int = 1) -> int:
    value = resolved[key]
    if value is None or value < minimum:
        raise CliError(f"invalid {key}: must be >= {minimum} (got {value})")
    return value


def cmd_evolve(args: argparse.Namespace) -> int:
    resolved = _resolve(_EVOLVE_KEYS, args)
    config = _evolution_config(resolved)
    trials = _positive(resolved, "trials")
    workers = _positive(resolved, "workers")
    out_dir = _require_out_dir(resolved)
    resolved["shape"] = config.shape().sizes
    results = run_treatment_trials(config, trials, workers)
    write_generations_csv(results, os.path.join(out_dir, "generations.csv"))
    write_best_genomes(results, out_dir)
    write_manifest(out_dir, "evolve", resolved)
    return 0


def cmd_evolvability(args: argparse.Namespace) -> int:
    resolved = _resolve(_EVOLVABILITY_KEYS, args)
    resolved["problem"] = resolved["base_problem"]
    config = _evolution_config(resolved)
    workers = _positive(resolved, "workers")
    out_dir = _require_out_dir(resolved)
    try:
        plan = EvolvabilityPlan(
            base_problem=resolved["base_problem"],
            target_problem=resolved["target_problem"],
            seeds_wanted=_positive(resolved, "seeds_wanted"),
            runs_per_seed=_positive(resolved, "runs_per_seed"),
            generation_cap=_positive(resolved, "generation_cap"),
            trial_cap=resolved["trial_cap"],
            mutate_seed_copies=resolved["mutate_seed_copies"],
        )
        get_problem(plan.target_problem)
    except (ValueError, KeyError) as exc:
        raise CliError(f"invalid plan: {exc}") from exc
    resolved["shape"] = config.shape().sizes
    replicates = run_evolvability(plan, config.treatment, config, workers)
    write_evolvability_csv(replicates, os.path.join(out_dir, "evolvability.csv"))
    write_manifest(out_dir, "evolvability", resolved)
    return 0


def cmd_map_elites(args: argparse.Namespace) -> int:
    resolved = _resolve(_MAP_ELITES_KEYS, args)
    resolved.setdefault("treatment", "pa")
    config = _evolution_config(resolved)
    budget = _positive(resolved, "budget")
    initial_batch = _positive(resolved, "initial_batch")
    batch_size = _positive(resolved, "batch_size")
    bin_width = resolved["bin_width"]
    if not 0.0 < bin_width <= 1.0:
        raise CliError(f"invalid bin_width: must be in (0, 1] (got {bin_width})")
    if budget < initial_batch:
        raise CliError(
            f"invalid budget: must cover the initial batch of {initial_batch} "
            f"(got {budget})"
        )
    out_dir = _require_out_dir(resolved)
    resolved["shape"] = config.shape().sizes
    resolved.pop("treatment", None)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    archive = run_map_elites(
        config.problem,
        budget,
        config,
        rng,
        initial_batch=initial_batch,
        bin_width=bin_width,
        batch_size=batch_size,
    )
    write_archive_csv(archive, os.path.join(out_dir, "elites.csv"))
    write_archive_genomes(archive, out_dir)
    write_manifest(out_dir, "map-elites", resolved)
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    resolved = _resolve(_SAMPLE_KEYS, args)
    shape = LayerShape(resolved["shape"] or (8, 4, 4, 2, 1))
    per_count = _positive(resolved, "per_count")
    workers = _positive(resolved, "workers")
    lo, hi = resolved["count_min"], resolved["count_max"]
    if not shape.min_valid_connections <= lo <= hi <= shape.max_connections:
        raise CliError(
            "invalid count_min/count_max: range must lie within "
            f"[{shape.min_valid_connections}, {shape.max_connections}] "
            f"(got [{lo}, {hi}])"
        )
    out_dir = _require_out_dir(resolved)
    resolved["shape"] = shape.sizes
    records = sample_networks(shape, per_count, (lo, hi), resolved["seed"], workers)
    write_samples_csv(records, os.path.join(out_dir, "samples.csv"))
    write_manifest(out_dir, "sample", resolved)
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        genome = load_genome(args.network)
    except OSError as exc:
        raise CliError(f"invalid network: cannot read {args.network}: {exc.strerror}") from exc
    except ValueError as exc:
        raise CliError(f"invalid network: {exc}") from exc
    try:
        problem = get_problem(args.problem)
    except KeyError as exc:
        raise CliError(str(exc.args[0])) from exc
    report = compute_metrics(
        genome,
        problem,
        include_isolated=args.include_isolated,
        include_root_subproblem=args.include_root_subproblem,
    )
    print(
        ",".join(
            [
                repr(report.hierarchy),
                repr(report.modularity),
                repr(report.cost),
                str(report.subproblems_solved),
                repr(report.subproblem_fraction),
            ]
        )
    )
    return 0


def _read_column(path: str, column: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or column not in reader.fieldnames:
                raise CliError(f"invalid column: {column!r} not found in {path}")
            values = [float(row[column]) for row in reader]
    except OSError as exc:
        raise CliError(f"invalid file: cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise CliError(f"invalid column: non-numeric value in {column!r}: {exc}") from exc
    if not values:
        raise CliError(f"invalid column: {column!r} in {path} is empty")
    return np.array(values)


def cmd_stats(args: argparse.Namespace) -> int:
    if args.stats_mode == "ranksum":
        a = _read_column(args.file_a, args.column)
        b = _read_column(args.file_b, args.column_b or args.column)
        u, p = rank_sum(a, b, alternative=args.alternative)
        print(f"U={repr(float(u))} p={repr(float(p))}")
        return 0
    series = _read_column(args.file, args.column)
    if args.smooth:
        if args.smooth % 2 == 0:
            raise CliError(f"invalid smooth: window must be odd (got {args.smooth})")
        series = median_filter(series, args.smooth)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    low, high = bootstrap_median_ci(series, args.resamples, args.level, rng)
    print(
        f"median={repr(float(np.median(series)))} "
        f"ci_low={repr(low)} ci_high={repr(high)}"
    )
    return 0


def _add_key_flags(parser: argparse.ArgumentParser, keys: dict) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    for key in keys:
        parser.add_argument(
            f"--{key.replace('_', '-')}", dest=key, default=None, metavar="V"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierevo",
        description="Evolve layered Boolean-logic networks and measure their "
        "hierarchy, modularity, wiring cost, and sub-problem decomposition.",
    )
    parser.add_argument("--version", action="version", version=f"hierevo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run evolutionary trials of one treatment")
    _add_key_flags(p, _EVOLVE_KEYS)
    p.set_defaults(handler=cmd_evolve)

    p = sub.add_parser("evolvability", help="base-to-target transfer experiment")
    _add_key_flags(p, _EVOLVABILITY_KEYS)
    p.set_defaults(handler=cmd_evolvability)

    p = sub.add_parser("map-elites", help="illuminate the modularity/hierarchy plane")
    _add_key_flags(p, _MAP_ELITES_KEYS)
    p.set_defaults(handler=cmd_map_elites)

    p = sub.add_parser("sample", help="census of random valid networks")
    _add_key_flags(p, _SAMPLE_KEYS)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("metrics", help="metrics of one network JSON file")
    p.add_argument("--network", required=True, help="network JSON file")
    p.add_argument(
        "--problem", required=True, help=f"one of: {', '.join(sorted(BUILTIN_PROBLEMS))}"
    )
    p.add_argument("--include-isolated", action="store_true")
    p.add_argument("--include-root-subproblem", action="store_true")
    p.set_defaults(handler=cmd_metrics)

    p = sub.add_parser("stats", help="rank-sum comparison or series summary")
    stats_sub = p.add_subparsers(dest="stats_mode", required=True)
    rs = stats_sub.add_parser("ranksum", help="compare a CSV column across two files")
    rs.add_argument("file_a")
    rs.add_argument("file_b")
    rs.add_argument("--column", required=True)
    rs.add_argument("--column-b", dest="column_b", default=None)
    rs.add_argument(
        "--alternative",
        choices=("two-sided", "greater", "less"),
        default="two-sided",
    )
    rs.set_defaults(handler=cmd_stats)
    sm = stats_sub.add_parser("summary", help="median with bootstrapped CI")
    sm.add_argument("file")
    sm.add_argument("--column", required=True)
    sm.add_argument("--resamples", type=int, default=5000)
    sm.add_argument("--level", type=float, default=0.95)
    sm.add_argument("--smooth", type=int, default=0, help="odd median-filter window")
    sm.add_argument("--seed", type=int, default=0)
    sm.set_defaults(handler=cmd_stats)
    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"hierevo: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"hierevo: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())
