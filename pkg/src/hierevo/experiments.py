"""Experiment orchestration: multi-trial treatment runs and evolvability
transfers, with deterministic per-task seeding and optional process
parallelism.

Every trial or replicate derives its own seed from the master seed and its
identity (treatment, index), so results are byte-identical for any worker
count and any scheduling order.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import netmodel
from .evolution import EvolutionConfig, TrialResult, run_trial
from .netmodel import NetworkGenome, save_genome
from .problems import default_layer_sizes, get_problem
from .seeds import stable_seed

DEFAULT_TRIAL_CAP_FACTOR = 5  # base-environment trials allowed per wanted seed

BUILTIN_EVOLVABILITY_PLANS = (
    ("and-xor-and", "and-equ-and"),
    ("and-xor-and", "or-xor-and"),
    ("or-xor-equ-equ", "and-equ-and"),
)


@dataclass(frozen=True)
class EvolvabilityPlan:
    """A base-to-target transfer: evolve perfect base solvers, then time how
    long their descendants need to master the target problem."""

    base_problem: str
    target_problem: str
    seeds_wanted: int = 30
    runs_per_seed: int = 30
    generation_cap: int = 25000
    trial_cap: int | None = None  # None: DEFAULT_TRIAL_CAP_FACTOR * seeds_wanted
    mutate_seed_copies: bool = True

    def __post_init__(self):
        if self.base_problem == self.target_problem:
            raise ValueError("base and target problems must differ")

    @property
    def effective_trial_cap(self) -> int:
        if self.trial_cap is not None:
            return self.trial_cap
        return DEFAULT_TRIAL_CAP_FACTOR * self.seeds_wanted


@dataclass(frozen=True)
class Replicate:
    seed_index: int
    run_index: int
    generations_to_solve: int
    censored: bool


def _run_parallel(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _trial_job(args) -> TrialResult:
    config, seed_genome, mutate_copies = args
    return run_trial(config, seed_genome, mutate_copies)


def trial_config(config: EvolutionConfig, treatment: str, *labels) -> EvolutionConfig:
    """The trial's own config: its seed is derived from the master seed, the
    treatment, and the trial's identifying labels."""
    return replace(
        config,
        treatment=treatment,
        seed=stable_seed(config.seed, treatment, *labels),
    )


def run_treatment_trials(
    config: EvolutionConfig, trials: int, workers: int = 1
) -> list[TrialResult]:
    """Independent trials of config.treatment, ordered by trial index."""
    jobs = [
        (trial_config(config, config.treatment, i), None, True) for i in range(trials)
    ]
    return _run_parallel(_trial_job, jobs, workers)


def run_treatment_comparison(
    config: EvolutionConfig,
    treatments: tuple[str, ...],
    trials: int,
    workers: int = 1,
) -> dict[str, list[TrialResult]]:
    """The same trial grid run under each treatment."""
    results = {}
    for treatment in treatments:
        results[treatment] = run_treatment_trials(
            replace(config, treatment=treatment), trials, workers
        )
    return results


def _resolve_transfer_shape(plan: EvolvabilityPlan, config: EvolutionConfig):
    """Networks keep the base problem's layer stack in the target environment."""
    return config.layer_sizes or default_layer_sizes(plan.base_problem)


def collect_perfect_seeds(
    plan: EvolvabilityPlan,
    treatment: str,
    config: EvolutionConfig,
    workers: int = 1,
) -> list[NetworkGenome]:
    """Phase 1: run base-problem trials (in index order) until enough end in a
    perfect network; trials that never reach 1.0 are discarded."""
    base_config = replace(
        config,
        problem=plan.base_problem,
        layer_sizes=_resolve_transfer_shape(plan, config),
        generations=plan.generation_cap,
        stop_on_perfect=True,
    )
    cap = plan.effective_trial_cap
    seeds: list[NetworkGenome] = []
    next_trial = 0
    while len(seeds) < plan.seeds_wanted and next_trial < cap:
        wave = min(max(workers, 1), cap - next_trial)
        jobs = [
            (trial_config(base_config, treatment, "base", i), None, True)
            for i in range(next_trial, next_trial + wave)
        ]
        for result in _run_parallel(_trial_job, jobs, workers):
            if result.solved_generation is not None and len(seeds) < plan.seeds_wanted:
                seeds.append(result.best_genome)
        next_trial += wave
    if len(seeds) < plan.seeds_wanted:
        raise RuntimeError(
            f"collected only {len(seeds)} of {plan.seeds_wanted} perfect "
            f"{plan.base_problem} networks within {cap} trials ({treatment})"
        )
    return seeds


def run_evolvability(
    plan: EvolvabilityPlan,
    treatment: str,
    config: EvolutionConfig,
    workers: int = 1,
    seeds: list[NetworkGenome] | None = None,
) -> list[Replicate]:
    """Phase 2: every perfect base network seeds runs_per_seed target runs.

    Each run starts from pop_size mutated copies of its seed network and
    reports the generations until the target problem is solved perfectly
    (capped and flagged censored when it never is).  A seed network that
    already solves the target counts as 0 generations.
    """
    if seeds is None:
        seeds = collect_perfect_seeds(plan, treatment, config, workers)
    target_problem = get_problem(plan.target_problem)
    target_config = replace(
        config,
        problem=plan.target_problem,
        layer_sizes=_resolve_transfer_shape(plan, config),
        generations=plan.generation_cap,
        stop_on_perfect=True,
    )
    tasks = []
    pending = []
    results: dict[tuple[int, int], Replicate] = {}
    for si, genome in enumerate(seeds):
        already_perfect = netmodel.evaluate_all(genome, target_problem)[0] == 1.0
        for ri in range(plan.runs_per_seed):
            if already_perfect:
                results[(si, ri)] = Replicate(si, ri, 0, False)
                continue
            run_cfg = replace(
                target_config,
                seed=stable_seed(config.seed, treatment, "target", si, ri),
            )
            tasks.append((si, ri))
            pending.append((run_cfg, genome, plan.mutate_seed_copies))
    for (si, ri), result in zip(tasks, _run_parallel(_trial_job, pending, workers)):
        if result.solved_generation is None:
            results[(si, ri)] = Replicate(si, ri, plan.generation_cap, True)
        else:
            results[(si, ri)] = Replicate(si, ri, result.solved_generation, False)
    return [results[key] for key in sorted(results)]


def run_nonmod_experiments(
    config: EvolutionConfig,
    trials: int,
    workers: int = 1,
) -> dict:
    """The anti-modularity treatment pushed through both experiment kinds."""
    nonmod = replace(config, treatment="pcc-nonmod")
    comparison = run_treatment_trials(nonmod, trials, workers)
    plan = EvolvabilityPlan("and-xor-and", "and-equ-and")
    evolvability = run_evolvability(plan, "pcc-nonmod", nonmod, workers)
    return {"comparison": comparison, "evolvability": evolvability}


def write_generations_csv(results: list[TrialResult], path) -> None:
    """Per-generation series of every trial.

    Rows cover generations 1..G (the evolved generations); a zero-generation
    trial contributes its single initial row so the file is never empty.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "trial",
                "generation",
                "best_performance",
                "hierarchy",
                "modularity",
                "cost",
                "subproblems",
            ]
        )
        for trial, result in enumerate(results):
            start = 1 if result.generations_run > 0 else 0
            for gen in range(start, result.generations_run + 1):
                writer.writerow(
                    [
                        trial,
                        gen,
                        repr(float(result.best_performance[gen])),
                        repr(float(result.hierarchy[gen])),
                        repr(float(result.modularity[gen])),
                        repr(float(result.cost[gen])),
                        int(result.subproblems[gen]),
                    ]
                )


def write_best_genomes(results: list[TrialResult], out_dir) -> None:
    for trial, result in enumerate(results):
        save_genome(result.best_genome, os.path.join(out_dir, f"trial{trial}_best.json"))


def write_evolvability_csv(replicates: list[Replicate], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed_index", "run_index", "generations_to_solve", "censored"])
        for rep in replicates:
            writer.writerow(
                [rep.seed_index, rep.run_index, rep.generations_to_solve, int(rep.censored)]
            )
