import numpy as np
import pytest

from hierevo.evolution import EvolutionConfig
from hierevo.experiments import (
    BUILTIN_EVOLVABILITY_PLANS,
    EvolvabilityPlan,
    Replicate,
    collect_perfect_seeds,
    run_evolvability,
    run_treatment_comparison,
    run_treatment_trials,
    trial_config,
    write_evolvability_csv,
    write_generations_csv,
)
from hierevo.seeds import stable_seed


def tiny_config(**overrides):
    base = dict(
        treatment="pa",
        problem="and-xor-and",
        pop_size=10,
        generations=8,
        init_conn_min=11,
        init_conn_max=25,
        seed=42,
    )
    base.update(overrides)
    return EvolutionConfig(**base)


class TestSeeding:
    def test_trial_seeds_derived_from_master(self):
        config = tiny_config()
        c0 = trial_config(config, "pa", 0)
        c1 = trial_config(config, "pa", 1)
        assert c0.seed == stable_seed(42, "pa", 0)
        assert c1.seed != c0.seed
        assert trial_config(config, "pcc", 0).seed != c0.seed

    def test_stable_seed_is_stable(self):
        assert stable_seed(1, "x", 2) == stable_seed(1, "x", 2)
        assert stable_seed(1, "x", 2) != stable_seed(1, "x", 3)


class TestTreatmentRuns:
    def test_bookkeeping(self, tmp_path):
        results = run_treatment_trials(tiny_config(generations=10), trials=2)
        assert len(results) == 2
        path = tmp_path / "generations.csv"
        write_generations_csv(results, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("trial,generation,")
        assert len(lines) == 1 + 2 * 10  # one row per generation per trial
        assert lines[1].split(",")[:2] == ["0", "1"]

    def test_zero_generation_trial_emits_initial_row(self, tmp_path):
        results = run_treatment_trials(tiny_config(generations=0), trials=1)
        path = tmp_path / "generations.csv"
        write_generations_csv(results, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].split(",")[:2] == ["0", "0"]

    def test_deterministic_output_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_generations_csv(run_treatment_trials(tiny_config(), 2), a)
        write_generations_csv(run_treatment_trials(tiny_config(), 2), b)
        assert a.read_bytes() == b.read_bytes()

    def test_worker_count_independence(self, tmp_path):
        seq = run_treatment_trials(tiny_config(), 3, workers=1)
        par = run_treatment_trials(tiny_config(), 3, workers=2)
        for r1, r2 in zip(seq, par):
            assert np.array_equal(r1.best_performance, r2.best_performance)
            assert r1.best_genome == r2.best_genome

    def test_comparison_covers_treatments(self):
        results = run_treatment_comparison(tiny_config(), ("pa", "pcc"), trials=1)
        assert set(results) == {"pa", "pcc"}
        assert all(len(v) == 1 for v in results.values())


class TestEvolvability:
    def test_builtin_plans(self):
        assert ("and-xor-and", "and-equ-and") in BUILTIN_EVOLVABILITY_PLANS
        assert len(BUILTIN_EVOLVABILITY_PLANS) == 3

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            EvolvabilityPlan("and-xor-and", "and-xor-and")

    def test_default_trial_cap(self):
        plan = EvolvabilityPlan("and-xor-and", "and-equ-and", seeds_wanted=4)
        assert plan.effective_trial_cap == 20
        assert EvolvabilityPlan(
            "and-xor-and", "and-equ-and", trial_cap=7
        ).effective_trial_cap == 7

    def test_phase_one_shortfall_raises(self):
        # tiny populations over two generations cannot solve the problem
        plan = EvolvabilityPlan(
            "and-xor-and", "and-equ-and", seeds_wanted=2, runs_per_seed=1,
            generation_cap=2, trial_cap=3,
        )
        with pytest.raises(RuntimeError, match="collected only"):
            collect_perfect_seeds(plan, "pa", tiny_config(generations=2))

    def test_seed_perfect_on_target_scores_zero(self, perfect_and_equ_and):
        plan = EvolvabilityPlan(
            "and-xor-and", "and-equ-and", seeds_wanted=1, runs_per_seed=3,
            generation_cap=5,
        )
        replicates = run_evolvability(
            plan, "pa", tiny_config(), seeds=[perfect_and_equ_and]
        )
        assert [r.generations_to_solve for r in replicates] == [0, 0, 0]
        assert not any(r.censored for r in replicates)

    def test_censoring_at_cap(self, perfect_and_xor_and):
        # a seed perfect on the base problem but not the target, with a tiny
        # cap, cannot solve the target: every replicate is censored at the cap
        plan = EvolvabilityPlan(
            "and-xor-and", "and-equ-and", seeds_wanted=1, runs_per_seed=2,
            generation_cap=3,
        )
        replicates = run_evolvability(
            plan, "pa", tiny_config(), seeds=[perfect_and_xor_and]
        )
        assert all(r.generations_to_solve == 3 for r in replicates)
        assert all(r.censored for r in replicates)

    def test_replicate_grid_and_ordering(self, perfect_and_xor_and, perfect_and_equ_and):
        plan = EvolvabilityPlan(
            "and-xor-and", "and-equ-and", seeds_wanted=2, runs_per_seed=2,
            generation_cap=2,
        )
        replicates = run_evolvability(
            plan, "pcc", tiny_config(),
            seeds=[perfect_and_xor_and, perfect_and_equ_and],
        )
        assert [(r.seed_index, r.run_index) for r in replicates] == [
            (0, 0), (0, 1), (1, 0), (1, 1),
        ]

    def test_csv_output(self, tmp_path):
        path = tmp_path / "evolvability.csv"
        write_evolvability_csv(
            [Replicate(0, 0, 17, False), Replicate(0, 1, 50, True)], path
        )
        lines = path.read_text().splitlines()
        assert lines[0] == "seed_index,run_index,generations_to_solve,censored"
        assert lines[1] == "0,0,17,0"
        assert lines[2] == "0,1,50,1"

    def test_worker_independence(self, perfect_and_xor_and):
        plan = EvolvabilityPlan(
            "and-xor-and", "and-equ-and", seeds_wanted=1, runs_per_seed=3,
            generation_cap=2,
        )
        seq = run_evolvability(plan, "pa", tiny_config(), workers=1, seeds=[perfect_and_xor_and])
        par = run_evolvability(plan, "pa", tiny_config(), workers=2, seeds=[perfect_and_xor_and])
        assert seq == par
