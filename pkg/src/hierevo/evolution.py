"""Multi-objective evolution of network genomes (NSGA-II / PNSGA).

Selection always maximizes performance and behavioral diversity; depending on
the treatment it additionally minimizes wiring cost (with a configurable
participation probability, the PNSGA twist) and, for the anti-modularity
treatment, minimizes modularity.  Reproduction is asexual: binary tournament
on (rank, crowding), then mutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import netmodel
from .metrics import MetricsCache, solved_subproblems
from .netmodel import (
    BIAS_VALUES,
    WEIGHT_VALUES,
    LayerShape,
    NetworkGenome,
    random_genome,
)
from .problems import N_PATTERNS, default_layer_sizes, get_problem
from .seeds import stable_seed

TREATMENTS = ("pa", "pcc", "pcc-nonmod")


@dataclass
class EvolutionConfig:
    """Run parameters for one evolutionary trial."""

    treatment: str = "pcc"
    problem: str = "and-xor-and"
    layer_sizes: tuple[int, ...] | None = None  # None: default for the problem
    pop_size: int = 1000
    generations: int = 25000
    cost_probability: float = 1.0
    add_conn_rate: float = 0.20
    remove_conn_rate: float = 0.20
    bias_mutation_rate: float = 0.00067
    weight_mutations_expected: float = 2.0  # per-connection rate is this / n
    init_conn_min: int = 20
    init_conn_max: int = 100
    init_require_valid: bool = False
    pnsga_granularity: str = "generation"  # or "comparison"
    stop_on_perfect: bool = False
    seed: int = 0

    def shape(self) -> LayerShape:
        sizes = self.layer_sizes or default_layer_sizes(self.problem)
        return LayerShape(tuple(sizes))

    def validate(self) -> None:
        """Raise ValueError naming the offending field."""
        if self.treatment not in TREATMENTS:
            raise ValueError(
                f"invalid treatment: must be one of {', '.join(TREATMENTS)} "
                f"(got {self.treatment!r})"
            )
        get_problem(self.problem)  # raises KeyError listing valid names
        shape = self.shape()
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError(
                f"invalid pop_size: must be a positive even integer (got {self.pop_size})"
            )
        if self.generations < 0:
            raise ValueError(f"invalid generations: must be >= 0 (got {self.generations})")
        if not 0.0 <= self.cost_probability <= 1.0:
            raise ValueError(
                f"invalid cost_probability: must be in [0, 1] (got {self.cost_probability})"
            )
        if not 0.0 <= self.bias_mutation_rate <= 1.0:
            raise ValueError(
                f"invalid bias_mutation_rate: must be in [0, 1] (got {self.bias_mutation_rate})"
            )
        if self.init_conn_min > self.init_conn_max:
            raise ValueError(
                "invalid init_conn_min: must not exceed init_conn_max "
                f"(got {self.init_conn_min} > {self.init_conn_max})"
            )
        if self.init_conn_min < 0:
            raise ValueError(f"invalid init_conn_min: must be >= 0 (got {self.init_conn_min})")
        if self.init_require_valid and self.init_conn_min < shape.min_valid_connections:
            raise ValueError(
                "invalid init_conn_min: valid networks need at least "
                f"{shape.min_valid_connections} connections (got {self.init_conn_min})"
            )
        if self.pnsga_granularity not in ("generation", "comparison"):
            raise ValueError(
                "invalid pnsga_granularity: must be 'generation' or 'comparison' "
                f"(got {self.pnsga_granularity!r})"
            )


class Individual:
    """A genome plus its cached objective values and selection bookkeeping."""

    __slots__ = (
        "genome",
        "performance",
        "output_vector",
        "cost",
        "modularity",
        "diversity",
        "rank",
        "crowding",
    )

    def __init__(self, genome: NetworkGenome):
        self.genome = genome
        self.performance = 0.0
        self.output_vector: np.ndarray | None = None
        self.cost = 0.0
        self.modularity = 0.0
        self.diversity = 0.0
        self.rank = 0
        self.crowding = 0.0


class EvolutionContext:
    """Per-run helpers shared across generations: problem, caches, objectives."""

    def __init__(self, config: EvolutionConfig):
        config.validate()
        self.config = config
        self.problem = get_problem(config.problem)
        self.shape = config.shape()
        self.cache = MetricsCache()
        self.uses_cost = config.treatment in ("pcc", "pcc-nonmod")
        self.uses_modularity = config.treatment == "pcc-nonmod"
        names = ["performance"]
        if self.uses_cost:
            names.append("neg_cost")
        if self.uses_modularity:
            names.append("neg_modularity")
        names.append("diversity")
        self.objective_names = tuple(names)
        self.cost_index = names.index("neg_cost") if self.uses_cost else None

    def evaluate(self, ind: Individual) -> None:
        performance, trace = netmodel.evaluate_all(ind.genome, self.problem)
        ind.performance = performance
        ind.output_vector = trace[:, -1] > 0.0
        if self.uses_cost:
            ind.cost = self.cache.cost(ind.genome)
        if self.uses_modularity:
            ind.modularity = self.cache.modularity(ind.genome)

    def objective_matrix(self, population: list[Individual]) -> np.ndarray:
        cols = [np.array([ind.performance for ind in population])]
        if self.uses_cost:
            cols.append(np.array([-ind.cost for ind in population]))
        if self.uses_modularity:
            cols.append(np.array([-ind.modularity for ind in population]))
        cols.append(np.array([ind.diversity for ind in population]))
        return np.column_stack(cols)

    def sample_active(self, rng_objective: np.random.Generator) -> np.ndarray:
        """Draw this generation's active-objective mask (the cost objective
        participates with probability cost_probability)."""
        active = np.ones(len(self.objective_names), dtype=bool)
        if self.uses_cost:
            active[self.cost_index] = (
                rng_objective.random() < self.config.cost_probability
            )
        return active


def behavioral_diversity(individual: Individual, population: list[Individual]) -> float:
    """Mean normalized Hamming distance to every other member's output vector."""
    others = [ind for ind in population if ind is not individual]
    if not others:
        return 0.0
    v = individual.output_vector
    total = sum(np.count_nonzero(v != o.output_vector) for o in others)
    return total / (N_PATTERNS * len(others))


def _set_diversity(population: list[Individual]) -> None:
    """Fill .diversity for the whole pool in one vectorized pass."""
    n = len(population)
    if n < 2:
        for ind in population:
            ind.diversity = 0.0
        return
    v = np.stack([ind.output_vector for ind in population]).astype(np.float64)
    sums = v.sum(axis=1)
    colsum = v.sum(axis=0)
    # sum_j hamming(i, j) = n * s_i + sum_j s_j - 2 * v_i . colsum
    totals = n * sums + sums.sum() - 2.0 * (v @ colsum)
    for ind, t in zip(population, totals):
        ind.diversity = float(t) / (N_PATTERNS * (n - 1))


def mutate(
    genome: NetworkGenome, config: EvolutionConfig, rng: np.random.Generator
) -> NetworkGenome:
    """One round of mutation: maybe add a connection, maybe remove one, then
    per-node bias steps and per-connection weight steps.

    Steps that would leave the legal value sets (or hit the forbidden weight
    0) are discarded, leaving the value unchanged.
    """
    shape = genome.shape
    conns = list(genome.connections)
    if rng.random() < config.add_conn_rate:
        used = {(u, v) for u, v, _ in conns}
        free = [p for p in shape.all_pairs if p not in used]
        if free:
            u, v = free[int(rng.integers(len(free)))]
            conns.append((u, v, WEIGHT_VALUES[int(rng.integers(len(WEIGHT_VALUES)))]))
    if rng.random() < config.remove_conn_rate and conns:
        del conns[int(rng.integers(len(conns)))]
    biases = list(genome.biases)
    for i in range(len(biases)):
        if rng.random() < config.bias_mutation_rate:
            step = 1 if rng.random() < 0.5 else -1
            if biases[i] + step in BIAS_VALUES:
                biases[i] += step
    n = len(conns)
    if n:
        rate = min(1.0, config.weight_mutations_expected / n)
        for i in range(n):
            if rng.random() < rate:
                u, v, w = conns[i]
                step = 1 if rng.random() < 0.5 else -1
                if w + step in WEIGHT_VALUES:
                    conns[i] = (u, v, w + step)
    return NetworkGenome(shape, tuple(sorted(conns)), tuple(biases))


def _dominance_counts(obj: np.ndarray, mask: np.ndarray | None = None):
    """Pairwise dominance over the (optionally masked) objective columns."""
    data = obj if mask is None else obj[:, mask]
    ge = (data[:, None, :] >= data[None, :, :]).all(axis=2)
    gt = (data[:, None, :] > data[None, :, :]).any(axis=2)
    return ge & gt  # dom[i, j]: i dominates j


def nondominated_sort(
    population: list[Individual],
    objectives: np.ndarray,
    active: np.ndarray | None = None,
    dominates: np.ndarray | None = None,
) -> list[list[Individual]]:
    """Fast non-dominated sorting; sets .rank and returns the fronts in order.

    ``objectives`` is the (n, k) maximization matrix; ``active`` optionally
    masks columns out of the comparison.  A precomputed dominance matrix can
    be supplied instead (used for per-comparison objective sampling).
    """
    dom = dominates if dominates is not None else _dominance_counts(objectives, active)
    n_dominators = dom.sum(axis=0).astype(int)
    fronts: list[list[Individual]] = []
    remaining = np.arange(len(population))
    rank = 0
    while remaining.size:
        in_front = remaining[n_dominators[remaining] == 0]
        if in_front.size == 0:  # cyclic dominance (only possible under sampling)
            in_front = remaining
        front = []
        for i in in_front:
            population[i].rank = rank
            front.append(population[i])
        fronts.append(front)
        mask = np.ones(len(population), dtype=bool)
        mask[in_front] = False
        n_dominators -= dom[in_front].sum(axis=0).astype(int)
        remaining = remaining[mask[remaining]]
        rank += 1
    return fronts


def crowding_distance(
    front: list[Individual],
    objectives: np.ndarray,
    active: np.ndarray | None = None,
) -> np.ndarray:
    """NSGA-II crowding distance; sets .crowding and returns the values.

    Boundary individuals of each objective get infinity; interior ones sum
    the normalized gaps to their neighbors.  Objectives with zero spread are
    skipped.
    """
    n = len(front)
    data = objectives if active is None else objectives[:, active]
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
    else:
        for col in data.T:
            order = np.argsort(col, kind="stable")
            span = col[order[-1]] - col[order[0]]
            if span == 0:
                continue
            dist[order[0]] = dist[order[-1]] = np.inf
            gaps = (col[order[2:]] - col[order[:-2]]) / span
            dist[order[1:-1]] += gaps
    for ind, d in zip(front, dist):
        ind.crowding = float(d)
    return dist


def _select_survivors(
    merged: list[Individual],
    n_keep: int,
    context: EvolutionContext,
    active: np.ndarray,
    rng_objective: np.random.Generator | None = None,
) -> list[Individual]:
    obj = context.objective_matrix(merged)
    dominates = None
    if (
        context.config.pnsga_granularity == "comparison"
        and context.uses_cost
        and rng_objective is not None
    ):
        with_cost = _dominance_counts(obj)
        no_cost = np.ones(obj.shape[1], dtype=bool)
        no_cost[context.cost_index] = False
        without_cost = _dominance_counts(obj, no_cost)
        use_cost = (
            rng_objective.random((len(merged), len(merged)))
            < context.config.cost_probability
        )
        dominates = np.where(use_cost, with_cost, without_cost)
        active = np.ones(obj.shape[1], dtype=bool)
    fronts = nondominated_sort(merged, obj, active, dominates)
    survivors: list[Individual] = []
    index = {id(ind): i for i, ind in enumerate(merged)}
    for front in fronts:
        rows = np.array([index[id(ind)] for ind in front])
        crowding_distance(front, obj[rows], active)
        if len(survivors) + len(front) <= n_keep:
            survivors.extend(front)
        else:
            # Performance as tie-break among equal crowding keeps the best
            # performer alive even when a front holds several boundary points.
            by_crowding = sorted(front, key=lambda ind: (-ind.crowding, -ind.performance))
            survivors.extend(by_crowding[: n_keep - len(survivors)])
            break
    return survivors


def _tournament(
    population: list[Individual], rng: np.random.Generator
) -> Individual:
    n = len(population)
    a = population[int(rng.integers(n))]
    b = population[int(rng.integers(n))]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if rng.random() < 0.5 else b


def step_generation(
    population: list[Individual],
    config: EvolutionConfig,
    rng: np.random.Generator,
    context: EvolutionContext | None = None,
    rng_objective: np.random.Generator | None = None,
) -> list[Individual]:
    """One NSGA-II generation: tournaments, mutation, merged-pool selection.

    Whether the cost objective participates this generation is sampled from
    ``rng_objective`` (a separate stream, so runs with and without the cost
    objective share all other random decisions).
    """
    ctx = context or EvolutionContext(config)
    rng_obj = rng_objective or rng
    active = ctx.sample_active(rng_obj)
    n = len(population)
    offspring = []
    for _ in range(n):
        parent = _tournament(population, rng)
        child = Individual(mutate(parent.genome, config, rng))
        offspring.append(child)
    for child in offspring:
        ctx.evaluate(child)
    merged = population + offspring
    _set_diversity(merged)
    return _select_survivors(merged, n, ctx, active, rng_obj)


def init_population(
    config: EvolutionConfig,
    rng: np.random.Generator,
    context: EvolutionContext | None = None,
) -> list[Individual]:
    """Random starting population; connection counts are drawn uniformly from
    the configured range and clamped to the shape's maximum."""
    ctx = context or EvolutionContext(config)
    population = []
    for _ in range(config.pop_size):
        count = int(rng.integers(config.init_conn_min, config.init_conn_max + 1))
        count = min(count, ctx.shape.max_connections)
        genome = random_genome(ctx.shape, count, config.init_require_valid, rng)
        population.append(Individual(genome))
    return population


@dataclass
class TrialResult:
    """Per-generation series for the best network of each generation, plus the
    final best genome."""

    best_performance: np.ndarray
    hierarchy: np.ndarray
    modularity: np.ndarray
    cost: np.ndarray
    subproblems: np.ndarray
    best_genome: NetworkGenome
    solved_generation: int | None
    generations_run: int


def run_trial(
    config: EvolutionConfig,
    seed_genome: NetworkGenome | None = None,
    mutate_seed_copies: bool = True,
) -> TrialResult:
    """Run one full evolutionary trial from config.seed.

    With ``seed_genome`` the initial population is pop_size copies of that
    genome (each passed through one mutation round unless disabled).  With
    ``stop_on_perfect`` the loop ends as soon as some network scores 1.0.
    """
    ctx = EvolutionContext(config)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    rng_obj = np.random.Generator(np.random.PCG64(stable_seed(config.seed, "objectives")))
    if seed_genome is None:
        population = init_population(config, rng, ctx)
    else:
        population = []
        for _ in range(config.pop_size):
            genome = mutate(seed_genome, config, rng) if mutate_seed_copies else seed_genome
            population.append(Individual(genome))
    for ind in population:
        ctx.evaluate(ind)
    _set_diversity(population)
    _select_survivors(population, len(population), ctx, ctx.sample_active(rng_obj), rng_obj)

    series = {key: [] for key in ("perf", "hier", "mod", "cost", "sub")}
    sub_cache: dict[NetworkGenome, int] = {}

    def record(pop: list[Individual]) -> Individual:
        perfs = np.array([ind.performance for ind in pop])
        best_rows = np.flatnonzero(perfs == perfs.max())
        row = best_rows[0]
        if len(best_rows) > 1:
            row = best_rows[int(rng.integers(len(best_rows)))]
        best = pop[row]
        g = best.genome
        if g not in sub_cache:
            sub_cache[g] = solved_subproblems(g, ctx.problem)[0]
        series["perf"].append(best.performance)
        series["hier"].append(ctx.cache.hierarchy(g))
        series["mod"].append(ctx.cache.modularity(g))
        series["cost"].append(ctx.cache.cost(g))
        series["sub"].append(sub_cache[g])
        return best

    solved_generation = None
    best = record(population)
    if best.performance == 1.0:
        solved_generation = 0
    generations_run = 0
    for gen in range(1, config.generations + 1):
        if solved_generation is not None and config.stop_on_perfect:
            break
        population = step_generation(population, config, rng, ctx, rng_obj)
        generations_run = gen
        best = record(population)
        if solved_generation is None and best.performance == 1.0:
            solved_generation = gen
    return TrialResult(
        best_performance=np.array(series["perf"]),
        hierarchy=np.array(series["hier"]),
        modularity=np.array(series["mod"]),
        cost=np.array(series["cost"]),
        subproblems=np.array(series["sub"], dtype=int),
        best_genome=best.genome,
        solved_generation=solved_generation,
        generations_run=generations_run,
    )
