"""MAP-Elites search over the (modularity, hierarchy) feature plane.

The archive is a fixed grid over [0, 1] x [0, 1]; each cell keeps the
highest-performing genome whose structural features fall into it.  The search
seeds the grid with random genomes, then repeatedly mutates the elite of a
random occupied cell.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import netmodel
from .evolution import EvolutionConfig, mutate
from .metrics import MetricsCache
from .netmodel import NetworkGenome, random_genome, save_genome
from .problems import LogicProblem, get_problem

DEFAULT_BIN_WIDTH = 0.05
DEFAULT_INITIAL_BATCH = 1000


def feature_bin(
    modularity: float, hierarchy: float, bin_width: float = DEFAULT_BIN_WIDTH
) -> tuple[int, int]:
    """Grid cell of a feature pair: floor division clamped into the grid, so
    a feature of exactly 1.0 lands in the last bin and negative modularity in
    bin 0."""
    n_bins = round(1.0 / bin_width)
    row = min(max(int(np.floor(modularity / bin_width)), 0), n_bins - 1)
    col = min(max(int(np.floor(hierarchy / bin_width)), 0), n_bins - 1)
    return row, col


@dataclass
class EliteRecord:
    genome: NetworkGenome
    performance: float
    modularity: float
    hierarchy: float


@dataclass
class EliteArchive:
    """Best-performing genome per (modularity, hierarchy) cell."""

    bin_width: float = DEFAULT_BIN_WIDTH
    cells: dict = field(default_factory=dict)  # (row, col) -> EliteRecord
    _order: list = field(default_factory=list)  # occupied cells, insertion order

    @property
    def n_bins(self) -> int:
        return round(1.0 / self.bin_width)

    def offer(self, record: EliteRecord) -> tuple[tuple[int, int], bool]:
        """Place a candidate; it wins its cell only when strictly better."""
        cell = feature_bin(record.modularity, record.hierarchy, self.bin_width)
        incumbent = self.cells.get(cell)
        if incumbent is None:
            self.cells[cell] = record
            self._order.append(cell)
            return cell, True
        if record.performance > incumbent.performance:
            self.cells[cell] = record
            return cell, True
        return cell, False

    def random_occupied_cell(self, rng: np.random.Generator) -> tuple[int, int]:
        return self._order[int(rng.integers(len(self._order)))]

    def best_performance(self) -> float:
        return max(rec.performance for rec in self.cells.values())


def run_map_elites(
    problem: LogicProblem | str,
    budget: int,
    config: EvolutionConfig,
    rng: np.random.Generator,
    initial_batch: int = DEFAULT_INITIAL_BATCH,
    bin_width: float = DEFAULT_BIN_WIDTH,
    batch_size: int = 1,
    replacement_log: list | None = None,
) -> EliteArchive:
    """Fill an archive with ``budget`` evaluations.

    The first ``initial_batch`` evaluations come from random genomes; after
    that each step picks a uniformly random occupied cell, mutates its elite,
    and offers the result to the grid.  With ``batch_size`` > 1 the cell picks
    of a batch happen before its mutations and evaluations, replacements are
    applied in pick order, and a batch of 1 reproduces the sequential search
    exactly.
    """
    if isinstance(problem, str):
        problem = get_problem(problem)
    if budget < initial_batch:
        raise ValueError(
            f"budget ({budget}) must cover the initial batch ({initial_batch})"
        )
    shape = config.shape()
    cache = MetricsCache()
    archive = EliteArchive(bin_width=bin_width)
    evaluations = 0

    def measure(genome: NetworkGenome) -> EliteRecord:
        performance, _ = netmodel.evaluate_all(genome, problem)
        return EliteRecord(
            genome=genome,
            performance=performance,
            modularity=cache.modularity(genome),
            hierarchy=cache.hierarchy(genome),
        )

    def offer(record: EliteRecord) -> None:
        nonlocal evaluations
        old = archive.cells.get(feature_bin(record.modularity, record.hierarchy, bin_width))
        cell, replaced = archive.offer(record)
        if replaced and replacement_log is not None:
            replacement_log.append(
                (
                    evaluations,
                    cell,
                    old.performance if old is not None else None,
                    record.performance,
                )
            )
        evaluations += 1

    for _ in range(initial_batch):
        count = int(rng.integers(config.init_conn_min, config.init_conn_max + 1))
        count = min(count, shape.max_connections)
        offer(measure(random_genome(shape, count, config.init_require_valid, rng)))
    while evaluations < budget:
        chunk = min(batch_size, budget - evaluations)
        parents = [
            archive.cells[archive.random_occupied_cell(rng)].genome
            for _ in range(chunk)
        ]
        children = [mutate(parent, config, rng) for parent in parents]
        for child in children:
            offer(measure(child))
    return archive


def write_archive_csv(archive: EliteArchive, path) -> None:
    """One row per occupied cell: row, col, modularity, hierarchy, performance."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col", "modularity", "hierarchy", "performance"])
        for (row, col), rec in sorted(archive.cells.items()):
            writer.writerow(
                [
                    row,
                    col,
                    repr(float(rec.modularity)),
                    repr(float(rec.hierarchy)),
                    repr(float(rec.performance)),
                ]
            )


def write_archive_genomes(archive: EliteArchive, out_dir) -> None:
    for (row, col), rec in sorted(archive.cells.items()):
        save_genome(rec.genome, f"{out_dir}/elite_{row}_{col}.json")
