"""Census of random valid networks across the whole connection-count range.

For each connection count (from the minimum for validity up to fully
connected) a batch of random valid genomes is generated and measured, which
maps how wiring cost relates to hierarchy and modularity in the absence of
any selection.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .metrics import MetricsCache
from .netmodel import LayerShape, random_genome
from .seeds import stable_seed


@dataclass(frozen=True)
class SampleRecord:
    conn_count: int
    cost: float
    hierarchy: float
    modularity: float


def _sample_one_count(args) -> list[SampleRecord]:
    sizes, count, per_count, master_seed = args
    shape = LayerShape(sizes)
    rng = np.random.Generator(np.random.PCG64(stable_seed(master_seed, "sample", count)))
    cache = MetricsCache()
    records = []
    for _ in range(per_count):
        genome = random_genome(shape, count, True, rng)
        records.append(
            SampleRecord(
                conn_count=count,
                cost=cache.cost(genome),
                hierarchy=cache.hierarchy(genome),
                modularity=cache.modularity(genome),
            )
        )
    return records


def sample_networks(
    shape: LayerShape,
    per_count: int = 20000,
    count_range: tuple[int, int] = (11, 58),
    seed: int = 0,
    workers: int = 1,
) -> list[SampleRecord]:
    """Generate and measure ``per_count`` random valid genomes per connection
    count.

    Each count draws from its own seed stream derived from the master seed,
    so the output is identical for any worker count.  Records are ordered by
    count, then by draw index.
    """
    lo, hi = count_range
    if lo < shape.min_valid_connections or hi > shape.max_connections or lo > hi:
        raise ValueError(
            f"count_range must lie within [{shape.min_valid_connections}, "
            f"{shape.max_connections}]"
        )
    if per_count < 1:
        raise ValueError("per_count must be at least 1")
    jobs = [(shape.sizes, count, per_count, seed) for count in range(lo, hi + 1)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_sample_one_count, jobs))
    else:
        batches = [_sample_one_count(job) for job in jobs]
    return [rec for batch in batches for rec in batch]


def write_samples_csv(records: list[SampleRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["conn_count", "cost", "hierarchy", "modularity"])
        for rec in records:
            writer.writerow(
                [
                    rec.conn_count,
                    repr(float(rec.cost)),
                    repr(float(rec.hierarchy)),
                    repr(float(rec.modularity)),
                ]
            )
