"""Structural and functional network metrics.

All structural metrics (hierarchy, modularity, wiring cost) look only at the
presence of connections, never their weights.  By default they operate on the
sub-network of nodes that have at least one incident connection, since evolved
genomes routinely leave hidden nodes unused.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ._kernels import kl_bisection_sweep, kl_partition_sweeps
from .netmodel import NetworkGenome, activate_all
from .problems import LogicProblem

_Q_EPS = 1e-12


@dataclass(frozen=True)
class StructuralGraph:
    """A directed graph of node ids (direction = information flow)."""

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degenerate(self) -> bool:
        """True when reaching/modularity metrics are undefined (then 0 is returned)."""
        return self.n < 2 or self.m == 0


def digraph(edges, nodes=()) -> StructuralGraph:
    """Build a StructuralGraph from an edge list plus optional extra nodes."""
    edges = tuple((u, v) for u, v in edges)
    node_set = set(nodes)
    for u, v in edges:
        node_set.add(u)
        node_set.add(v)
    return StructuralGraph(tuple(sorted(node_set)), edges)


def structural_graph(genome: NetworkGenome, include_isolated: bool = False) -> StructuralGraph:
    """The genome's connection graph, dropping isolated nodes unless asked not to."""
    edges = genome.edges
    if include_isolated:
        nodes = tuple(range(genome.shape.n_nodes))
    else:
        nodes = tuple(sorted({n for e in edges for n in e}))
    return StructuralGraph(nodes, edges)


def genome_hierarchy(genome: NetworkGenome, include_isolated: bool = False) -> float:
    """Hierarchy of a genome's connection structure.

    Node influence is measured from the output back toward the inputs (a node
    reaches the nodes whose activity feeds it), which makes the single output
    the root of the network: sparse funnel-shaped networks score close to 1,
    densely connected stacks score low.
    """
    graph = structural_graph(genome, include_isolated)
    reversed_edges = tuple((v, u) for u, v in graph.edges)
    return hierarchy(StructuralGraph(graph.nodes, reversed_edges))


def _out_adjacency(graph: StructuralGraph) -> dict:
    adj = {node: [] for node in graph.nodes}
    for u, v in graph.edges:
        adj[u].append(v)
    return adj


def _bfs_distances(adj: dict, source) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for nxt in adj[node]:
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


def local_reach(graph: StructuralGraph, node) -> float:
    """Distance-discounted fraction of the graph reachable from ``node``.

    Sum of 1/d over all nodes at finite positive out-distance d, divided by
    N - 1.  Returns 0 for graphs with fewer than two nodes.
    """
    if node not in set(graph.nodes):
        raise ValueError(f"node {node!r} not in graph")
    if graph.n < 2:
        return 0.0
    dist = _bfs_distances(_out_adjacency(graph), node)
    return sum(1.0 / d for d in dist.values() if d > 0) / (graph.n - 1)


def hierarchy(graph: StructuralGraph) -> float:
    """Global reaching centrality: mean shortfall of node influence from the max.

    0 for graphs where every node reaches every other in one step (perfectly
    homogeneous influence) and 1 for a star whose root reaches all leaves
    directly.  Degenerate graphs (fewer than two nodes) score 0.
    """
    if graph.n < 2:
        return 0.0
    adj = _out_adjacency(graph)
    reach = []
    for node in graph.nodes:
        dist = _bfs_distances(adj, node)
        reach.append(sum(1.0 / d for d in dist.values() if d > 0) / (graph.n - 1))
    cmax = max(reach)
    return sum(cmax - c for c in reach) / (graph.n - 1)


def _graph_arrays(graph: StructuralGraph):
    index = {node: i for i, node in enumerate(graph.nodes)}
    a = np.zeros((graph.n, graph.n))
    for u, v in graph.edges:
        a[index[u], index[v]] = 1.0
    kin = a.sum(axis=0)
    kout = a.sum(axis=1)
    return index, a, kin, kout


def modularity_q(graph: StructuralGraph, partition: dict) -> float:
    """Directed modularity of a partition.

    Q = (1/m) * sum over same-module pairs (i, j) of
    [A_ij - kin_i * kout_j / m], with A_ij = 1 iff there is an edge i -> j.
    Returns 0 for edgeless graphs.
    """
    if set(partition) != set(graph.nodes):
        raise ValueError("partition must label exactly the graph's nodes")
    if graph.m == 0:
        return 0.0
    index, a, kin, kout = _graph_arrays(graph)
    m = float(graph.m)
    labels = np.array([partition[node] for node in graph.nodes])
    same = labels[:, None] == labels[None, :]
    b = a - np.outer(kin, kout) / m
    return float(b[same].sum() / m)


def _leading_eigenvector(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    v = vecs[:, -1]
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        v = -v
    return v


def _split_gain(bgen: np.ndarray, s: np.ndarray, m: float) -> float:
    return float(s @ bgen @ s) / (2.0 * m)


def _partition_strength(bsym: np.ndarray, labels: np.ndarray) -> float:
    same = labels[:, None] == labels[None, :]
    return float(bsym[same].sum())


def _compact_labels(labels: np.ndarray) -> np.ndarray:
    out = np.empty(len(labels), dtype=int)
    seen: dict[int, int] = {}
    for i, lbl in enumerate(labels):
        seen.setdefault(int(lbl), len(seen))
        out[i] = seen[int(lbl)]
    return out


def _merge_pass(bsym: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Greedily merge module pairs while that increases Q."""
    labels = labels.copy()
    while True:
        uniq = np.unique(labels)
        if len(uniq) < 2:
            return labels
        onehot = (labels[:, None] == uniq[None, :]).astype(float)
        cross = onehot.T @ bsym @ onehot
        np.fill_diagonal(cross, -np.inf)
        a, b = np.unravel_index(int(np.argmax(cross)), cross.shape)
        if cross[a, b] <= _Q_EPS:
            return labels
        labels[labels == uniq[b]] = uniq[a]


def _split_vector(bsym: np.ndarray, group: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """KL-refined spectral split of one node group (+1/-1 per member)."""
    sub = bsym[np.ix_(group, group)]
    bgen = sub - np.diag(sub.sum(axis=1))
    v = _leading_eigenvector(bgen)
    s = np.where(v >= 0.0, 1.0, -1.0)
    return kl_bisection_sweep(bgen, s), bgen


def _bisection_phase(bsym: np.ndarray, labels: np.ndarray, m: float) -> np.ndarray:
    """Recursively try to split every current module by spectral bisection."""
    labels = _compact_labels(labels)
    next_label = labels.max() + 1
    queue = deque(np.flatnonzero(labels == c) for c in range(next_label))
    while queue:
        group = queue.popleft()
        if len(group) < 2:
            continue
        s, bgen = _split_vector(bsym, group)
        if _split_gain(bgen, s, m) <= _Q_EPS:
            continue
        plus = group[s > 0]
        minus = group[s < 0]
        if len(plus) == 0 or len(minus) == 0:
            continue
        labels[minus] = next_label
        next_label += 1
        queue.append(plus)
        queue.append(minus)
    return labels


def _polish(bsym: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Alternate move sweeps and merge passes until neither improves Q."""
    work = np.asarray(labels, dtype=int)
    val = _partition_strength(bsym, work)
    while True:
        work = _merge_pass(bsym, kl_partition_sweeps(bsym, np.asarray(work, dtype=np.int64)))
        new_val = _partition_strength(bsym, work)
        if new_val <= val + _Q_EPS:
            return work
        val = new_val


def _pair_resplit(bsym: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Escape pairwise local optima: merge two modules, split them afresh.

    For every module pair, the union is re-divided by a KL-refined spectral
    split; an improvement is kept and the scan restarts.  This finds regroupings
    that no sequence of improving single-node moves can reach.
    """
    labels = _compact_labels(labels)
    improved = True
    while improved:
        improved = False
        base_val = _partition_strength(bsym, labels)
        n_modules = labels.max() + 1
        for a in range(n_modules):
            for b in range(a + 1, n_modules):
                group = np.flatnonzero((labels == a) | (labels == b))
                s, _ = _split_vector(bsym, group)
                cand = labels.copy()
                cand[group] = a
                cand[group[s < 0]] = b
                if _partition_strength(bsym, cand) > base_val + _Q_EPS:
                    labels = _compact_labels(cand)
                    improved = True
                    break
            if improved:
                break
    return labels


def _refine_partition(bsym: np.ndarray, labels: np.ndarray, m: float) -> np.ndarray:
    """Polish the bisection result and a singleton start, then try pairwise
    re-splits; the best partition found wins."""
    n = len(labels)
    best = None
    best_val = -np.inf
    for start in (labels, np.arange(n)):
        work = _polish(bsym, start)
        val = _partition_strength(bsym, work)
        if val > best_val + _Q_EPS:
            best_val = val
            best = work
    while True:
        work = _polish(bsym, _pair_resplit(bsym, best))
        val = _partition_strength(bsym, work)
        if val <= best_val + _Q_EPS:
            return best
        best_val = val
        best = work


def detect_modules(graph: StructuralGraph) -> tuple[dict, float]:
    """Find a high-Q partition by recursive spectral bisection.

    Each candidate split comes from the leading eigenvector of the symmetrized
    modularity matrix (entries exactly zero go to the first half), is refined
    by Kernighan-Lin node moves, and is kept only if it increases Q.  A final
    global pass moves single nodes between modules and merges modules while Q
    improves.  Returns the partition and its Q (recomputed via modularity_q).
    """
    if graph.n == 0:
        return {}, 0.0
    if graph.degenerate:
        partition = {node: 0 for node in graph.nodes}
        return partition, modularity_q(graph, partition)
    _, a, kin, kout = _graph_arrays(graph)
    m = float(graph.m)
    b = a - np.outer(kin, kout) / m
    bsym = (b + b.T) / 2.0
    labels = _bisection_phase(bsym, np.zeros(graph.n, dtype=int), m)
    labels = _refine_partition(bsym, labels, m)
    partition = dict(zip(graph.nodes, (int(lbl) for lbl in _compact_labels(labels))))
    return partition, modularity_q(graph, partition)


@dataclass(frozen=True)
class NodeLayout:
    """Planar node positions used for wiring-cost measurements."""

    positions: dict

    def position(self, node) -> tuple[float, float]:
        return self.positions[node]


def solve_placement(edges, fixed: dict, default=None) -> dict:
    """Place free nodes to minimize the summed squared edge lengths.

    ``fixed`` maps node ids to immovable (x, y) positions; every other node
    appearing in ``edges`` is free.  The objective is quadratic and separable
    per axis, so each free node must sit at the mean of its neighbors; that
    linear system is solved exactly.  Free nodes in components with no fixed
    node get ``default(node)`` positions instead (their placement would be
    translation-invariant).
    """
    if default is None:
        default = lambda node: (0.0, 0.0)
    adj: dict = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    positions = {node: tuple(map(float, pos)) for node, pos in fixed.items()}
    seen = set()
    for start in sorted(adj):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for nxt in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    comp.append(nxt)
                    queue.append(nxt)
        free = sorted(n for n in comp if n not in fixed)
        if not free:
            continue
        if not any(n in fixed for n in comp):
            for node in free:
                positions[node] = tuple(map(float, default(node)))
            continue
        index = {node: i for i, node in enumerate(free)}
        lap = np.zeros((len(free), len(free)))
        rhs = np.zeros((len(free), 2))
        for node in free:
            i = index[node]
            for nbr in adj[node]:
                lap[i, i] += 1.0
                if nbr in index:
                    lap[i, index[nbr]] -= 1.0
                else:
                    rhs[i] += positions[nbr]
        sol = np.linalg.solve(lap, rhs)
        for node, i in index.items():
            positions[node] = (float(sol[i, 0]), float(sol[i, 1]))
    return positions


def optimal_layout(genome: NetworkGenome) -> NodeLayout:
    """Exact minimum-wiring placement of hidden nodes.

    Inputs and the output keep their fixed coordinates; connected hidden nodes
    are solved for; everything else (isolated nodes, unanchored components)
    defaults to x = 0 at a height equal to the node's layer index.
    """
    shape = genome.shape
    fixed = {}
    positions = {}
    for node in range(shape.n_nodes):
        pos = shape.fixed_position(node)
        if pos is not None:
            fixed[node] = pos
            positions[node] = pos
        else:
            positions[node] = (0.0, float(shape.layer_of(node)))
    solved = solve_placement(
        genome.edges, fixed, default=lambda n: (0.0, float(shape.layer_of(n)))
    )
    positions.update(solved)
    return NodeLayout(positions)


def connection_cost(genome: NetworkGenome) -> float:
    """Summed squared connection lengths under the optimal layout."""
    if not genome.connections:
        return 0.0
    layout = optimal_layout(genome)
    total = 0.0
    for u, v in genome.edges:
        (xu, yu), (xv, yv) = layout.positions[u], layout.positions[v]
        total += (xu - xv) ** 2 + (yu - yv) ** 2
    return total


def _separable(signal: np.ndarray, truth: np.ndarray) -> bool:
    hi = signal[truth]
    lo = signal[~truth]
    if hi.size == 0 or lo.size == 0:
        return True
    return bool(hi.min() > lo.max() or lo.min() > hi.max())


def _candidate_signals(genome: NetworkGenome, trace: np.ndarray) -> list[np.ndarray]:
    """Candidate sub-problem solvers in priority order.

    Single non-input nodes first (by node id), then summed outputs of every
    same-layer group of two or more hidden/output nodes (layer by layer,
    smaller groups first, lexicographic within a size).
    """
    shape = genome.shape
    signals = [trace[:, node] for node in range(shape.sizes[0], shape.n_nodes)]
    for layer in range(1, shape.n_layers):
        nodes = list(shape.layer_nodes(layer))
        for size in range(2, len(nodes) + 1):
            for group in itertools.combinations(nodes, size):
                signals.append(trace[:, list(group)].sum(axis=1))
    return signals


def solved_subproblems(
    genome: NetworkGenome,
    problem: LogicProblem,
    trace: np.ndarray | None = None,
    include_root: bool = False,
) -> tuple[int, tuple[bool, ...]]:
    """How many of the problem's sub-gates some part of the network computes.

    A sub-problem counts as solved when a single non-input node, or the
    summed output of a group of same-layer nodes, takes strictly higher
    values on all patterns where the gate is True than on all patterns where
    it is False (or vice versa).  Each sub-problem is checked against the
    candidates in a fixed priority order and counted at most once.
    """
    if trace is None:
        trace = activate_all(genome)
    signals = _candidate_signals(genome, trace)
    flags = []
    for sub in problem.subproblems(include_root):
        flags.append(any(_separable(sig, sub.truth) for sig in signals))
    return sum(flags), tuple(flags)


@dataclass(frozen=True)
class MetricsReport:
    """All per-network metrics in one record."""

    hierarchy: float
    modularity: float
    partition: dict
    cost: float
    layout: NodeLayout
    subproblems_solved: int
    subproblem_fraction: float
    degenerate: bool


def compute_metrics(
    genome: NetworkGenome,
    problem: LogicProblem,
    trace: np.ndarray | None = None,
    include_isolated: bool = False,
    include_root_subproblem: bool = False,
) -> MetricsReport:
    """Hierarchy, modularity, wiring cost, and sub-problems solved for a genome."""
    graph = structural_graph(genome, include_isolated)
    partition, q = detect_modules(graph)
    solved, flags = solved_subproblems(genome, problem, trace, include_root_subproblem)
    return MetricsReport(
        hierarchy=genome_hierarchy(genome, include_isolated),
        modularity=q,
        partition=partition,
        cost=connection_cost(genome),
        layout=optimal_layout(genome),
        subproblems_solved=solved,
        subproblem_fraction=solved / len(flags),
        degenerate=graph.degenerate,
    )


class MetricsCache:
    """Memoizes structure-only metrics keyed by a genome's edge set.

    Hierarchy, modularity, and wiring cost ignore weights and biases, so all
    genomes sharing a connection topology share these values.  The cache is
    transparent: results are identical with or without it.
    """

    def __init__(self, include_isolated: bool = False, max_entries: int = 200_000):
        self.include_isolated = include_isolated
        self.max_entries = max_entries
        self._table: dict[bytes, dict] = {}

    def _entry(self, genome: NetworkGenome) -> dict:
        flat = bytearray()
        for u, v, _ in genome.connections:
            flat.append(u)
            flat.append(v)
        flat.extend(genome.shape.sizes)
        key = bytes(flat)
        entry = self._table.get(key)
        if entry is None:
            if len(self._table) >= self.max_entries:
                self._table.clear()
            entry = {}
            self._table[key] = entry
        return entry

    def hierarchy(self, genome: NetworkGenome) -> float:
        entry = self._entry(genome)
        if "h" not in entry:
            entry["h"] = genome_hierarchy(genome, self.include_isolated)
        return entry["h"]

    def modularity(self, genome: NetworkGenome) -> float:
        entry = self._entry(genome)
        if "q" not in entry:
            _, entry["q"] = detect_modules(structural_graph(genome, self.include_isolated))
        return entry["q"]

    def cost(self, genome: NetworkGenome) -> float:
        entry = self._entry(genome)
        if "c" not in entry:
            entry["c"] = connection_cost(genome)
        return entry["c"]
