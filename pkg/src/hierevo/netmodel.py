"""Layered feedforward network genomes: structure, activation, serialization.

A genome is a weighted digraph over a fixed layer stack (8 inputs, hidden
layers, a single output).  Connections only link consecutive layers, weights
come from a small integer set, and every hidden/output node carries an
integer bias.  Activation is tanh with a steep slope, so node outputs are
close to binary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .problems import INPUT_PATTERNS, N_INPUTS, LogicProblem

WEIGHT_VALUES = (-2, -1, 1, 2)
BIAS_VALUES = (-2, -1, 0, 1, 2)
ACTIVATION_SLOPE = 20.0

_PATTERNS_F = INPUT_PATTERNS.astype(np.float64)


class GenomeError(ValueError):
    """Raised for structurally invalid genomes or documents."""


@dataclass(frozen=True)
class LayerShape:
    """Node counts per layer, inputs first and the single output last."""

    sizes: tuple[int, ...] = (8, 4, 4, 2, 1)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) < 2:
            raise GenomeError("shape needs at least an input and an output layer")
        if sizes[0] != N_INPUTS:
            raise GenomeError(f"first layer must have {N_INPUTS} nodes, got {sizes[0]}")
        if sizes[-1] != 1:
            raise GenomeError(f"last layer must have 1 node, got {sizes[-1]}")
        if any(s < 1 for s in sizes):
            raise GenomeError("every layer needs at least one node")

    @property
    def n_layers(self) -> int:
        return len(self.sizes)

    @property
    def n_nodes(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Global id of the first node in each layer."""
        return _offsets(self.sizes)

    def layer_of(self, node: int) -> int:
        table = _layer_table(self.sizes)
        if not 0 <= node < len(table):
            raise GenomeError(f"node id {node} out of range")
        return table[node]

    def layer_nodes(self, layer: int) -> range:
        off = self.offsets[layer]
        return range(off, off + self.sizes[layer])

    @property
    def output_node(self) -> int:
        return self.n_nodes - 1

    @property
    def max_connections(self) -> int:
        return sum(a * b for a, b in zip(self.sizes, self.sizes[1:]))

    @property
    def min_valid_connections(self) -> int:
        """Fewest connections that can still route every input to the output."""
        return self.sizes[0] + (self.n_layers - 2)

    @property
    def all_pairs(self) -> tuple[tuple[int, int], ...]:
        """Every legal (from, to) pair, sorted."""
        return _all_pairs(self.sizes)

    def fixed_position(self, node: int) -> tuple[float, float] | None:
        """Spatial coordinates of input/output nodes; None for hidden nodes.

        Inputs sit on the x axis at {-3.5 .. 3.5}; the output sits on the
        centerline at a height equal to its layer index (4 for the default
        stack, 5 with an extra hidden layer).
        """
        if node < self.sizes[0]:
            return (node - (self.sizes[0] - 1) / 2.0, 0.0)
        if node == self.output_node:
            return (0.0, float(self.n_layers - 1))
        return None


@lru_cache(maxsize=None)
def _offsets(sizes: tuple[int, ...]) -> tuple[int, ...]:
    out = []
    total = 0
    for s in sizes:
        out.append(total)
        total += s
    return tuple(out)


@lru_cache(maxsize=None)
def _layer_table(sizes: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(layer for layer, size in enumerate(sizes) for _ in range(size))


@lru_cache(maxsize=None)
def _all_pairs(sizes: tuple[int, ...]) -> tuple[tuple[int, int], ...]:
    shape = LayerShape(sizes)
    pairs = []
    for layer in range(shape.n_layers - 1):
        for u in shape.layer_nodes(layer):
            for v in shape.layer_nodes(layer + 1):
                pairs.append((u, v))
    return tuple(sorted(pairs))


@dataclass(frozen=True)
class NetworkGenome:
    """Immutable network genome.

    ``connections`` is a sorted tuple of (from_node, to_node, weight);
    ``biases`` holds one value per non-input node, ordered by node id.
    """

    shape: LayerShape
    connections: tuple[tuple[int, int, int], ...]
    biases: tuple[int, ...]

    def bias_of(self, node: int) -> int:
        return self.biases[node - self.shape.sizes[0]]

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u, v, _ in self.connections)


def make_genome(shape: LayerShape, connections, biases) -> NetworkGenome:
    """Build a genome with normalized ordering and full invariant checks."""
    genome = NetworkGenome(
        shape,
        tuple(sorted((int(u), int(v), int(w)) for u, v, w in connections)),
        tuple(int(b) for b in biases),
    )
    validate_genome(genome)
    return genome


def validate_genome(genome: NetworkGenome) -> None:
    """Raise GenomeError if any structural invariant is violated."""
    shape = genome.shape
    n_biased = shape.n_nodes - shape.sizes[0]
    if len(genome.biases) != n_biased:
        raise GenomeError(
            f"expected {n_biased} biases, got {len(genome.biases)}"
        )
    for b in genome.biases:
        if b not in BIAS_VALUES:
            raise GenomeError(f"bias out of range: {b}")
    if len(genome.connections) > shape.max_connections:
        raise GenomeError("more connections than the shape allows")
    seen = set()
    for u, v, w in genome.connections:
        if w not in WEIGHT_VALUES:
            raise GenomeError(f"weight out of range: {w}")
        if not (0 <= u < shape.n_nodes and 0 <= v < shape.n_nodes):
            raise GenomeError(f"connection ({u}, {v}) references unknown node")
        if shape.layer_of(v) != shape.layer_of(u) + 1:
            raise GenomeError(
                f"connection ({u}, {v}) links non-consecutive layers"
            )
        if (u, v) in seen:
            raise GenomeError(f"duplicate connection ({u}, {v})")
        seen.add((u, v))


def _layer_matrices(genome: NetworkGenome):
    """Per-layer weight matrix (out x in) and bias vector."""
    shape = genome.shape
    sizes = shape.sizes
    offsets = _offsets(sizes)
    table = _layer_table(sizes)
    biases = np.asarray(genome.biases, dtype=np.float64)
    mats = []
    start = 0
    for layer in range(len(sizes) - 1):
        w = np.zeros((sizes[layer + 1], sizes[layer]))
        mats.append((w, biases[start : start + sizes[layer + 1]]))
        start += sizes[layer + 1]
    for u, v, w in genome.connections:
        layer = table[u]
        mats[layer][0][v - offsets[layer + 1], u - offsets[layer]] = w
    return mats


def activate_all(genome: NetworkGenome, slope: float = ACTIVATION_SLOPE) -> np.ndarray:
    """Node outputs for all 256 input patterns, shape (256, n_nodes).

    Propagates layer by layer; each node outputs tanh(slope * (sum of
    weighted inputs + bias)), so a node with no incoming connections
    outputs tanh(slope * bias).
    """
    x = _PATTERNS_F
    outs = [x]
    for w, b in _layer_matrices(genome):
        x = np.tanh(slope * (x @ w.T + b))
        outs.append(x)
    return np.concatenate(outs, axis=1)


def activate(genome: NetworkGenome, input_pattern, slope: float = ACTIVATION_SLOPE) -> np.ndarray:
    """Node outputs for a single 8-bit input pattern, shape (n_nodes,)."""
    bits = np.asarray(input_pattern, dtype=np.float64)
    if bits.shape != (N_INPUTS,) or not np.isin(bits, (0.0, 1.0)).all():
        raise GenomeError("input pattern must have exactly 8 entries in {0, 1}")
    x = bits[None, :]
    outs = [x]
    for w, b in _layer_matrices(genome):
        x = np.tanh(slope * (x @ w.T + b))
        outs.append(x)
    return np.concatenate(outs, axis=1)[0]


def evaluate_all(
    genome: NetworkGenome, problem: LogicProblem, slope: float = ACTIVATION_SLOPE
) -> tuple[float, np.ndarray]:
    """Performance over all 256 patterns plus the full activation trace.

    The network's answer is True iff its output is >= 0; performance is the
    fraction of patterns where that answer matches the problem.
    """
    trace = activate_all(genome, slope)
    answers = trace[:, -1] >= 0.0
    performance = float(np.count_nonzero(answers == problem.truth_vector)) / len(answers)
    return performance, trace


def is_valid(genome: NetworkGenome) -> bool:
    """True iff every input node has a directed path to the output node."""
    preds: dict[int, list[int]] = {}
    for u, v, _ in genome.connections:
        preds.setdefault(v, []).append(u)
    reached = {genome.shape.output_node}
    stack = [genome.shape.output_node]
    while stack:
        node = stack.pop()
        for u in preds.get(node, ()):
            if u not in reached:
                reached.add(u)
                stack.append(u)
    return all(i in reached for i in range(genome.shape.sizes[0]))


def random_genome(
    shape: LayerShape,
    conn_count: int,
    require_valid: bool,
    rng: np.random.Generator,
) -> NetworkGenome:
    """Random genome with exactly ``conn_count`` connections.

    Weights and biases are drawn uniformly from their value sets.  With
    ``require_valid``, a relay chain is routed first (one randomly chosen
    relay node per hidden layer, all inputs wired to the first relay) so the
    result always has a path from every input to the output; the remaining
    connections are placed uniformly at random among the unused pairs.
    """
    if not 0 <= conn_count <= shape.max_connections:
        raise GenomeError(
            f"conn_count {conn_count} outside [0, {shape.max_connections}]"
        )
    if require_valid and conn_count < shape.min_valid_connections:
        raise GenomeError(
            f"conn_count {conn_count} below the minimum of "
            f"{shape.min_valid_connections} needed for a valid network"
        )
    pairs: list[tuple[int, int]] = []
    if require_valid:
        relays = [
            int(rng.integers(shape.sizes[layer])) + shape.offsets[layer]
            for layer in range(1, shape.n_layers - 1)
        ]
        chain = relays + [shape.output_node]
        pairs.extend((i, chain[0]) for i in range(shape.sizes[0]))
        pairs.extend(zip(chain, chain[1:]))
    used = set(pairs)
    free = [p for p in shape.all_pairs if p not in used]
    if conn_count > len(pairs):
        extra = rng.choice(len(free), size=conn_count - len(pairs), replace=False)
        pairs.extend(free[i] for i in sorted(extra))
    pairs.sort()
    weights = rng.integers(len(WEIGHT_VALUES), size=len(pairs))
    connections = tuple(
        (u, v, WEIGHT_VALUES[w]) for (u, v), w in zip(pairs, weights)
    )
    n_biased = shape.n_nodes - shape.sizes[0]
    biases = tuple(
        BIAS_VALUES[i] for i in rng.integers(len(BIAS_VALUES), size=n_biased)
    )
    return NetworkGenome(shape, connections, biases)


def serialize(genome: NetworkGenome) -> dict:
    """JSON-ready document: shape, connection triples, and a bias map."""
    return {
        "shape": list(genome.shape.sizes),
        "connections": [[u, v, w] for u, v, w in genome.connections],
        "biases": {
            str(node): genome.bias_of(node)
            for node in range(genome.shape.sizes[0], genome.shape.n_nodes)
        },
    }


def deserialize(doc: dict) -> NetworkGenome:
    """Parse and fully validate a genome document."""
    try:
        shape = LayerShape(tuple(doc["shape"]))
        raw_conns = [tuple(c) for c in doc["connections"]]
        raw_biases = dict(doc["biases"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GenomeError(f"malformed genome document: {exc}") from exc
    biases = []
    for node in range(shape.sizes[0], shape.n_nodes):
        key = str(node)
        if key not in raw_biases:
            raise GenomeError(f"missing bias for node {node}")
        biases.append(int(raw_biases[key]))
    if len(raw_biases) != len(biases):
        raise GenomeError("bias map names nodes outside the hidden/output layers")
    for c in raw_conns:
        if len(c) != 3:
            raise GenomeError(f"connection entry {c!r} is not a [from, to, weight] triple")
    return make_genome(shape, raw_conns, biases)


def save_genome(genome: NetworkGenome, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(serialize(genome), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_genome(path) -> NetworkGenome:
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize(json.load(fh))
