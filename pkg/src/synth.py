"""Synthetic graphs, planted patterns and the recovery/scaling protocols.

A planted pattern adds ``k`` fresh nodes to a hub entity type and to each
satellite type, links every new hub node to every new satellite node, and
then adds background edges between new and existing nodes so that each
existing node keeps its expected fraction of links into the grown partition.
"""

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from src.exceptions import EmbedError, MccsError
from src.graph import EdgeType, KPartiteGraph, NodeRef, build_graph
from src.maxent import fit
from src.miner import MinerOptions, mine
from src.schema import MultiRelationalDatabase
from src.score import RankedPattern, RankOptions, rank

logger = logging.getLogger(__name__)

PLANTED_PREFIX = "planted"
_DRAW_BLOCK = 1 << 22


@dataclass(frozen=True, slots=True)
class EmbedSpec:
    """Where and how large to plant a pattern.

    Attributes:
        k: Number of new nodes per selected entity type.
        hub_type: Entity type linked to every satellite type.
        satellite_types: The other selected entity types.
        seed: Seed of the background-edge generator.
    """

    k: int
    hub_type: str
    satellite_types: tuple[str, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise EmbedError(f"k must be at least 1, got {self.k}")
        if not self.satellite_types:
            raise EmbedError("at least one satellite type is required")
        selected = [self.hub_type, *self.satellite_types]
        if len(set(selected)) != len(selected):
            raise EmbedError("hub and satellite types must be distinct")


@dataclass(frozen=True)
class GroundTruth:
    """The planted nodes and edges.

    Attributes:
        labels: Planted labels per entity type name.
        edges: Planted edges as (relationship, left label, right label).
        nodes: Planted nodes in the augmented graph.
    """

    labels: dict[str, tuple[str, ...]]
    edges: tuple[tuple[str, str, str], ...]
    nodes: frozenset[NodeRef] = field(default_factory=frozenset)

    def to_record(self) -> dict[str, object]:
        """JSON-ready form."""
        return {
            "nodes": {name: list(labels) for name, labels in self.labels.items()},
            "edges": [
                {"type": rel, "left": left, "right": right}
                for rel, left, right in self.edges
            ],
        }


def _fresh_labels(existing: Sequence[str], entity_type: str, k: int) -> list[str]:
    taken = set(existing)
    labels = []
    width = len(str(k - 1))
    for i in range(k):
        label = f"{PLANTED_PREFIX}-{entity_type}-{i:0{width}d}"
        while label in taken:
            label += "_"
        taken.add(label)
        labels.append(label)
    return labels


def embed(graph: KPartiteGraph, spec: EmbedSpec) -> tuple[KPartiteGraph, GroundTruth]:
    """Plant a complete pattern with expectation-preserving background edges.

    Raises:
        EmbedError: If a type is unknown or a satellite is not linked to the hub.
    """
    try:
        hub = graph.type_index(spec.hub_type)
        satellites = [graph.type_index(name) for name in spec.satellite_types]
    except MccsError as e:
        raise EmbedError(str(e)) from e
    for s in satellites:
        if graph.edge_type_between(hub, s) is None:
            raise EmbedError(
                f"'{graph.entity_types[s]}' shares no relationship type with "
                f"hub '{spec.hub_type}'"
            )

    selected = {hub, *satellites}
    rng = np.random.default_rng(spec.seed)
    base = graph.to_database()
    new_labels = {
        t: _fresh_labels(graph.partitions[t], graph.entity_types[t], spec.k)
        for t in sorted(selected)
    }

    instances = {name: list(pairs) for name, pairs in base.instances.items()}
    planted: list[tuple[str, str, str]] = []
    for et in graph.edge_types:
        pairs = instances[et.name]
        if et.left in selected and et.right in selected:
            for a in new_labels[et.left]:
                for b in new_labels[et.right]:
                    pairs.append((a, b))
                    planted.append((et.name, a, b))
        pairs.extend(_background(graph, et, new_labels, rng))

    domains = {
        name: tuple(graph.partitions[t]) + tuple(new_labels.get(t, ()))
        for t, name in enumerate(graph.entity_types)
    }
    augmented = build_graph(
        MultiRelationalDatabase(
            entity_types=base.entity_types,
            relationship_types=base.relationship_types,
            domains=domains,
            instances={name: tuple(pairs) for name, pairs in instances.items()},
        )
    )
    truth = GroundTruth(
        labels={
            graph.entity_types[t]: tuple(labels) for t, labels in new_labels.items()
        },
        edges=tuple(planted),
        nodes=frozenset(
            augmented.lookup(graph.entity_types[t], label)
            for t, labels in new_labels.items()
            for label in labels
        ),
    )
    logger.info(
        "Planted %d nodes and %d edges (graph now %d edges)",
        len(truth.nodes),
        len(planted),
        augmented.edge_count,
    )
    return augmented, truth


def _background(
    graph: KPartiteGraph,
    et: EdgeType,
    new_labels: dict[int, list[str]],
    rng: np.random.Generator,
) -> list[tuple[str, str]]:
    """Bernoulli edges between existing nodes on one side and new nodes on the other.

    An existing node links to each new node with probability equal to its
    degree divided by the size of the opposite partition before planting.
    """
    left_deg, right_deg = graph.degrees(et.name)
    left_labels = graph.partitions[et.left]
    right_labels = graph.partitions[et.right]
    out: list[tuple[str, str]] = []

    if et.right in new_labels and right_labels:
        prob = left_deg / len(right_labels)
        hits = rng.random((len(left_labels), len(new_labels[et.right]))) < prob[:, None]
        for i, j in np.argwhere(hits):
            out.append((left_labels[i], new_labels[et.right][j]))
    if et.left in new_labels and left_labels:
        prob = right_deg / len(left_labels)
        hits = rng.random((len(right_labels), len(new_labels[et.left]))) < prob[:, None]
        for j, i in np.argwhere(hits):
            out.append((new_labels[et.left][i], right_labels[j]))
    return out


def rank_of_embedded(ranked: Sequence[RankedPattern], truth: GroundTruth) -> int | None:
    """Best rank among patterns that contain every planted node."""
    best: int | None = None
    for item in ranked:
        if truth.nodes <= item.pattern.node_set and (best is None or item.rank < best):
            best = item.rank
    return best


def random_graph(
    sizes: Sequence[int],
    topology: Sequence[tuple[int, int]],
    density: float | Sequence[float],
    seed: int = 0,
    names: Sequence[str] | None = None,
) -> KPartiteGraph:
    """Random K-partite graph with independent edges per edge type.

    Args:
        sizes: Number of nodes per entity type.
        topology: Pairs of entity type ordinals carrying an edge type.
        density: Edge probability, shared or per edge type.
        seed: Generator seed.
        names: Entity type names; defaults to ``t0``, ``t1``, ...
    """
    names = list(names) if names is not None else [f"t{t}" for t in range(len(sizes))]
    densities = (
        [float(density)] * len(topology)
        if isinstance(density, int | float)
        else [float(d) for d in density]
    )
    if len(densities) != len(topology):
        raise ValueError("one density per edge type is required")
    if any(not 0.0 <= d <= 1.0 for d in densities):
        raise ValueError("densities must lie in [0, 1]")
    pairs = [frozenset(pair) for pair in topology]
    if any(len(pair) != 2 for pair in pairs) or len(set(pairs)) != len(pairs):
        raise ValueError("each edge type needs its own pair of distinct types")

    partitions = []
    for name, size in zip(names, sizes, strict=True):
        width = len(str(max(size - 1, 0)))
        partitions.append([f"{name}_{i:0{width}d}" for i in range(size)])

    rng = np.random.default_rng(seed)
    edge_types = []
    edges: dict[str, list[tuple[int, int]]] = {}
    for (a, b), d in zip(topology, densities, strict=True):
        et = EdgeType(f"{names[a]}-{names[b]}", a, b)
        edge_types.append(et)
        hits: list[tuple[int, int]] = []
        # Row blocks draw the same stream as one full matrix would.
        block = max(1, _DRAW_BLOCK // max(sizes[b], 1))
        for start in range(0, sizes[a], block):
            rows = min(block, sizes[a] - start)
            found = np.argwhere(rng.random((rows, sizes[b])) < d)
            hits.extend((start + int(i), int(j)) for i, j in found)
        edges[et.name] = hits
    return KPartiteGraph(names, partitions, edge_types, edges)


def sample_subgraph(
    graph: KPartiteGraph, hub_type: str, fraction: float, seed: int = 0
) -> KPartiteGraph:
    """Keep a random fraction of hub nodes plus every node linked to them.

    Samples drawn with one seed are nested as the fraction grows.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    hub = graph.type_index(hub_type)
    n_hub = len(graph.partitions[hub])
    order = np.random.default_rng(seed).permutation(n_hub)
    kept_hubs = order[: round(fraction * n_hub)]

    keep = {NodeRef(hub, int(i)) for i in kept_hubs}
    for ref in list(keep):
        keep.update(graph.neighbours(ref))

    mrd = graph.to_database()
    kept_labels = {
        name: tuple(
            label
            for i, label in enumerate(graph.partitions[t])
            if NodeRef(t, i) in keep
        )
        for t, name in enumerate(graph.entity_types)
    }
    instances = {}
    for rel in mrd.relationship_types:
        left, right = set(kept_labels[rel.left]), set(kept_labels[rel.right])
        instances[rel.name] = tuple(
            (a, b) for a, b in mrd.instances[rel.name] if a in left and b in right
        )
    return build_graph(
        MultiRelationalDatabase(
            entity_types=mrd.entity_types,
            relationship_types=mrd.relationship_types,
            domains=kept_labels,
            instances=instances,
        )
    )


@dataclass(frozen=True, slots=True)
class RecoveryResult:
    """Outcome of one planted-pattern run."""

    seed: int
    k: int
    rank: int | None
    patterns: int


def recovery_run(
    graph: KPartiteGraph,
    spec: EmbedSpec,
    miner_options: MinerOptions | None = None,
    rank_options: RankOptions | None = None,
    threads: int = 1,
) -> RecoveryResult:
    """Plant, mine, fit, rank, and report where the planted pattern landed."""
    augmented, truth = embed(graph, spec)
    patterns = list(mine(augmented, miner_options, threads=threads))
    model = fit(augmented, threads=threads)
    ranked = rank(model, augmented, patterns, rank_options)
    found = rank_of_embedded(ranked, truth)
    return RecoveryResult(spec.seed, spec.k, found, len(patterns))


@dataclass(frozen=True, slots=True)
class ScalingPoint:
    """Size and mining cost of one sample."""

    fraction: float
    nodes: int
    edges: int
    patterns: int
    seconds: float


def scaling_run(
    graph: KPartiteGraph,
    hub_type: str,
    fractions: Sequence[float],
    seed: int = 0,
    threads: int = 1,
) -> tuple[list[ScalingPoint], float]:
    """Mine nested samples and fit the log-log growth exponent of run time.

    Returns:
        The per-sample points and the slope of log(seconds) on log(edges).
    """
    points = []
    for fraction in sorted(fractions):
        sample = sample_subgraph(graph, hub_type, fraction, seed)
        started = time.perf_counter()
        count = sum(1 for _ in mine(sample, threads=threads))
        elapsed = time.perf_counter() - started
        points.append(
            ScalingPoint(fraction, sample.node_count, sample.edge_count, count, elapsed)
        )
        logger.info(
            "Sample %.0f%%: %d patterns in %.2fs", fraction * 100, count, elapsed
        )

    usable = [p for p in points if p.edges > 0 and p.seconds > 0]
    if len(usable) < 2:
        return points, float("nan")
    slope = np.polyfit(
        np.log([p.edges for p in usable]), np.log([p.seconds for p in usable]), 1
    )[0]
    return points, float(slope)
