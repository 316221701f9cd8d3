"""Shared fixtures and brute-force oracles.

FIXTURE-M is the three-type movie example (titles, genres, years);
FIXTURE-B is the four-transaction market-basket example.
"""

import itertools
import random
from collections.abc import Iterator
from pathlib import Path

import pytest

from src.graph import KPartiteGraph, NodeRef, build_graph
from src.schema import MultiRelationalDatabase, RelationshipType
from src.synth import random_graph

FIXTURES = Path(__file__).parent / "fixtures"


def make_graph(
    entity_types: list[str],
    relationships: dict[str, tuple[str, str, list[tuple[str, str]]]],
    extra_labels: dict[str, list[str]] | None = None,
) -> KPartiteGraph:
    """Build a graph from label pairs per relationship type."""
    domains: dict[str, dict[str, None]] = {name: {} for name in entity_types}
    rels = []
    instances = {}
    for name, (left, right, pairs) in relationships.items():
        rels.append(RelationshipType(name, left, right))
        for a, b in pairs:
            domains[left].setdefault(a)
            domains[right].setdefault(b)
        instances[name] = tuple(dict.fromkeys(pairs))
    for name, labels in (extra_labels or {}).items():
        for label in labels:
            domains[name].setdefault(label)
    return build_graph(
        MultiRelationalDatabase(
            entity_types=tuple(entity_types),
            relationship_types=tuple(rels),
            domains={name: tuple(values) for name, values in domains.items()},
            instances=instances,
        )
    )


def fixture_m() -> KPartiteGraph:
    """Titles T1..T3, genres Comedy/Drama/History, years 2009/2010."""
    return make_graph(
        ["title", "genre", "year"],
        {
            "of_genre": (
                "title",
                "genre",
                [
                    ("T1", "Drama"),
                    ("T1", "History"),
                    ("T3", "Drama"),
                    ("T3", "History"),
                    ("T2", "Comedy"),
                ],
            ),
            "film_year": (
                "title",
                "year",
                [("T1", "2010"), ("T3", "2010"), ("T2", "2009")],
            ),
        },
    )


def fixture_b(extra_type: bool = False) -> KPartiteGraph:
    """Transactions T1..T4 over items I1..I3."""
    pairs = [
        ("T1", "I1"),
        ("T1", "I2"),
        ("T2", "I1"),
        ("T2", "I2"),
        ("T3", "I3"),
        ("T4", "I1"),
    ]
    if not extra_type:
        return make_graph(
            ["transaction", "item"], {"contains": ("transaction", "item", pairs)}
        )
    return make_graph(
        ["transaction", "item", "store"],
        {
            "contains": ("transaction", "item", pairs),
            "sold_at": ("transaction", "store", []),
        },
        extra_labels={"store": ["S1"]},
    )


@pytest.fixture
def graph_m() -> KPartiteGraph:
    """FIXTURE-M as a graph."""
    return fixture_m()


@pytest.fixture
def graph_b() -> KPartiteGraph:
    """FIXTURE-B as a graph."""
    return fixture_b()


def ref(graph: KPartiteGraph, entity_type: str, label: str) -> NodeRef:
    """Shorthand for a label lookup."""
    return graph.lookup(entity_type, label)


def labels(graph: KPartiteGraph, nodes: frozenset[NodeRef] | set[NodeRef]) -> set[str]:
    """Labels of a node set (fixtures use globally unique labels)."""
    return {graph.label(node) for node in nodes}


# ============================================================================
# ORACLES
# ============================================================================


def _linked(graph: KPartiteGraph, a: NodeRef, b: NodeRef) -> bool:
    return graph.edge_type_between(a.type_index, b.type_index) is not None


def naive_extends(graph: KPartiteGraph, nodes: frozenset[NodeRef], v: NodeRef) -> bool:
    """Whether adding ``v`` keeps a CCS connected and complete."""
    if v in nodes:
        return False
    adjacent = False
    for u in nodes:
        if _linked(graph, u, v):
            if not graph.has_edge(u, v):
                return False
            adjacent = True
    return adjacent


def oracle_ccs(graph: KPartiteGraph) -> set[frozenset[NodeRef]]:
    """Every CCS, grown one node at a time from singletons."""
    everything = list(graph.nodes())
    level = {frozenset([node]) for node in everything}
    found = set(level)
    while level:
        grown = set()
        for nodes in level:
            for v in everything:
                if naive_extends(graph, nodes, v):
                    grown.add(nodes | {v})
        grown -= found
        found |= grown
        level = grown
    return found


def oracle_mccs(graph: KPartiteGraph, min_nodes: int = 2) -> set[frozenset[NodeRef]]:
    """CCSs that no single node can extend."""
    everything = list(graph.nodes())
    return {
        nodes
        for nodes in oracle_ccs(graph)
        if len(nodes) >= min_nodes
        and not any(naive_extends(graph, nodes, v) for v in everything)
    }


def closed_tiles(graph: KPartiteGraph) -> set[frozenset[NodeRef]]:
    """Closed itemsets with their supporting transactions, as node sets."""
    transactions = [NodeRef(0, i) for i in range(len(graph.partitions[0]))]
    items = [NodeRef(1, j) for j in range(len(graph.partitions[1]))]
    tidsets = {
        item: {t for t in transactions if graph.has_edge(t, item)} for item in items
    }
    tiles = set()
    for size in range(1, len(items) + 1):
        for itemset in itertools.combinations(items, size):
            support = set(transactions)
            for item in itemset:
                support &= tidsets[item]
            if not support:
                continue
            closure = {item for item in items if support <= tidsets[item]}
            if closure == set(itemset):
                tiles.add(frozenset(support) | frozenset(itemset))
    return tiles


def random_corpus(count: int, seed: int = 7) -> Iterator[KPartiteGraph]:
    """Seeded small random K-partite graphs with varied topologies."""
    rng = random.Random(seed)
    for index in range(count):
        k = rng.choice([2, 3, 4])
        sizes = [rng.randint(1, 6) for _ in range(k)]
        pairs = list(itertools.combinations(range(k), 2))
        shape = rng.choice(["chain", "star", "complete", "random"])
        if shape == "chain":
            topology = [(t, t + 1) for t in range(k - 1)]
        elif shape == "star":
            topology = [(0, t) for t in range(1, k)]
        elif shape == "complete":
            topology = pairs
        else:
            topology = [pair for pair in pairs if rng.random() < 0.6] or pairs[:1]
        densities = [rng.choice([0.2, 0.35, 0.5, 0.65]) for _ in topology]
        yield random_graph(sizes, topology, densities, seed=seed * 1000 + index)
