"""Immutable K-partite graph representation of a multi-relational database.

Nodes are numbered globally in the total node order: entity types in
declaration order, and within a type the labels in lexicographic order. The
global id of a node therefore compares exactly like its NodeRef.

Every node keeps its neighbours as a sorted tuple, as a frozenset, and split
per linked entity type. Neighbourhood operations only touch the neighbour
sets of the nodes involved, never whole partitions.
"""

import json
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import NamedTuple, TextIO

import numpy as np
import numpy.typing as npt

from src.exceptions import PatternError, UnknownNodeError, UnknownRelationshipError
from src.schema import MultiRelationalDatabase, RelationshipType

_EMPTY: frozenset[int] = frozenset()


class NodeRef(NamedTuple):
    """A node: entity type ordinal plus ordinal within the type's order."""

    type_index: int
    node_index: int


@dataclass(frozen=True, slots=True)
class EdgeType:
    """A declared relationship type between two entity type ordinals."""

    name: str
    left: int
    right: int

    def other(self, type_index: int) -> int:
        """Return the endpoint type opposite to ``type_index``."""
        return self.right if type_index == self.left else self.left


class KPartiteGraph:
    """K-partite graph with typed partitions and per-type adjacency.

    Attributes:
        entity_types: Entity type names in type order.
        partitions: Per entity type, labels in canonical order.
        edge_types: Declared edge types in declaration order.
    """

    def __init__(
        self,
        entity_types: Sequence[str],
        partitions: Sequence[Sequence[str]],
        edge_types: Sequence[EdgeType],
        edges: Mapping[str, Iterable[tuple[int, int]]],
    ) -> None:
        """Build the graph from index-based edge lists.

        Args:
            entity_types: Entity type names.
            partitions: Per type, labels already in canonical order.
            edge_types: Edge types between distinct type ordinals, at most one
                per unordered pair.
            edges: Per edge type name, (left node index, right node index)
                pairs; duplicates are ignored.

        Raises:
            ValueError: If an edge type joins a type to itself or a pair of
                types carries two edge types.
        """
        self.entity_types: tuple[str, ...] = tuple(entity_types)
        self.partitions: tuple[tuple[str, ...], ...] = tuple(
            tuple(labels) for labels in partitions
        )
        self.edge_types: tuple[EdgeType, ...] = tuple(edge_types)

        k = len(self.entity_types)
        self._offsets: list[int] = []
        total = 0
        for labels in self.partitions:
            self._offsets.append(total)
            total += len(labels)
        self._size = total
        self._type_of: list[int] = [
            t for t, labels in enumerate(self.partitions) for _ in labels
        ]
        self._label_index: list[dict[str, int]] = [
            {label: i for i, label in enumerate(labels)} for labels in self.partitions
        ]

        self._by_name: dict[str, EdgeType] = {}
        self._by_pair: dict[frozenset[int], EdgeType] = {}
        self._linked: list[set[int]] = [set() for _ in range(k)]
        for et in self.edge_types:
            if et.left == et.right:
                raise ValueError(
                    f"edge type '{et.name}' must join two distinct entity types"
                )
            pair = frozenset((et.left, et.right))
            if pair in self._by_pair:
                raise ValueError(
                    f"edge types '{self._by_pair[pair].name}' and '{et.name}' "
                    "join the same pair of entity types"
                )
            self._by_name[et.name] = et
            self._by_pair[pair] = et
            self._linked[et.left].add(et.right)
            self._linked[et.right].add(et.left)

        adjacency: list[list[int]] = [[] for _ in range(total)]
        self._edges: dict[str, tuple[tuple[int, int], ...]] = {}
        for et in self.edge_types:
            left_offset = self._offsets[et.left]
            right_offset = self._offsets[et.right]
            pairs = sorted(set(edges.get(et.name, ())))
            for i, j in pairs:
                adjacency[left_offset + i].append(right_offset + j)
                adjacency[right_offset + j].append(left_offset + i)
            self._edges[et.name] = tuple(pairs)
        self._neighbours: list[tuple[int, ...]] = [
            tuple(sorted(nbrs)) for nbrs in adjacency
        ]
        self._neighbour_sets: list[frozenset[int]] = [
            frozenset(nbrs) for nbrs in adjacency
        ]
        self._typed: list[dict[int, frozenset[int]]] = []
        for u, nbrs in enumerate(self._neighbours):
            linked = self._linked[self._type_of[u]]
            split: dict[int, list[int]] = {s: [] for s in linked}
            for v in nbrs:
                split[self._type_of[v]].append(v)
            self._typed.append(
                {s: frozenset(ids) if ids else _EMPTY for s, ids in split.items()}
            )

    # ------------------------------------------------------------------
    # Sizes and lookups
    # ------------------------------------------------------------------

    @property
    def node_count(self) -> int:
        """Total number of nodes."""
        return self._size

    @property
    def edge_count(self) -> int:
        """Total number of edges."""
        return sum(len(pairs) for pairs in self._edges.values())

    def node_id(self, ref: NodeRef) -> int:
        """Global id of a node in the total order."""
        return self._offsets[ref.type_index] + ref.node_index

    def node_ref(self, node_id: int) -> NodeRef:
        """NodeRef of a global id."""
        t = self._type_of[node_id]
        return NodeRef(t, node_id - self._offsets[t])

    def type_of(self, node_id: int) -> int:
        """Entity type ordinal of a global id."""
        return self._type_of[node_id]

    def type_ids(self, type_index: int) -> range:
        """Global ids of one partition."""
        start = self._offsets[type_index]
        return range(start, start + len(self.partitions[type_index]))

    def label(self, ref: NodeRef) -> str:
        """Label of a node."""
        return self.partitions[ref.type_index][ref.node_index]

    def type_index(self, entity_type: str) -> int:
        """Ordinal of an entity type name."""
        try:
            return self.entity_types.index(entity_type)
        except ValueError as e:
            raise PatternError(f"unknown entity type '{entity_type}'") from e

    def lookup(self, entity_type: str, label: str) -> NodeRef:
        """Find a node by entity type name and label."""
        t = self.type_index(entity_type)
        try:
            return NodeRef(t, self._label_index[t][label])
        except KeyError as e:
            raise UnknownNodeError(entity_type, label) from e

    def nodes(self) -> Iterator[NodeRef]:
        """All nodes in total order."""
        for t, labels in enumerate(self.partitions):
            for i in range(len(labels)):
                yield NodeRef(t, i)

    # ------------------------------------------------------------------
    # Edge types
    # ------------------------------------------------------------------

    def edge_type(self, name: str) -> EdgeType:
        """Edge type by relationship name."""
        try:
            return self._by_name[name]
        except KeyError as e:
            raise UnknownRelationshipError(name) from e

    def edge_type_between(self, a: int, b: int) -> EdgeType | None:
        """Edge type joining two entity type ordinals, if declared."""
        return self._by_pair.get(frozenset((a, b)))

    def linked_types(self, type_index: int) -> frozenset[int]:
        """Entity types sharing an edge type with ``type_index``."""
        return frozenset(self._linked[type_index])

    def edges(self, name: str) -> tuple[tuple[int, int], ...]:
        """Sorted (left index, right index) pairs of an edge type."""
        self.edge_type(name)
        return self._edges[name]

    def degrees(self, name: str) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
        """Left-side and right-side degree vectors of an edge type."""
        et = self.edge_type(name)
        left = np.zeros(len(self.partitions[et.left]), dtype=np.int64)
        right = np.zeros(len(self.partitions[et.right]), dtype=np.int64)
        pairs = self._edges[name]
        if pairs:
            index = np.asarray(pairs, dtype=np.int64)
            np.add.at(left, index[:, 0], 1)
            np.add.at(right, index[:, 1], 1)
        return left, right

    def degree(self, ref: NodeRef, name: str) -> int:
        """Number of edges of type ``name`` incident to a node."""
        et = self.edge_type(name)
        if ref.type_index not in (et.left, et.right):
            return 0
        typed = self._typed[self.node_id(ref)]
        return len(typed[et.other(ref.type_index)])

    def neighbours(self, ref: NodeRef) -> tuple[NodeRef, ...]:
        """Neighbours of a node in total order."""
        return tuple(self.node_ref(v) for v in self._neighbours[self.node_id(ref)])

    def has_edge(self, a: NodeRef, b: NodeRef) -> bool:
        """Whether an edge joins two nodes."""
        return self.node_id(b) in self._neighbour_sets[self.node_id(a)]

    # ------------------------------------------------------------------
    # Id-level primitives
    # ------------------------------------------------------------------

    def neighbour_ids(self, node_id: int) -> frozenset[int]:
        """Global ids of a node's neighbours."""
        return self._neighbour_sets[node_id]

    def typed_neighbours(self, node_id: int) -> Mapping[int, frozenset[int]]:
        """Neighbour ids per linked entity type, empty sets included."""
        return self._typed[node_id]

    def common_by_type(self, node_ids: Iterable[int]) -> dict[int, frozenset[int]]:
        """Common neighbours of the constrained types.

        A type is constrained once some input node's type is linked to it;
        its entry is the intersection of those nodes' neighbours in the type.
        Types without an entry are unconstrained: all of their nodes qualify.
        """
        common: dict[int, frozenset[int]] = {}
        for u in node_ids:
            for t, nbrs in self._typed[u].items():
                current = common.get(t)
                common[t] = nbrs if current is None else current & nbrs
        return common

    # ------------------------------------------------------------------
    # Neighbourhood operations
    # ------------------------------------------------------------------

    def common_neighbours(self, nodes: Iterable[NodeRef]) -> set[NodeRef]:
        """Nodes adjacent to every input node of a linked type.

        Nodes whose type shares no edge type with any input node's type
        qualify vacuously, and input nodes may qualify themselves.
        """
        common = self.common_by_type(self.node_id(ref) for ref in nodes)
        found: set[NodeRef] = set()
        for t in range(len(self.entity_types)):
            ids = common.get(t, self.type_ids(t))
            found.update(self.node_ref(v) for v in ids)
        return found

    def adjacent_common_neighbours(self, nodes: Iterable[NodeRef]) -> set[NodeRef]:
        """Common neighbours with at least one edge into the input set.

        Only constrained types can hold such nodes, and every common
        neighbour of a constrained type is adjacent to an input node.
        """
        common = self.common_by_type(self.node_id(ref) for ref in nodes)
        return {self.node_ref(v) for ids in common.values() for v in ids}

    def induced_edges(
        self, nodes: Iterable[NodeRef]
    ) -> list[tuple[EdgeType, int, int]]:
        """Data edges among the given nodes as (edge type, left, right)."""
        ids = sorted({self.node_id(ref) for ref in nodes})
        members = set(ids)
        found: list[tuple[EdgeType, int, int]] = []
        for u in ids:
            for v in sorted(self._neighbour_sets[u] & members):
                if v <= u:
                    continue
                a, b = self.node_ref(u), self.node_ref(v)
                et = self._by_pair[frozenset((a.type_index, b.type_index))]
                if a.type_index == et.left:
                    found.append((et, a.node_index, b.node_index))
                else:
                    found.append((et, b.node_index, a.node_index))
        return found

    def induced_edge_count(self, node_ids: Iterable[int]) -> int:
        """Number of data edges among global ids."""
        members = set(node_ids)
        return sum(len(self._neighbour_sets[u] & members) for u in members) // 2

    def is_ccs(self, nodes: Iterable[NodeRef]) -> bool:
        """Check that a non-empty node set is connected and complete."""
        members = {self.node_id(ref) for ref in nodes}
        if not members:
            return False
        for u in members:
            linked = self._linked[self._type_of[u]]
            for v in members:
                if self._type_of[v] in linked and v not in self._neighbour_sets[u]:
                    return False
        start = min(members)
        reached = {start}
        frontier = [start]
        while frontier:
            u = frontier.pop()
            for v in self._neighbour_sets[u] & members:
                if v not in reached:
                    reached.add(v)
                    frontier.append(v)
        return reached == members

    # ------------------------------------------------------------------
    # Conversion
    # ------------------------------------------------------------------

    def to_database(self) -> MultiRelationalDatabase:
        """Labels and instances of the graph as a database."""
        rels = tuple(
            RelationshipType(
                name=et.name,
                left=self.entity_types[et.left],
                right=self.entity_types[et.right],
            )
            for et in self.edge_types
        )
        instances = {
            et.name: tuple(
                (self.partitions[et.left][i], self.partitions[et.right][j])
                for i, j in self._edges[et.name]
            )
            for et in self.edge_types
        }
        return MultiRelationalDatabase(
            entity_types=self.entity_types,
            relationship_types=rels,
            domains=dict(zip(self.entity_types, self.partitions, strict=True)),
            instances=instances,
        )

    def dump(self, stream: TextIO) -> None:
        """Write one JSON line per edge."""
        for et in self.edge_types:
            left_labels = self.partitions[et.left]
            right_labels = self.partitions[et.right]
            for i, j in self._edges[et.name]:
                record = {
                    "type": et.name,
                    "left": left_labels[i],
                    "right": right_labels[j],
                }
                stream.write(json.dumps(record, ensure_ascii=False) + "\n")


def build_graph(mrd: MultiRelationalDatabase) -> KPartiteGraph:
    """Build the K-partite graph of a database.

    Type order is the database's entity type order; within a type, labels are
    sorted lexicographically (code point order, identical to UTF-8 byte order).
    """
    partitions = [sorted(mrd.domains.get(name, ())) for name in mrd.entity_types]
    index = [{label: i for i, label in enumerate(labels)} for labels in partitions]
    type_at = {name: t for t, name in enumerate(mrd.entity_types)}

    edge_types = []
    edges: dict[str, list[tuple[int, int]]] = {}
    for rel in mrd.relationship_types:
        left, right = type_at[rel.left], type_at[rel.right]
        edge_types.append(EdgeType(rel.name, left, right))
        edges[rel.name] = [
            (index[left][a], index[right][b])
            for a, b in mrd.instances.get(rel.name, ())
        ]
    return KPartiteGraph(mrd.entity_types, partitions, edge_types, edges)
