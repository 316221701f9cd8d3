"""Depth-first enumeration of connected complete subgraphs.

Every CCS is generated through exactly one node permutation, its
representative permutation: the root is the smallest node, and every later
node is larger than all nodes added after its entity type first became
reachable. Each prefix of a representative permutation is again
representative, so the search tree is a plain depth-first recursion over
adjacent common neighbours with an admissibility test on each candidate.

When only maximal patterns are wanted, a candidate whose common-neighbour
set is contained in that of an earlier accepted sibling is skipped: every
maximal pattern below it would also contain that sibling, which can no
longer be added once the candidate is in.
The same mode abandons a state as soon as some common neighbour can never
be added and can never leave the common neighbourhood.
"""

import logging
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import chain

from src.exceptions import PatternError
from src.graph import KPartiteGraph, NodeRef

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Pattern:
    """A CCS given by its node list in insertion order.

    Attributes:
        nodes: The representative permutation (or canonical order for
            patterns read back from a file).
        edge_count: Number of data edges among the nodes.
    """

    nodes: tuple[NodeRef, ...]
    edge_count: int

    @property
    def node_set(self) -> frozenset[NodeRef]:
        """The nodes as a set."""
        return frozenset(self.nodes)

    @property
    def canonical(self) -> tuple[NodeRef, ...]:
        """The nodes sorted in the total node order."""
        return tuple(sorted(self.nodes))

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True, slots=True)
class MinerOptions:
    """Search switches.

    Attributes:
        maximal_only: Emit only maximal CCSs; otherwise every CCS.
        min_nodes: Smallest pattern size emitted.
        require_all_types: Keep only patterns covering every entity type.
        prune: Skip extensions subsumed by an earlier sibling (maximal mode).
        literal_window: Compare candidates against the node that made their
            type reachable too, and drop the root test.
        literal_output_guard: Emit only when some extension was recursed into.
    """

    maximal_only: bool = True
    min_nodes: int = 2
    require_all_types: bool = False
    prune: bool = True
    literal_window: bool = False
    literal_output_guard: bool = False

    def __post_init__(self) -> None:
        if self.min_nodes < 1:
            raise PatternError("min_nodes must be at least 1")


@dataclass(slots=True)
class SearchState:
    """A node of the search tree.

    Attributes:
        nodes: Global ids of the pattern in insertion order.
        members: The ids of ``nodes`` as a set.
        common: Per constrained entity type, the pattern's common neighbours
            in that type; types without an entry are unconstrained.
        reachable_since: Per entity type, the 1-based step at which it first
            became reachable.
        seen: Common-neighbour maps of accepted sibling extensions.
    """

    nodes: list[int]
    members: frozenset[int]
    common: dict[int, frozenset[int]]
    reachable_since: dict[int, int]
    seen: list[dict[int, frozenset[int]]] = field(default_factory=list)

    @property
    def adjacent_common(self) -> set[int]:
        """Ids of adjacent common neighbours."""
        found: set[int] = set()
        for ids in self.common.values():
            found |= ids
        return found


class PatternMiner:
    """Enumerates (maximal) CCSs of a K-partite graph."""

    def __init__(
        self, graph: KPartiteGraph, options: MinerOptions | None = None
    ) -> None:
        self.graph = graph
        self.options = options or MinerOptions()

    # ------------------------------------------------------------------
    # Search state
    # ------------------------------------------------------------------

    def root_state(self, root: NodeRef) -> SearchState:
        """Search state of a single-node pattern."""
        u = self.graph.node_id(root)
        typed = self.graph.typed_neighbours(u)
        return SearchState(
            nodes=[u],
            members=frozenset((u,)),
            common=dict(typed),
            reachable_since={t: 1 for t in typed},
        )

    def extend(
        self,
        state: SearchState,
        node_id: int,
        common: dict[int, frozenset[int]] | None = None,
    ) -> SearchState:
        """State of the pattern extended by one node."""
        if common is None:
            common = self._narrow(state.common, node_id)
        step = len(state.nodes) + 1
        reachable = dict(state.reachable_since)
        for t in self.graph.typed_neighbours(node_id):
            reachable.setdefault(t, step)
        return SearchState(
            nodes=[*state.nodes, node_id],
            members=state.members | {node_id},
            common=common,
            reachable_since=reachable,
        )

    def state_of(self, nodes: list[NodeRef]) -> SearchState:
        """Replay a node list into a search state."""
        if not nodes:
            raise PatternError("a search state needs at least one node")
        state = self.root_state(nodes[0])
        for ref in nodes[1:]:
            state = self.extend(state, self.graph.node_id(ref))
        return state

    # ------------------------------------------------------------------
    # Operations
    # ------------------------------------------------------------------

    def admissible(self, state: SearchState, candidate: NodeRef) -> bool:
        """Whether adding ``candidate`` keeps the permutation representative."""
        return self._admissible(state, self.graph.node_id(candidate))

    def _admissible(self, state: SearchState, c: int) -> bool:
        since = state.reachable_since.get(self.graph.type_of(c))
        if since is None:
            return False
        if self.options.literal_window:
            window = state.nodes[since - 1 :]
        else:
            if c < state.nodes[0]:
                return False
            window = state.nodes[since:]
        return all(n < c for n in window)

    def _is_maximal_state(self, state: SearchState) -> bool:
        if len(state.nodes) == 1:
            # An isolated node admits no extension; anything else does.
            return not any(state.common.values())
        return state.adjacent_common == state.members

    def is_maximal(self, pattern: Pattern) -> bool:
        """Whether no node can be added to a CCS of two or more nodes.

        Raises:
            PatternError: If the pattern has fewer than two nodes.
        """
        if len(pattern.nodes) < 2:
            raise PatternError("maximality is only defined for two or more nodes")
        g = self.graph
        ids = {g.node_id(ref) for ref in pattern.nodes}
        adjacent: set[int] = set()
        for common in g.common_by_type(ids).values():
            adjacent |= common
        return adjacent == ids

    def expand(self, state: SearchState) -> Iterator[Pattern]:
        """Emit the patterns of the subtree below ``state``."""
        opts = self.options
        if not opts.maximal_only and len(state.nodes) >= opts.min_nodes:
            yield self._pattern(state)

        prune = opts.prune and opts.maximal_only
        if prune and self._blocked(state):
            return
        recursed = False
        for c in sorted(state.adjacent_common - state.members):
            if not self._admissible(state, c):
                continue
            common = self._narrow(state.common, c)
            if prune and any(self._subsumed(common, other) for other in state.seen):
                continue
            state.seen.append(common)
            recursed = True
            yield from self.expand(self.extend(state, c, common))

        if not opts.maximal_only or len(state.nodes) < opts.min_nodes:
            return
        emit = bool(state.seen) if opts.literal_output_guard else not recursed
        if emit and self._is_maximal_state(state):
            yield self._pattern(state)

    def mine_root(self, root: NodeRef) -> list[Pattern]:
        """All qualifying patterns whose smallest node is ``root``."""
        found = [p for p in self.expand(self.root_state(root)) if self._keep(p)]
        logger.debug("Root %s yielded %d patterns", root, len(found))
        return found

    def mine(self, threads: int = 1) -> Iterator[Pattern]:
        """Run the search from every root in total order.

        With ``threads > 1`` roots are searched concurrently; the output keeps
        the sequential discovery order.
        """
        roots = list(self.graph.nodes())
        if threads <= 1:
            for root in roots:
                for pattern in self.expand(self.root_state(root)):
                    if self._keep(pattern):
                        yield pattern
            return
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from chain.from_iterable(pool.map(self.mine_root, roots))

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _blocked(self, state: SearchState) -> bool:
        """Whether no extension of ``state`` can be maximal.

        True when some common neighbour can never be added and never leaves
        the common neighbourhood: it is inadmissible, which only gets worse
        as nodes are added, and every linked type is constrained to its own
        neighbours.
        """
        for ids in state.common.values():
            for b in ids:
                if b in state.members or self._admissible(state, b):
                    continue
                stays = True
                for s, nbrs in self.graph.typed_neighbours(b).items():
                    current = state.common.get(s)
                    if current is None or not current <= nbrs:
                        stays = False
                        break
                if stays:
                    return True
        return False

    def _narrow(
        self, common: dict[int, frozenset[int]], node_id: int
    ) -> dict[int, frozenset[int]]:
        narrowed = dict(common)
        for t, nbrs in self.graph.typed_neighbours(node_id).items():
            current = common.get(t)
            narrowed[t] = nbrs if current is None else current & nbrs
        return narrowed

    def _subsumed(
        self, common: dict[int, frozenset[int]], other: dict[int, frozenset[int]]
    ) -> bool:
        """Whether every common neighbour under ``common`` is one under ``other``."""
        for t, ids in common.items():
            theirs = other.get(t)
            if theirs is not None and not ids <= theirs:
                return False
        # An unconstrained type holds the whole partition.
        return all(
            len(theirs) == len(self.graph.partitions[t])
            for t, theirs in other.items()
            if t not in common
        )

    def _keep(self, pattern: Pattern) -> bool:
        if not self.options.require_all_types:
            return True
        types = {ref.type_index for ref in pattern.nodes}
        return len(types) == len(self.graph.entity_types)

    def _pattern(self, state: SearchState) -> Pattern:
        g = self.graph
        return Pattern(
            nodes=tuple(g.node_ref(u) for u in state.nodes),
            edge_count=g.induced_edge_count(state.nodes),
        )


def mine(
    graph: KPartiteGraph,
    options: MinerOptions | None = None,
    threads: int = 1,
) -> Iterator[Pattern]:
    """Stream every qualifying (maximal) CCS of ``graph`` exactly once."""
    miner = PatternMiner(graph, options)
    count = 0
    for pattern in miner.mine(threads=threads):
        count += 1
        yield pattern
    logger.info("Mined %d patterns from %d nodes", count, graph.node_count)


def is_maximal(graph: KPartiteGraph, pattern: Pattern) -> bool:
    """Module-level form of :meth:`PatternMiner.is_maximal`."""
    return PatternMiner(graph).is_maximal(pattern)
