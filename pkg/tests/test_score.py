"""Tests for interestingness scoring and ranking."""

import itertools
import math
import random

import numpy as np
import pytest

from src.exceptions import PatternError, ScoringError
from src.graph import KPartiteGraph
from src.maxent import MaxEntModel, fit, fit_relationship
from src.miner import Pattern, mine
from src.score import (
    RankOptions,
    description_length,
    interestingness,
    rank,
    self_information,
)
from tests.conftest import labels, make_graph, ref


def pattern_of(graph: KPartiteGraph, *pairs: tuple[str, str]) -> Pattern:
    nodes = tuple(sorted(ref(graph, t, label) for t, label in pairs))
    return Pattern(nodes, graph.induced_edge_count(graph.node_id(n) for n in nodes))


def perfect_matching(size: int) -> tuple[KPartiteGraph, MaxEntModel]:
    """Two types joined by a perfect matching: every cell has probability 1/size."""
    pairs = [(f"a{i}", f"b{i}") for i in range(size)]
    graph = make_graph(["a", "b"], {"ab": ("a", "b", pairs)})
    return graph, fit(graph)


class TestSelfInformation:
    """Tests for self_information."""

    def test_one_bit_per_half_probability_edge(self) -> None:
        """Two edges at probability 1/2 cost two bits."""
        graph = make_graph(
            ["a", "b", "c"],
            {
                "ab": ("a", "b", [("a0", "b0"), ("a1", "b1")]),
                "ac": ("a", "c", [("a0", "c0"), ("a1", "c1")]),
            },
        )
        model = fit(graph)
        pattern = pattern_of(graph, ("a", "a0"), ("b", "b0"), ("c", "c0"))

        assert model["ab"].probability(0, 0) == pytest.approx(0.5)
        assert self_information(model, graph, pattern) == pytest.approx(2.0, abs=1e-9)

    def test_perfect_matching_edges(self) -> None:
        """A single edge at probability 1/4 costs two bits."""
        graph, model = perfect_matching(4)

        pattern = pattern_of(graph, ("a", "a0"), ("b", "b0"))

        assert self_information(model, graph, pattern) == pytest.approx(2.0, abs=1e-9)

    def test_certain_edges_cost_nothing(self) -> None:
        """Edges of a full relationship have probability one."""
        graph = make_graph(
            ["a", "b"], {"ab": ("a", "b", [("a0", "b0"), ("a0", "b1")])}
        )
        pattern = pattern_of(graph, ("a", "a0"), ("b", "b0"), ("b", "b1"))

        assert self_information(fit(graph), graph, pattern) == 0.0

    def test_fixture_m_small_pattern(self, graph_m: KPartiteGraph) -> None:
        """The score equals the sum over the two edges of the pattern."""
        model = fit(graph_m)
        t2 = ref(graph_m, "title", "T2")
        comedy = ref(graph_m, "genre", "Comedy")
        y2009 = ref(graph_m, "year", "2009")
        expected = -math.log2(
            model["of_genre"].probability(t2.node_index, comedy.node_index)
        ) - math.log2(model["film_year"].probability(t2.node_index, y2009.node_index))

        pattern = pattern_of(
            graph_m, ("title", "T2"), ("genre", "Comedy"), ("year", "2009")
        )

        found = self_information(model, graph_m, pattern)

        assert found == pytest.approx(expected, abs=1e-9)

    def test_grows_with_the_edge_set(self, graph_m: KPartiteGraph) -> None:
        """A sub-pattern never costs more than a pattern containing it."""
        model = fit(graph_m)
        big = max(mine(graph_m), key=len)
        subsets = [
            Pattern(nodes, graph_m.induced_edge_count(map(graph_m.node_id, nodes)))
            for size in range(2, len(big) + 1)
            for nodes in itertools.combinations(big.canonical, size)
            if graph_m.is_ccs(nodes)
        ]

        for small in subsets:
            for large in subsets:
                if small.node_set < large.node_set:
                    assert self_information(model, graph_m, small) <= (
                        self_information(model, graph_m, large) + 1e-12
                    )
        assert len(subsets) > 5

    def test_zero_probability_edge_raises_error(self, graph_m: KPartiteGraph) -> None:
        """A model that forbids a pattern edge does not match the graph."""
        rows, cols = graph_m.degrees("of_genre")
        empty = fit_relationship("of_genre", np.zeros_like(rows), np.zeros_like(cols))
        model = MaxEntModel({**fit(graph_m).relationships, "of_genre": empty})
        pattern = pattern_of(graph_m, ("title", "T2"), ("genre", "Comedy"))

        with pytest.raises(ScoringError):
            self_information(model, graph_m, pattern)


class TestDescriptionLength:
    """Tests for description_length."""

    def test_half_probability(self) -> None:
        """At p=1/2 every node costs one bit."""
        assert description_length(8, 5, 0.5) == pytest.approx(8.0)

    def test_fixture_m_density(self) -> None:
        """Three of eight nodes at the movie density."""
        assert description_length(8, 3, 8 / 15) == pytest.approx(8.218, abs=1e-3)

    def test_empty_pattern(self) -> None:
        """With no members only the non-member cost remains."""
        assert description_length(8, 0, 0.3) == pytest.approx(-8 * math.log2(0.7))

    def test_closed_form_matches_sum(self) -> None:
        """The closed form equals the per-node sum."""
        rng = random.Random(13)
        for _ in range(1000):
            total = rng.randint(1, 200)
            members = rng.randint(0, total)
            p = rng.uniform(1e-3, 1 - 1e-3)
            per_node = [-math.log2(p)] * members
            per_node += [-math.log2(1 - p)] * (total - members)

            assert description_length(total, members, p) == pytest.approx(
                math.fsum(per_node), rel=1e-12, abs=1e-12
            )

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_p_outside_open_interval(self, p: float) -> None:
        """p must lie strictly between 0 and 1."""
        with pytest.raises(ScoringError):
            description_length(8, 3, p)

    def test_more_members_than_nodes(self) -> None:
        """Inconsistent counts are rejected."""
        with pytest.raises(ScoringError):
            description_length(3, 4, 0.5)


class TestRank:
    """Tests for interestingness and rank."""

    def test_ratio(self) -> None:
        """Interestingness is self-information over description length."""
        graph, model = perfect_matching(4)
        pattern = pattern_of(graph, ("a", "a0"), ("b", "b0"))
        options = RankOptions(p=0.5)

        # 2 bits of self-information over 8 one-bit nodes.
        assert interestingness(model, graph, pattern, options) == pytest.approx(0.25)

    def test_fixture_m_order(self, graph_m: KPartiteGraph) -> None:
        """The rare T2-Comedy edge puts the three-node pattern first."""
        model = fit(graph_m)
        patterns = list(mine(graph_m))

        ranked = rank(model, graph_m, reversed(patterns))

        assert [item.rank for item in ranked] == [1, 2]
        assert labels(graph_m, ranked[0].pattern.node_set) == {"T2", "Comedy", "2009"}
        assert labels(graph_m, ranked[1].pattern.node_set) == {
            "T1", "T3", "Drama", "History", "2010"
        }
        assert ranked[0].interestingness > ranked[1].interestingness
        for item in ranked:
            assert item.interestingness == pytest.approx(
                item.self_information_bits / item.description_length_bits, rel=1e-12
            )

    def test_default_p_is_density(self, graph_m: KPartiteGraph) -> None:
        """Without p the description length uses 8/15."""
        model = fit(graph_m)
        patterns = list(mine(graph_m))

        ranked = rank(model, graph_m, patterns)
        explicit = rank(model, graph_m, patterns, RankOptions(p=8 / 15))

        scores = [r.interestingness for r in ranked]
        assert scores == [r.interestingness for r in explicit]
        for item in ranked:
            assert item.description_length_bits == pytest.approx(
                description_length(8, len(item.pattern), 8 / 15)
            )

    def test_log_base_cancels(self, graph_m: KPartiteGraph) -> None:
        """Scores in nats give the same ratios as in bits."""
        model = fit(graph_m)
        patterns = list(mine(graph_m))

        bits = rank(model, graph_m, patterns)
        nats = rank(model, graph_m, patterns, RankOptions(base=math.e))

        assert [r.pattern for r in bits] == [r.pattern for r in nats]
        for a, b in zip(bits, nats, strict=True):
            assert a.interestingness == pytest.approx(b.interestingness, rel=1e-12)

    def test_top_k(self, graph_m: KPartiteGraph) -> None:
        """Only the best pattern is kept."""
        model = fit(graph_m)

        ranked = rank(model, graph_m, mine(graph_m), RankOptions(top_k=1))

        assert len(ranked) == 1
        assert ranked[0].rank == 1
        assert len(ranked[0].pattern) == 3

    def test_duplicates_rank_deterministically(self, graph_m: KPartiteGraph) -> None:
        """Identical patterns keep a stable order."""
        model = fit(graph_m)
        patterns = list(mine(graph_m))

        first = rank(model, graph_m, patterns + patterns)
        second = rank(model, graph_m, patterns + patterns)

        assert [r.pattern for r in first] == [r.pattern for r in second]
        assert [r.rank for r in first] == [1, 2, 3, 4]

    def test_larger_p_favours_larger_patterns(self, graph_m: KPartiteGraph) -> None:
        """Raising p lowers the per-member cost of a pattern."""
        model = fit(graph_m)
        big = next(iter(mine(graph_m)))

        low = interestingness(model, graph_m, big, RankOptions(p=0.2))
        high = interestingness(model, graph_m, big, RankOptions(p=0.6))

        assert high > low

    def test_options_validation(self) -> None:
        """Out-of-range options are rejected."""
        with pytest.raises(ValueError):
            RankOptions(p=1.0)
        with pytest.raises(ValueError):
            RankOptions(top_k=0)

    def test_rejects_patterns_that_are_not_ccs(self, graph_m: KPartiteGraph) -> None:
        """Two titles with no shared genre cannot be ranked."""
        model = fit(graph_m)
        pattern = pattern_of(
            graph_m, ("title", "T1"), ("title", "T2"), ("genre", "Comedy")
        )

        with pytest.raises(PatternError, match="connected complete"):
            rank(model, graph_m, [pattern])
