"""Subjective interestingness of patterns against the background model.

Interestingness is the self-information of a pattern's edges divided by the
description length of its node set. Description length codes membership of
every graph node: a member costs -log(p), a non-member -log(1 - p).
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field

from src.exceptions import PatternError, ScoringError
from src.graph import KPartiteGraph
from src.maxent import MaxEntModel, database_density
from src.miner import Pattern

logger = logging.getLogger(__name__)


class RankOptions(BaseModel):
    """Ranking parameters.

    Attributes:
        p: Membership probability of the description code; defaults to the
            database density.
        top_k: Keep only the best ``top_k`` patterns.
        base: Logarithm base of every reported quantity.
    """

    model_config = ConfigDict(frozen=True)

    p: float | None = Field(default=None, gt=0, lt=1)
    top_k: int | None = Field(default=None, ge=1)
    base: float = Field(default=2.0, gt=1)


@dataclass(frozen=True, slots=True)
class RankedPattern:
    """A pattern with its scores and 1-based rank."""

    pattern: Pattern
    self_information_bits: float
    description_length_bits: float
    interestingness: float
    rank: int


def self_information(
    model: MaxEntModel, graph: KPartiteGraph, pattern: Pattern, base: float = 2.0
) -> float:
    """Negative log-probability of the pattern's edges under the model.

    Raises:
        ScoringError: If a pattern edge has probability 0 in the model.
    """
    total = 0.0
    for edge_type, i, j in graph.induced_edges(pattern.nodes):
        p = model[edge_type.name].probability(i, j)
        if p <= 0.0:
            raise ScoringError(
                f"edge ({graph.partitions[edge_type.left][i]}, "
                f"{graph.partitions[edge_type.right][j]}) has probability 0 under "
                f"'{edge_type.name}'; model and graph do not match"
            )
        total -= math.log(p, base)
    return total


def description_length(
    total_nodes: int, pattern_nodes: int, p: float, base: float = 2.0
) -> float:
    """Cost of coding which of ``total_nodes`` nodes belong to the pattern.

    Raises:
        ScoringError: If ``p`` is outside (0, 1) or the counts are inconsistent.
    """
    if not 0.0 < p < 1.0:
        raise ScoringError(f"p must lie strictly between 0 and 1, got {p}")
    if not 0 <= pattern_nodes <= total_nodes:
        raise ScoringError(
            f"pattern size {pattern_nodes} is not within 0..{total_nodes}"
        )
    members = -pattern_nodes * math.log(p, base)
    others = -(total_nodes - pattern_nodes) * math.log(1.0 - p, base)
    return members + others


def interestingness(
    model: MaxEntModel,
    graph: KPartiteGraph,
    pattern: Pattern,
    options: RankOptions | None = None,
) -> float:
    """Self-information over description length, in a common log base."""
    options = options or RankOptions()
    p = options.p if options.p is not None else database_density(graph)
    si = self_information(model, graph, pattern, options.base)
    dl = description_length(graph.node_count, len(pattern.nodes), p, options.base)
    return si / dl


def rank(
    model: MaxEntModel,
    graph: KPartiteGraph,
    patterns: Iterable[Pattern],
    options: RankOptions | None = None,
) -> list[RankedPattern]:
    """Score patterns and sort them by descending interestingness.

    Ties are broken by the canonical node list, ascending.

    Raises:
        PatternError: If a pattern is not a connected complete subgraph.
    """
    options = options or RankOptions()
    p = options.p if options.p is not None else database_density(graph)
    n_total = graph.node_count
    scored: list[tuple[Pattern, float, float, float]] = []
    for pattern in patterns:
        if not graph.is_ccs(pattern.nodes):
            names = ", ".join(graph.label(ref) for ref in pattern.canonical)
            raise PatternError(f"{{{names}}} is not a connected complete subgraph")
        si = self_information(model, graph, pattern, options.base)
        dl = description_length(n_total, len(pattern.nodes), p, options.base)
        scored.append((pattern, si, dl, si / dl))

    scored.sort(key=lambda item: (-item[3], item[0].canonical))
    if options.top_k is not None:
        scored = scored[: options.top_k]
    logger.info("Ranked %d patterns with p=%.6g", len(scored), p)
    return [
        RankedPattern(
            pattern=pattern,
            self_information_bits=si,
            description_length_bits=dl,
            interestingness=score,
            rank=position,
        )
        for position, (pattern, si, dl, score) in enumerate(scored, start=1)
    ]
