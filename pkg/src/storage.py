"""JSON-lines storage of pattern streams, ranked output and model dumps.

Patterns are written with labels rather than indices so that files stay
meaningful across runs; reading them back resolves labels through the graph
and restores nodes in canonical order.
"""

import json
from collections.abc import Iterable, Iterator
from typing import TextIO

from pydantic import ValidationError as PydanticValidationError

from src.exceptions import MccsError, PatternError
from src.graph import KPartiteGraph, NodeRef
from src.maxent import MaxEntModel
from src.miner import Pattern
from src.models import PatternRecord, RankedRecord
from src.score import RankedPattern


def round_float(value: float, digits: int = 12) -> float:
    """Round to ``digits`` significant digits."""
    return float(f"{value:.{digits}g}")


def nodes_by_type(graph: KPartiteGraph, pattern: Pattern) -> dict[str, list[str]]:
    """Pattern labels grouped per entity type, in type and canonical order."""
    grouped: dict[str, list[str]] = {}
    for ref in pattern.canonical:
        entity_type = graph.entity_types[ref.type_index]
        grouped.setdefault(entity_type, []).append(graph.label(ref))
    return grouped


def pattern_from_nodes(
    graph: KPartiteGraph,
    nodes: dict[str, list[str]],
    edge_count: int | None = None,
) -> Pattern:
    """Resolve grouped labels into a canonical Pattern.

    Args:
        graph: Graph the labels belong to.
        nodes: Labels grouped by entity type.
        edge_count: Edge count stated by the record, checked when given.

    Raises:
        PatternError: If a type or label is unknown, the nodes do not form a
            connected complete subgraph, or the stated edge count is wrong.
    """
    refs: list[NodeRef] = []
    try:
        for entity_type, labels in nodes.items():
            refs.extend(graph.lookup(entity_type, label) for label in labels)
    except MccsError as e:
        raise PatternError(f"pattern does not match the graph: {e}") from e
    canonical = tuple(sorted(set(refs)))
    if not graph.is_ccs(canonical):
        raise PatternError(
            f"nodes {dict(nodes)} are not a connected complete subgraph"
        )
    induced = graph.induced_edge_count([graph.node_id(ref) for ref in canonical])
    if edge_count is not None and edge_count != induced:
        raise PatternError(
            f"record states {edge_count} edges but the nodes induce {induced}"
        )
    return Pattern(nodes=canonical, edge_count=induced)


def write_patterns(
    graph: KPartiteGraph, patterns: Iterable[Pattern], stream: TextIO
) -> int:
    """Write a pattern stream; returns the number of records."""
    count = 0
    for count, pattern in enumerate(patterns, start=1):
        record = PatternRecord(
            id=count - 1,
            nodes=nodes_by_type(graph, pattern),
            edge_count=pattern.edge_count,
        )
        stream.write(record.model_dump_json() + "\n")
    return count


def iter_patterns(graph: KPartiteGraph, stream: TextIO) -> Iterator[Pattern]:
    """Read a pattern stream lazily.

    Raises:
        PatternError: On a malformed line, unknown labels, or a record that
            is not a connected complete subgraph with its stated edge count.
    """
    for line_number, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = PatternRecord.model_validate_json(line)
        except PydanticValidationError as e:
            raise PatternError(f"line {line_number}: malformed pattern record") from e
        try:
            pattern = pattern_from_nodes(graph, record.nodes, record.edge_count)
        except PatternError as e:
            raise PatternError(f"line {line_number}: {e.message}") from e
        yield pattern


def read_patterns(graph: KPartiteGraph, stream: TextIO) -> list[Pattern]:
    """Read a whole pattern stream."""
    return list(iter_patterns(graph, stream))


def write_ranked(
    graph: KPartiteGraph,
    ranked: Iterable[RankedPattern],
    stream: TextIO,
    digits: int = 12,
) -> int:
    """Write ranked records with floats rounded to ``digits`` significant digits."""
    count = 0
    for item in ranked:
        record = RankedRecord(
            rank=item.rank,
            interestingness=round_float(item.interestingness, digits),
            self_information_bits=round_float(item.self_information_bits, digits),
            description_length_bits=round_float(item.description_length_bits, digits),
            nodes=nodes_by_type(graph, item.pattern),
            edge_count=item.pattern.edge_count,
        )
        stream.write(record.model_dump_json() + "\n")
        count += 1
    return count


def read_ranked(stream: TextIO) -> list[RankedRecord]:
    """Read ranked records back."""
    records = []
    for line_number, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            records.append(RankedRecord.model_validate_json(line))
        except PydanticValidationError as e:
            raise PatternError(f"line {line_number}: malformed ranked record") from e
    return records


def dump_model(model: MaxEntModel, stream: TextIO) -> None:
    """Write the fitted model as one JSON document."""
    json.dump(model.to_record(), stream, indent=2)
    stream.write("\n")
