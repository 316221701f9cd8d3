"""Wire records of the JSON-lines pattern and ranking files.

Labels are grouped per entity type name; within a type they are listed in the
graph's canonical order.
"""

from pydantic import BaseModel, ConfigDict, Field


class PatternRecord(BaseModel):
    """One line of a pattern stream."""

    model_config = ConfigDict(extra="forbid")

    id: int = Field(ge=0)
    nodes: dict[str, list[str]]
    edge_count: int = Field(ge=0)


class RankedRecord(BaseModel):
    """One line of a ranked pattern file."""

    model_config = ConfigDict(extra="forbid")

    rank: int = Field(ge=1)
    interestingness: float
    self_information_bits: float
    description_length_bits: float
    nodes: dict[str, list[str]]
    edge_count: int = Field(ge=0)


class StatsRecord(BaseModel):
    """Dataset summary printed by ``stats``."""

    nodes_per_type: dict[str, int]
    edges_per_type: dict[str, int]
    total_nodes: int
    total_edges: int
    density: float
