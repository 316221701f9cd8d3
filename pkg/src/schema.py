"""Schema descriptors and relational data ingestion.

A schema descriptor is a JSON document declaring entity types, binary
relationship types backed by CSV files, and optional attribute-value tables.
Every attribute column of an attribute table is treated as an entity type of
its own, linked to the table's key entity type by a one-to-many relationship
type, so downstream code only ever sees entity types and binary relationships.
"""

import csv
import json
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as PydanticValidationError

from src.exceptions import IngestError, SchemaError

logger = logging.getLogger(__name__)

SCHEMA_FILENAME = "schema.json"


# ============================================================================
# DESCRIPTOR DOCUMENT (wire format)
# ============================================================================


class EntityTypeEntry(BaseModel):
    """One entry of ``entity_types``."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)


class RelationshipTypeEntry(BaseModel):
    """One entry of ``relationship_types``."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    left: str = Field(min_length=1)
    right: str = Field(min_length=1)
    file: str = Field(min_length=1)
    left_column: str = Field(min_length=1)
    right_column: str = Field(min_length=1)


class AttributeTableEntry(BaseModel):
    """One entry of ``attribute_tables``."""

    model_config = ConfigDict(extra="forbid")

    file: str = Field(min_length=1)
    key_column: str = Field(min_length=1)
    key_entity: str = Field(min_length=1)
    attribute_columns: list[str] = Field(min_length=1)


class DescriptorDocument(BaseModel):
    """Top-level schema descriptor document."""

    model_config = ConfigDict(extra="forbid")

    entity_types: list[EntityTypeEntry]
    relationship_types: list[RelationshipTypeEntry] = Field(default_factory=list)
    attribute_tables: list[AttributeTableEntry] = Field(default_factory=list)


# ============================================================================
# DOMAIN TYPES
# ============================================================================


@dataclass(frozen=True, slots=True)
class RelationshipType:
    """A binary relationship type between two distinct entity types.

    Attributes:
        name: Unique relationship type name.
        left: Entity type of the left endpoint.
        right: Entity type of the right endpoint.
        file: CSV file holding the instances, relative to the schema file.
        left_column: Header of the column holding left labels.
        right_column: Header of the column holding right labels.
    """

    name: str
    left: str
    right: str
    file: str = ""
    left_column: str = ""
    right_column: str = ""


@dataclass(frozen=True, slots=True)
class AttributeTable:
    """An attribute-value table as declared in the descriptor."""

    file: str
    key_column: str
    key_entity: str
    attribute_columns: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class SchemaDescriptor:
    """Validated schema with attribute tables already expanded.

    Attributes:
        entity_types: Entity type names in declaration order; attribute entity
            types follow the declared ones.
        relationship_types: Declared relationship types followed by the ones
            derived from attribute tables.
        attribute_tables: The attribute tables as declared.
    """

    entity_types: tuple[str, ...]
    relationship_types: tuple[RelationshipType, ...]
    attribute_tables: tuple[AttributeTable, ...] = ()


@dataclass(frozen=True)
class MultiRelationalDatabase:
    """Entity domains and relationship instances.

    Domains keep first-appearance order; instance tuples are duplicate-free
    and also in first-appearance order.
    """

    entity_types: tuple[str, ...]
    relationship_types: tuple[RelationshipType, ...]
    domains: Mapping[str, tuple[str, ...]]
    instances: Mapping[str, tuple[tuple[str, str], ...]] = field(
        default_factory=dict
    )

    def __post_init__(self) -> None:
        for rel in self.relationship_types:
            left = set(self.domains.get(rel.left, ()))
            right = set(self.domains.get(rel.right, ()))
            pairs = self.instances.get(rel.name, ())
            if len(set(pairs)) != len(pairs):
                raise SchemaError(rel.name, "duplicate relationship instances")
            for a, b in pairs:
                if a not in left or b not in right:
                    raise SchemaError(
                        rel.name, f"instance ({a!r}, {b!r}) references unknown labels"
                    )

    @property
    def instance_count(self) -> int:
        """Total number of relationship instances."""
        return sum(len(pairs) for pairs in self.instances.values())


# ============================================================================
# PARSING
# ============================================================================


def parse_schema(descriptor_text: str) -> SchemaDescriptor:
    """Parse and validate a JSON schema descriptor.

    Args:
        descriptor_text: The descriptor document.

    Returns:
        The validated descriptor with attribute tables expanded.

    Raises:
        SchemaError: On malformed JSON, duplicate names, undeclared or equal
            endpoints, duplicate entity type pairs or unresolvable attribute
            entity type names.
    """
    try:
        document = DescriptorDocument.model_validate_json(descriptor_text)
    except PydanticValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "document"
        raise SchemaError(location, first["msg"]) from e

    entity_types = [entry.name for entry in document.entity_types]
    _require_unique(entity_types, "entity_types")
    declared = set(entity_types)

    relationships = [
        RelationshipType(
            name=entry.name,
            left=entry.left,
            right=entry.right,
            file=entry.file,
            left_column=entry.left_column,
            right_column=entry.right_column,
        )
        for entry in document.relationship_types
    ]
    for rel in relationships:
        for endpoint in (rel.left, rel.right):
            if endpoint not in declared:
                raise SchemaError(
                    rel.name, f"endpoint '{endpoint}' is not a declared entity type"
                )

    tables: list[AttributeTable] = []
    attribute_names = _attribute_entity_names(document.attribute_tables, declared)
    for entry in document.attribute_tables:
        if entry.key_entity not in declared:
            raise SchemaError(
                entry.file,
                f"key entity '{entry.key_entity}' is not a declared entity type",
            )
        _require_unique(entry.attribute_columns, f"{entry.file}.attribute_columns")
        tables.append(
            AttributeTable(
                file=entry.file,
                key_column=entry.key_column,
                key_entity=entry.key_entity,
                attribute_columns=tuple(entry.attribute_columns),
            )
        )
        for column in entry.attribute_columns:
            entity = attribute_names[(entry.file, column)]
            entity_types.append(entity)
            relationships.append(
                RelationshipType(
                    name=f"{entry.key_entity}.{entity}",
                    left=entry.key_entity,
                    right=entity,
                    file=entry.file,
                    left_column=entry.key_column,
                    right_column=column,
                )
            )

    _require_unique([rel.name for rel in relationships], "relationship_types")
    pairs: set[frozenset[str]] = set()
    for rel in relationships:
        if rel.left == rel.right:
            raise SchemaError(rel.name, "endpoints must be distinct entity types")
        pair = frozenset((rel.left, rel.right))
        if pair in pairs:
            raise SchemaError(
                rel.name,
                f"entity types '{rel.left}' and '{rel.right}' are already related",
            )
        pairs.add(pair)

    return SchemaDescriptor(
        entity_types=tuple(entity_types),
        relationship_types=tuple(relationships),
        attribute_tables=tuple(tables),
    )


def load_schema(path: Path) -> SchemaDescriptor:
    """Read and parse a schema descriptor file."""
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise IngestError(str(path), "file not found") from e
    except UnicodeDecodeError as e:
        raise IngestError(str(path), "not valid UTF-8") from e
    return parse_schema(text)


def _require_unique(names: Iterable[str], field_name: str) -> None:
    seen: set[str] = set()
    for name in names:
        if name in seen:
            raise SchemaError(field_name, f"duplicate name '{name}'")
        seen.add(name)


def _attribute_entity_names(
    tables: list[AttributeTableEntry], declared: set[str]
) -> dict[tuple[str, str], str]:
    """Name attribute entity types, qualifying them on collision."""
    counts: dict[str, int] = {}
    for table in tables:
        for column in table.attribute_columns:
            counts[column] = counts.get(column, 0) + 1

    names: dict[tuple[str, str], str] = {}
    taken = set(declared)
    for table in tables:
        for column in table.attribute_columns:
            name = column
            if column in declared or counts[column] > 1:
                name = f"{Path(table.file).stem}.{column}"
            if name in taken:
                raise SchemaError(
                    f"{table.file}.{column}",
                    f"attribute entity type name '{name}' collides with an existing "
                    "entity type",
                )
            taken.add(name)
            names[(table.file, column)] = name
    return names


# ============================================================================
# INGESTION
# ============================================================================


def ingest(
    schema: SchemaDescriptor, base_dir: Path = Path(".")
) -> MultiRelationalDatabase:
    """Read every relationship type's CSV file into a database.

    Args:
        schema: The parsed descriptor.
        base_dir: Directory that relative file names are resolved against.

    Returns:
        The database with first-appearance domains and distinct instances.

    Raises:
        IngestError: If a file is missing, unreadable or lacks a column.
    """
    tables: dict[str, tuple[list[str], list[list[str]]]] = {}
    domains: dict[str, dict[str, None]] = {name: {} for name in schema.entity_types}
    instances: dict[str, tuple[tuple[str, str], ...]] = {}

    for rel in schema.relationship_types:
        if rel.file not in tables:
            tables[rel.file] = _read_table(base_dir / rel.file)
        header, rows = tables[rel.file]
        left_at = _column_index(header, rel.left_column, rel.file)
        right_at = _column_index(header, rel.right_column, rel.file)

        pairs: dict[tuple[str, str], None] = {}
        left_domain = domains[rel.left]
        right_domain = domains[rel.right]
        for row in rows:
            left = row[left_at] if left_at < len(row) else ""
            right = row[right_at] if right_at < len(row) else ""
            if left:
                left_domain.setdefault(left)
            if right:
                right_domain.setdefault(right)
            if left and right:
                pairs.setdefault((left, right))
        instances[rel.name] = tuple(pairs)
        logger.debug("Ingested %d instances of '%s'", len(pairs), rel.name)

    return MultiRelationalDatabase(
        entity_types=schema.entity_types,
        relationship_types=schema.relationship_types,
        domains={name: tuple(values) for name, values in domains.items()},
        instances=instances,
    )


def _read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        # utf-8-sig drops a leading byte order mark from the header.
        with path.open(encoding="utf-8-sig", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            rows = list(reader)
    except FileNotFoundError as e:
        raise IngestError(str(path), "file not found") from e
    except UnicodeDecodeError as e:
        raise IngestError(str(path), "not valid UTF-8") from e
    except csv.Error as e:
        raise IngestError(str(path), f"malformed CSV: {e}") from e
    if header is None:
        raise IngestError(str(path), "missing header row")
    if not rows:
        logger.warning("Table %s has no data rows", path)
    return header, rows


def _column_index(header: list[str], column: str, file: str) -> int:
    try:
        return header.index(column)
    except ValueError as e:
        raise IngestError(file, f"missing column '{column}'") from e


# ============================================================================
# EXPORT
# ============================================================================


def write_dataset(mrd: MultiRelationalDatabase, out_dir: Path) -> Path:
    """Write a database as one CSV per relationship type plus a descriptor.

    Returns:
        Path of the written ``schema.json``.
    """
    out_dir.mkdir(parents=True, exist_ok=True)

    # Labels without instances are written as half-empty rows so they survive
    # a re-ingest as isolated nodes.
    unlinked: dict[str, list[str]] = {}
    for name in mrd.entity_types:
        linked = {
            pair[side]
            for rel in mrd.relationship_types
            for side, endpoint in enumerate((rel.left, rel.right))
            if endpoint == name
            for pair in mrd.instances.get(rel.name, ())
        }
        unlinked[name] = [v for v in mrd.domains.get(name, ()) if v not in linked]

    relationship_entries = []
    for rel in mrd.relationship_types:
        file = f"{rel.name}.csv"
        with (out_dir / file).open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow([rel.left, rel.right])
            writer.writerows(mrd.instances.get(rel.name, ()))
            writer.writerows((label, "") for label in unlinked.pop(rel.left, []))
            writer.writerows(("", label) for label in unlinked.pop(rel.right, []))
        relationship_entries.append(
            {
                "name": rel.name,
                "left": rel.left,
                "right": rel.right,
                "file": file,
                "left_column": rel.left,
                "right_column": rel.right,
            }
        )
    document = {
        "entity_types": [{"name": name} for name in mrd.entity_types],
        "relationship_types": relationship_entries,
    }
    schema_path = out_dir / SCHEMA_FILENAME
    schema_path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    return schema_path
