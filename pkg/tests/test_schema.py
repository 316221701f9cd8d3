"""Tests for schema descriptors and ingestion."""

import json
from pathlib import Path

import pytest

from src.exceptions import IngestError, SchemaError
from src.schema import ingest, load_schema, parse_schema, write_dataset
from tests.conftest import FIXTURES


def descriptor(**overrides: object) -> str:
    """FIXTURE-M descriptor text with optional top-level overrides."""
    document: dict[str, object] = json.loads(
        (FIXTURES / "fixture_m" / "schema.json").read_text(encoding="utf-8")
    )
    document.update(overrides)
    return json.dumps(document)


class TestParseSchema:
    """Tests for parse_schema."""

    def test_declared_types_are_kept_in_order(self) -> None:
        """Three entity types and two relationship types."""
        schema = parse_schema(descriptor())

        assert schema.entity_types == ("title", "genre", "year")
        assert [r.name for r in schema.relationship_types] == ["of_genre", "film_year"]

    def test_attribute_table_expands_to_entity_types(self) -> None:
        """Each attribute column becomes an entity type linked to the key."""
        schema = load_schema(FIXTURES / "attributes" / "schema.json")

        assert schema.entity_types == ("row", "A", "B")
        rels = {r.name: r for r in schema.relationship_types}
        assert set(rels) == {"row.A", "row.B"}
        assert rels["row.A"].left == "row"
        assert rels["row.A"].right_column == "A"

    def test_undeclared_endpoint_raises_error(self) -> None:
        """A relationship type may only use declared entity types."""
        text = descriptor(
            relationship_types=[
                {
                    "name": "directed",
                    "left": "title",
                    "right": "director",
                    "file": "d.csv",
                    "left_column": "title",
                    "right_column": "director",
                }
            ]
        )

        with pytest.raises(SchemaError, match="director"):
            parse_schema(text)

    def test_duplicate_entity_type_raises_error(self) -> None:
        """Entity type names must be unique."""
        with pytest.raises(SchemaError, match="duplicate"):
            parse_schema(descriptor(entity_types=[{"name": "a"}, {"name": "a"}]))

    def test_malformed_json_raises_error(self) -> None:
        """Invalid JSON is a schema error."""
        with pytest.raises(SchemaError):
            parse_schema("{not json")

    def test_missing_key_raises_error(self) -> None:
        """entity_types is required."""
        with pytest.raises(SchemaError):
            parse_schema(json.dumps({"relationship_types": []}))

    def test_self_relationship_raises_error(self) -> None:
        """Both endpoints of a relationship type must differ."""
        text = descriptor(
            relationship_types=[
                {
                    "name": "sequel",
                    "left": "title",
                    "right": "title",
                    "file": "s.csv",
                    "left_column": "a",
                    "right_column": "b",
                }
            ]
        )

        with pytest.raises(SchemaError, match="distinct"):
            parse_schema(text)

    def test_second_relationship_on_same_pair_raises_error(self) -> None:
        """At most one relationship type per pair of entity types."""
        rel = {
            "left": "genre",
            "right": "title",
            "file": "x.csv",
            "left_column": "g",
            "right_column": "t",
        }
        document = json.loads(descriptor())
        document["relationship_types"].append({"name": "again", **rel})

        with pytest.raises(SchemaError, match="already related"):
            parse_schema(json.dumps(document))

    def test_attribute_name_colliding_with_entity_type_is_qualified(self) -> None:
        """A column named like a declared type falls back to table.column."""
        text = json.dumps(
            {
                "entity_types": [{"name": "movie"}, {"name": "year"}],
                "attribute_tables": [
                    {
                        "file": "movies.csv",
                        "key_column": "id",
                        "key_entity": "movie",
                        "attribute_columns": ["year", "rating"],
                    }
                ],
            }
        )

        schema = parse_schema(text)

        assert schema.entity_types == ("movie", "year", "movies.year", "rating")

    def test_unresolvable_attribute_name_raises_error(self) -> None:
        """If the qualified name is taken as well, parsing fails."""
        text = json.dumps(
            {
                "entity_types": [
                    {"name": "movie"},
                    {"name": "year"},
                    {"name": "movies.year"},
                ],
                "attribute_tables": [
                    {
                        "file": "movies.csv",
                        "key_column": "id",
                        "key_entity": "movie",
                        "attribute_columns": ["year"],
                    }
                ],
            }
        )

        with pytest.raises(SchemaError, match="collides"):
            parse_schema(text)


class TestIngest:
    """Tests for ingest."""

    def test_fixture_m_domains_and_instances(self) -> None:
        """Eight nodes over three domains and eight instances."""
        schema = load_schema(FIXTURES / "fixture_m" / "schema.json")

        mrd = ingest(schema, FIXTURES / "fixture_m")

        assert set(mrd.domains["title"]) == {"T1", "T2", "T3"}
        assert set(mrd.domains["genre"]) == {"Comedy", "Drama", "History"}
        assert set(mrd.domains["year"]) == {"2009", "2010"}
        assert mrd.instance_count == 8

    def test_duplicate_rows_give_one_instance(self, tmp_path: Path) -> None:
        """Relationship instances are deduplicated."""
        (tmp_path / "of_genre.csv").write_text(
            "title,genre\nT1,Drama\nT1,Drama\n", encoding="utf-8"
        )
        (tmp_path / "film_year.csv").write_text(
            "title,year\nT1,2010\n", encoding="utf-8"
        )

        mrd = ingest(parse_schema(descriptor()), tmp_path)

        assert mrd.instances["of_genre"] == (("T1", "Drama"),)

    def test_attribute_table_is_one_to_many(self) -> None:
        """Key and attribute values co-occurring in a row are linked."""
        schema = load_schema(FIXTURES / "attributes" / "schema.json")

        mrd = ingest(schema, FIXTURES / "attributes")

        assert mrd.instances["row.A"] == (("PK1", "A1"), ("PK2", "A1"), ("PK3", "A2"))
        assert mrd.domains["A"] == ("A1", "A2")
        # PK3 has an empty B value: no instance, but the key still exists.
        assert mrd.instances["row.B"] == (("PK1", "B1"), ("PK2", "B1"))
        assert mrd.domains["B"] == ("B1",)

    def test_attribute_table_equals_expanded_pair_files(self, tmp_path: Path) -> None:
        """Ingesting an attribute table equals ingesting its pair-file form."""
        (tmp_path / "a.csv").write_text(
            "pk,A\nPK1,A1\nPK2,A1\nPK3,A2\n", encoding="utf-8"
        )
        (tmp_path / "b.csv").write_text(
            "pk,B\nPK1,B1\nPK2,B1\nPK3,\n", encoding="utf-8"
        )
        text = json.dumps(
            {
                "entity_types": [{"name": "row"}, {"name": "A"}, {"name": "B"}],
                "relationship_types": [
                    {
                        "name": "row.A",
                        "left": "row",
                        "right": "A",
                        "file": "a.csv",
                        "left_column": "pk",
                        "right_column": "A",
                    },
                    {
                        "name": "row.B",
                        "left": "row",
                        "right": "B",
                        "file": "b.csv",
                        "left_column": "pk",
                        "right_column": "B",
                    },
                ],
            }
        )

        expanded = ingest(parse_schema(text), tmp_path)
        attributes = FIXTURES / "attributes"
        direct = ingest(load_schema(attributes / "schema.json"), attributes)

        assert expanded.domains == direct.domains
        assert expanded.instances == direct.instances

    def test_ingest_is_deterministic(self) -> None:
        """Ingesting the same files twice gives identical databases."""
        schema = load_schema(FIXTURES / "fixture_m" / "schema.json")

        first = ingest(schema, FIXTURES / "fixture_m")
        second = ingest(schema, FIXTURES / "fixture_m")

        assert first == second

    def test_missing_file_raises_error(self, tmp_path: Path) -> None:
        """Every referenced file must exist."""
        with pytest.raises(IngestError, match="not found"):
            ingest(parse_schema(descriptor()), tmp_path)

    def test_missing_column_raises_error(self, tmp_path: Path) -> None:
        """Declared columns must be present in the header."""
        (tmp_path / "of_genre.csv").write_text(
            "title,kind\nT1,Drama\n", encoding="utf-8"
        )
        (tmp_path / "film_year.csv").write_text(
            "title,year\nT1,2010\n", encoding="utf-8"
        )

        with pytest.raises(IngestError, match="genre"):
            ingest(parse_schema(descriptor()), tmp_path)

    def test_zero_row_table_gives_empty_sets(
        self, tmp_path: Path, caplog: pytest.LogCaptureFixture
    ) -> None:
        """A header-only table only logs a warning."""
        (tmp_path / "of_genre.csv").write_text("title,genre\n", encoding="utf-8")
        (tmp_path / "film_year.csv").write_text("title,year\n", encoding="utf-8")

        mrd = ingest(parse_schema(descriptor()), tmp_path)

        assert mrd.instance_count == 0
        assert all(values == () for values in mrd.domains.values())
        assert "no data rows" in caplog.text

    def test_quoted_fields_are_unquoted(self, tmp_path: Path) -> None:
        """RFC-4180 quoting is honoured; values are not trimmed."""
        (tmp_path / "of_genre.csv").write_text(
            'title,genre\n"T,1","Sci-Fi "\n', encoding="utf-8"
        )
        (tmp_path / "film_year.csv").write_text("title,year\n", encoding="utf-8")

        mrd = ingest(parse_schema(descriptor()), tmp_path)

        assert mrd.instances["of_genre"] == (("T,1", "Sci-Fi "),)

    def test_byte_order_mark_is_ignored(self, tmp_path: Path) -> None:
        """A spreadsheet BOM does not end up in the first column name."""
        (tmp_path / "of_genre.csv").write_text(
            "title,genre\nT1,Drama\n", encoding="utf-8-sig"
        )
        (tmp_path / "film_year.csv").write_bytes(b"\xef\xbb\xbftitle,year\nT1,2010\n")

        mrd = ingest(parse_schema(descriptor()), tmp_path)

        assert mrd.instances["of_genre"] == (("T1", "Drama"),)
        assert mrd.instances["film_year"] == (("T1", "2010"),)


class TestWriteDataset:
    """Tests for write_dataset."""

    def test_written_dataset_ingests_back_unchanged(self, tmp_path: Path) -> None:
        """Writing then ingesting preserves domains and instances."""
        original = ingest(
            load_schema(FIXTURES / "fixture_m" / "schema.json"), FIXTURES / "fixture_m"
        )

        schema_path = write_dataset(original, tmp_path)
        again = ingest(load_schema(schema_path), tmp_path)

        assert {k: set(v) for k, v in again.domains.items()} == {
            k: set(v) for k, v in original.domains.items()
        }
        assert {k: set(v) for k, v in again.instances.items()} == {
            k: set(v) for k, v in original.instances.items()
        }
