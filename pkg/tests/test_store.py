"""Round-trip and validation tests for the on-disk formats."""

import numpy as np
import pytest

from divland.evolve import (
    ArchiveEntry,
    MutationConfig,
    ObjectiveVector,
    ParetoArchive,
    mutate,
    random_genome,
)
from divland.store import (
    StoreError,
    genome_from_dict,
    genome_to_dict,
    load_archive,
    load_genome,
    read_json,
    read_table,
    save_archive,
    save_genome,
    write_json,
    write_table,
)

from conftest import make_genome


def gnarly_genome(rng):
    """A genome whose floats exercise the full mantissa."""
    g = random_genome(3, rng)
    for _ in range(5):
        g = mutate(g, MutationConfig(p_mut=1.0), rng)
    return g


def small_archive(rng, n=8, seed=0):
    archive = ParetoArchive()
    archive.absorb([
        ArchiveEntry(
            genome=gnarly_genome(rng),
            objectives=ObjectiveVector(*rng.random(4)),
            individual_id=i,
            generation=i // 3,
            lineage=None if i == 0 else i - 1,
            seed=seed,
        )
        for i in range(n)
    ])
    return archive


class TestJson:
    def test_identical_bytes_regardless_of_key_order(self, tmp_path):
        write_json(tmp_path / "a.json", {"b": 1, "a": [1.5, None, True]})
        write_json(tmp_path / "b.json", {"a": [1.5, None, True], "b": 1})
        a = (tmp_path / "a.json").read_bytes()
        assert a == (tmp_path / "b.json").read_bytes()
        assert a.endswith(b"\n")

    def test_read_back(self, tmp_path):
        write_json(tmp_path / "x.json", {"k": [1, 2.5]})
        assert read_json(tmp_path / "x.json") == {"k": [1, 2.5]}

    def test_invalid_json_names_the_file(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(StoreError, match="broken.json"):
            read_json(p)


class TestGenomeDocuments:
    def test_dict_round_trip_is_float_exact(self, rng):
        g = gnarly_genome(rng)
        assert genome_from_dict(genome_to_dict(g)) == g

    def test_file_round_trip_is_float_exact(self, tmp_path, rng):
        g = gnarly_genome(rng)
        save_genome(tmp_path / "g.json", g)
        assert load_genome(tmp_path / "g.json") == g

    def test_awkward_float_survives(self, tmp_path):
        g = make_genome(w_in=((0.1 + 0.2,), (1e-17,), (-0.30000000000000004,), (3.0,)))
        save_genome(tmp_path / "g.json", g)
        assert load_genome(tmp_path / "g.json") == g

    def test_wrong_format_tag_rejected(self):
        doc = genome_to_dict(make_genome())
        doc["format"] = "something-else"
        with pytest.raises(ValueError, match="not a genome"):
            genome_from_dict(doc)

    def test_wrong_version_rejected(self):
        doc = genome_to_dict(make_genome())
        doc["version"] = 999
        with pytest.raises(ValueError, match="version"):
            genome_from_dict(doc)

    def test_missing_field_rejected(self):
        doc = genome_to_dict(make_genome())
        del doc["decoder"]
        with pytest.raises(ValueError, match="malformed"):
            genome_from_dict(doc)

    def test_loading_a_non_genome_file_raises_store_error(self, tmp_path):
        p = tmp_path / "other.json"
        write_json(p, {"format": "unrelated", "version": 1})
        with pytest.raises(StoreError, match="other.json"):
            load_genome(p)


class TestTables:
    def test_round_trip_preserves_floats_exactly(self, tmp_path, rng):
        values = [float(x) for x in rng.normal(size=6)] + [0.1, 1e-300, 12345.0]
        rows = [[i, v] for i, v in enumerate(values)]
        write_table(tmp_path / "t.csv", ["i", "x"], rows)
        header, out = read_table(tmp_path / "t.csv")
        assert header == ["i", "x"]
        assert [float(r[1]) for r in out] == values
        assert [int(r[0]) for r in out] == list(range(len(values)))

    def test_bools_and_missing_values(self, tmp_path):
        write_table(tmp_path / "t.csv", ["a", "b", "c"], [[True, None, False]])
        _, rows = read_table(tmp_path / "t.csv")
        assert rows == [["true", "", "false"]]

    def test_empty_file_rejected(self, tmp_path):
        (tmp_path / "empty.csv").write_text("")
        with pytest.raises(StoreError, match="empty"):
            read_table(tmp_path / "empty.csv")


class TestArchiveStore:
    def test_round_trip_preserves_members_exactly(self, tmp_path, rng):
        archive = small_archive(rng)
        save_archive(tmp_path / "arch", archive)
        loaded = load_archive(tmp_path / "arch")
        assert loaded.objective_mask == archive.objective_mask
        assert loaded.members == archive.members

    def test_mask_round_trips(self, tmp_path, rng):
        archive = ParetoArchive(objective_mask=(True, True, True, False))
        archive.absorb([
            ArchiveEntry(
                genome=make_genome(),
                objectives=ObjectiveVector(1.0, 1.0, 1.0, float(k)),
                individual_id=k,
                generation=0,
                lineage=None,
                seed=0,
            )
            for k in range(3)
        ])
        save_archive(tmp_path / "arch", archive)
        assert load_archive(tmp_path / "arch").objective_mask == archive.objective_mask

    def test_save_is_byte_deterministic(self, tmp_path, rng):
        archive = small_archive(rng)
        save_archive(tmp_path / "one", archive)
        save_archive(tmp_path / "two", archive)
        for rel in ("archive.json", "members.csv"):
            assert (tmp_path / "one" / rel).read_bytes() == \
                (tmp_path / "two" / rel).read_bytes()
        ga = sorted(p.name for p in (tmp_path / "one" / "genomes").iterdir())
        gb = sorted(p.name for p in (tmp_path / "two" / "genomes").iterdir())
        assert ga == gb
        for name in ga:
            assert (tmp_path / "one" / "genomes" / name).read_bytes() == \
                (tmp_path / "two" / "genomes" / name).read_bytes()

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(StoreError, match="manifest"):
            load_archive(tmp_path)

    def test_foreign_manifest_rejected(self, tmp_path):
        write_json(tmp_path / "archive.json", {"format": "other", "version": 1})
        with pytest.raises(StoreError, match="not an archive"):
            load_archive(tmp_path)

    def test_future_version_rejected(self, tmp_path, rng):
        save_archive(tmp_path, small_archive(rng, n=2))
        doc = read_json(tmp_path / "archive.json")
        doc["version"] = 99
        write_json(tmp_path / "archive.json", doc)
        with pytest.raises(StoreError, match="version"):
            load_archive(tmp_path)

    def test_tampered_columns_rejected(self, tmp_path, rng):
        save_archive(tmp_path, small_archive(rng, n=2))
        table = tmp_path / "members.csv"
        lines = table.read_text().splitlines()
        lines[0] = lines[0].replace("touchdown_speed", "speed")
        table.write_text("\n".join(lines) + "\n")
        with pytest.raises(StoreError, match="columns"):
            load_archive(tmp_path)

    def test_non_numeric_objective_rejected(self, tmp_path, rng):
        save_archive(tmp_path, small_archive(rng, n=2))
        table = tmp_path / "members.csv"
        header, rows = read_table(table)
        rows[0][4] = "fast"
        write_table(table, header, rows)
        with pytest.raises(StoreError, match="bad row"):
            load_archive(tmp_path)

    def test_dominated_member_on_disk_rejected(self, tmp_path, rng):
        archive = ParetoArchive()
        archive.absorb([ArchiveEntry(
            genome=make_genome(),
            objectives=ObjectiveVector(1.0, 1.0, 1.0, 1.0),
            individual_id=0,
            generation=0,
            lineage=None,
            seed=0,
        )])
        save_archive(tmp_path, archive)
        header, rows = read_table(tmp_path / "members.csv")
        worse = list(rows[0])
        worse[0] = "1"
        worse[4:8] = ["2.0", "2.0", "2.0", "2.0"]
        write_table(tmp_path / "members.csv", header, rows + [worse])
        with pytest.raises(StoreError, match="non-dominated"):
            load_archive(tmp_path)

    def test_lineage_none_round_trips(self, tmp_path):
        archive = ParetoArchive()
        archive.absorb([
            ArchiveEntry(genome=make_genome(), objectives=ObjectiveVector(1.0, 2.0, 1.0, 1.0),
                         individual_id=0, generation=0, lineage=None, seed=0),
            ArchiveEntry(genome=make_genome(), objectives=ObjectiveVector(2.0, 1.0, 1.0, 1.0),
                         individual_id=5, generation=1, lineage=7, seed=0),
        ])
        save_archive(tmp_path, archive)
        by_id = {e.individual_id: e for e in load_archive(tmp_path).members}
        assert by_id[0].lineage is None
        assert by_id[5].lineage == 7
