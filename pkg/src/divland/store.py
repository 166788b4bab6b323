"""On-disk formats: genome documents, archive directories, run manifests,
and delimited text tables.

Everything written here is deterministic byte-for-byte given the same data:
keys are sorted, floats use their shortest exact representation, and no
timestamps or host details are recorded.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .evolve import OBJECTIVE_NAMES, ArchiveEntry, ObjectiveVector, ParetoArchive
from .network import DecoderParams, Genome, NeuronParams

__all__ = [
    "GENOME_FORMAT",
    "ARCHIVE_FORMAT",
    "RUN_FORMAT",
    "FORMAT_VERSION",
    "StoreError",
    "genome_to_dict",
    "genome_from_dict",
    "save_genome",
    "load_genome",
    "write_table",
    "read_table",
    "write_json",
    "read_json",
    "save_archive",
    "load_archive",
]

GENOME_FORMAT = "divland-genome"
ARCHIVE_FORMAT = "divland-archive"
RUN_FORMAT = "divland-run"
FORMAT_VERSION = 1

ARCHIVE_MANIFEST_NAME = "archive.json"
MEMBERS_TABLE_NAME = "members.csv"
GENOME_DIR_NAME = "genomes"


class StoreError(ValueError):
    """A document failed to parse or validate; the message names the file."""


_NEURON_FIELDS = ("alpha_mem", "tau_mem", "alpha_thresh", "tau_thresh", "thresh_init")
_DECODER_FIELDS = ("alpha_trace", "tau_trace", "out_min", "out_max")


def _neuron_to_dict(p: NeuronParams) -> dict:
    return {name: getattr(p, name) for name in _NEURON_FIELDS}


def genome_to_dict(genome: Genome) -> dict:
    return {
        "format": GENOME_FORMAT,
        "version": FORMAT_VERSION,
        "n_hidden": genome.n_hidden,
        "w_in": [list(row) for row in genome.w_in],
        "w_out": list(genome.w_out),
        "hidden_neurons": [_neuron_to_dict(p) for p in genome.hidden_neurons],
        "output_neuron": _neuron_to_dict(genome.output_neuron),
        "decoder": {name: getattr(genome.decoder, name) for name in _DECODER_FIELDS},
    }


def genome_from_dict(doc: dict) -> Genome:
    if not isinstance(doc, dict):
        raise ValueError("genome document must be a mapping")
    if doc.get("format") != GENOME_FORMAT:
        raise ValueError(f"not a genome document (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported genome version {doc.get('version')!r}")
    try:
        return Genome(
            n_hidden=doc["n_hidden"],
            w_in=tuple(tuple(row) for row in doc["w_in"]),
            w_out=tuple(doc["w_out"]),
            hidden_neurons=tuple(
                NeuronParams(**{k: n[k] for k in _NEURON_FIELDS})
                for n in doc["hidden_neurons"]
            ),
            output_neuron=NeuronParams(
                **{k: doc["output_neuron"][k] for k in _NEURON_FIELDS}
            ),
            decoder=DecoderParams(**{k: doc["decoder"][k] for k in _DECODER_FIELDS}),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed genome document: {exc}") from exc


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise StoreError(f"{path}: invalid JSON ({exc})") from exc


def save_genome(path, genome: Genome) -> None:
    write_json(path, genome_to_dict(genome))


def load_genome(path) -> Genome:
    doc = read_json(path)
    try:
        return genome_from_dict(doc)
    except ValueError as exc:
        raise StoreError(f"{path}: {exc}") from exc


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(float(value))  # builtin repr even for numpy scalars
    if value is None:
        return ""
    return str(value)


def write_table(path, header, rows) -> None:
    """CSV with exact float round-tripping (shortest repr)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise StoreError(f"{path}: empty table") from None
        return header, [row for row in reader]


def _member_filename(entry: ArchiveEntry) -> str:
    return f"genome_s{entry.seed}_g{entry.generation:04d}_i{entry.individual_id:06d}.json"


def save_archive(dir_path, archive: ParetoArchive) -> None:
    """Write an archive directory: manifest, members table, genome files."""
    root = Path(dir_path)
    genome_dir = root / GENOME_DIR_NAME
    genome_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for entry in archive.members:
        fname = _member_filename(entry)
        save_genome(genome_dir / fname, entry.genome)
        rows.append([
            entry.individual_id,
            entry.generation,
            entry.lineage,
            entry.seed,
            *entry.objectives.as_tuple(),
            f"{GENOME_DIR_NAME}/{fname}",
        ])
    write_table(
        root / MEMBERS_TABLE_NAME,
        ["id", "generation", "lineage", "seed", *OBJECTIVE_NAMES, "genome_file"],
        rows,
    )
    write_json(root / ARCHIVE_MANIFEST_NAME, {
        "format": ARCHIVE_FORMAT,
        "version": FORMAT_VERSION,
        "objective_mask": list(archive.objective_mask),
        "size": len(archive),
    })


def load_archive(dir_path) -> ParetoArchive:
    root = Path(dir_path)
    manifest_path = root / ARCHIVE_MANIFEST_NAME
    if not manifest_path.exists():
        raise StoreError(f"{manifest_path}: no archive manifest found")
    manifest = read_json(manifest_path)
    if manifest.get("format") != ARCHIVE_FORMAT:
        raise StoreError(f"{manifest_path}: not an archive manifest")
    if manifest.get("version") != FORMAT_VERSION:
        raise StoreError(f"{manifest_path}: unsupported version {manifest.get('version')!r}")
    header, rows = read_table(root / MEMBERS_TABLE_NAME)
    expected = ["id", "generation", "lineage", "seed", *OBJECTIVE_NAMES, "genome_file"]
    if header != expected:
        raise StoreError(f"{root / MEMBERS_TABLE_NAME}: unexpected columns {header}")
    entries = []
    for row in rows:
        try:
            ident, generation, lineage, seed = row[0], row[1], row[2], row[3]
            objectives = ObjectiveVector(*(float(x) for x in row[4:8]))
            genome = load_genome(root / row[8])
            entries.append(ArchiveEntry(
                genome=genome,
                objectives=objectives,
                individual_id=int(ident),
                generation=int(generation),
                lineage=None if lineage == "" else int(lineage),
                seed=int(seed),
            ))
        except (IndexError, ValueError) as exc:
            if isinstance(exc, StoreError):
                raise
            raise StoreError(f"{root / MEMBERS_TABLE_NAME}: bad row {row!r} ({exc})") from exc
    archive = ParetoArchive(manifest["objective_mask"])
    archive.absorb(entries)
    if len(archive) != len(entries):
        raise StoreError(f"{root}: stored members are not mutually non-dominated")
    return archive
