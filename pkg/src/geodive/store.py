"""Embedding dataset store.

Datasets are immutable after construction: the vector matrix is marked
read-only and all metadata lives in tuples. Slicing returns new datasets and
never mutates. The on-disk layout (documented in docs/file-formats.md) is a
one-line JSON header, a tab-delimited metadata block, then the raw
little-endian float32 payload; load(write(ds)) reproduces ds bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
import os
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError

MAGIC = "GEODIVE-EMB/1"
METADATA_COLUMNS = ("id", "source", "object", "region", "country", "prompt_kind", "prompt_text")
PROMPT_KINDS = ("object", "object_in_region", "object_in_country", "none")
SOURCES = ("real", "generated")

_FORBIDDEN_CHARS = ("\t", "\n", "\r")


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class EmbeddingRecord:
    """One image's feature vector plus its grouping metadata."""

    id: str
    vector: np.ndarray
    object: str
    region: str
    country: str | None
    prompt_kind: str
    prompt_text: str | None
    source: str

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.object == other.object
            and self.region == other.region
            and self.country == other.country
            and self.prompt_kind == other.prompt_kind
            and self.prompt_text == other.prompt_text
            and self.source == other.source
            and self.vector.tobytes() == other.vector.tobytes()
        )


@dataclass(frozen=True, eq=False)
class EmbeddingDataset:
    """Ordered, immutable collection of embedding records of one dimension.

    ``vectors`` is an (n, dim) float32 matrix; row i belongs to the record
    described by position i of every metadata tuple.
    """

    vectors: np.ndarray
    ids: tuple[str, ...]
    sources: tuple[str, ...]
    objects: tuple[str, ...]
    regions: tuple[str, ...]
    countries: tuple[str | None, ...]
    prompt_kinds: tuple[str, ...]
    prompt_texts: tuple[str | None, ...]
    label: str = ""

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise DataError(f"vectors must be a 2-D matrix, got shape {vectors.shape}")
        vectors = np.ascontiguousarray(vectors)
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        _validate_columns(self)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingDataset):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.label == other.label
            and self.ids == other.ids
            and self.sources == other.sources
            and self.objects == other.objects
            and self.regions == other.regions
            and self.countries == other.countries
            and self.prompt_kinds == other.prompt_kinds
            and self.prompt_texts == other.prompt_texts
            and self.vectors.tobytes() == other.vectors.tobytes()
        )

    def record(self, i: int) -> EmbeddingRecord:
        return EmbeddingRecord(
            id=self.ids[i],
            vector=self.vectors[i],
            object=self.objects[i],
            region=self.regions[i],
            country=self.countries[i],
            prompt_kind=self.prompt_kinds[i],
            prompt_text=self.prompt_texts[i],
            source=self.sources[i],
        )

    def __iter__(self) -> Iterator[EmbeddingRecord]:
        return (self.record(i) for i in range(len(self)))

    def take(self, indices: Sequence[int] | np.ndarray) -> "EmbeddingDataset":
        """New dataset holding the rows at ``indices``, in the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        pick = lambda col: tuple(col[i] for i in idx)  # noqa: E731
        return EmbeddingDataset(
            vectors=self.vectors[idx],
            ids=pick(self.ids),
            sources=pick(self.sources),
            objects=pick(self.objects),
            regions=pick(self.regions),
            countries=pick(self.countries),
            prompt_kinds=pick(self.prompt_kinds),
            prompt_texts=pick(self.prompt_texts),
            label=self.label,
        )

    def slice(self, **criteria: str | None) -> "EmbeddingDataset":
        """Records whose metadata fields equal every given criterion.

        Accepted keys: id, source, object, region, country, prompt_kind,
        prompt_text. Order is preserved; an empty result is legal.
        """
        columns = {
            "id": self.ids,
            "source": self.sources,
            "object": self.objects,
            "region": self.regions,
            "country": self.countries,
            "prompt_kind": self.prompt_kinds,
            "prompt_text": self.prompt_texts,
        }
        unknown = sorted(set(criteria) - set(columns))
        if unknown:
            raise ValueError(f"unknown slice fields: {unknown}")
        indices = [
            i
            for i in range(len(self))
            if all(columns[key][i] == value for key, value in criteria.items())
        ]
        return self.take(indices)

    def object_counts(self) -> dict[str, int]:
        return dict(Counter(self.objects))

    def cell_counts(self) -> dict[tuple[str, str], int]:
        return dict(Counter(zip(self.objects, self.regions)))

    def with_regions(self, regions: Sequence[str]) -> "EmbeddingDataset":
        """Copy of the dataset with the region column replaced."""
        if len(regions) != len(self):
            raise ValueError("region column length mismatch")
        return EmbeddingDataset(
            vectors=self.vectors,
            ids=self.ids,
            sources=self.sources,
            objects=self.objects,
            regions=tuple(_nfc(r) for r in regions),
            countries=self.countries,
            prompt_kinds=self.prompt_kinds,
            prompt_texts=self.prompt_texts,
            label=self.label,
        )

    def content_digest(self) -> str:
        """SHA-256 of the canonical serialized form (hex)."""
        return hashlib.sha256(dataset_bytes(self)).hexdigest()


def _validate_columns(ds: EmbeddingDataset) -> None:
    n = len(ds)
    for name in ("ids", "sources", "objects", "regions", "countries", "prompt_kinds", "prompt_texts"):
        col = getattr(ds, name)
        if not isinstance(col, tuple):
            raise DataError(f"{name} must be a tuple")
        if len(col) != n:
            raise DataError(f"{name} has {len(col)} entries for {n} vectors")
    for i, source in enumerate(ds.sources):
        if source not in SOURCES:
            raise DataError(f"record {i}: unknown source {source!r}")
    for i, kind in enumerate(ds.prompt_kinds):
        if kind not in PROMPT_KINDS:
            raise DataError(f"record {i}: unknown prompt_kind {kind!r}")
        if kind == "object_in_country" and ds.countries[i] is None:
            raise DataError(f"record {i}: prompt_kind object_in_country requires a country")
    if n and not np.isfinite(ds.vectors).all():
        bad = int(np.flatnonzero(~np.isfinite(ds.vectors).all(axis=1))[0])
        raise DataError(f"record {bad} (id {ds.ids[bad]!r}): vector contains a non-finite value")
    seen: dict[str, int] = {}
    for i, rid in enumerate(ds.ids):
        if rid in seen:
            raise DataError(f"record {i}: duplicate id {rid!r} (first seen at record {seen[rid]})")
        seen[rid] = i


def dataset_from_rows(
    vectors: np.ndarray,
    rows: Sequence[Sequence[str | None]],
    label: str = "",
) -> EmbeddingDataset:
    """Build a dataset from a vector matrix and metadata rows.

    Each row is (id, source, object, region, country-or-None, prompt_kind,
    prompt_text-or-None). Strings are NFC-normalized so grouping is
    deterministic.
    """
    norm = lambda v: None if v is None else _nfc(v)  # noqa: E731
    return EmbeddingDataset(
        vectors=vectors,
        ids=tuple(_nfc(r[0]) for r in rows),
        sources=tuple(_nfc(r[1]) for r in rows),
        objects=tuple(_nfc(r[2]) for r in rows),
        regions=tuple(_nfc(r[3]) for r in rows),
        countries=tuple(norm(r[4]) for r in rows),
        prompt_kinds=tuple(_nfc(r[5]) for r in rows),
        prompt_texts=tuple(norm(r[6]) for r in rows),
        label=_nfc(label),
    )


def _header_bytes(ds: EmbeddingDataset) -> bytes:
    header = {
        "magic": MAGIC,
        "dim": ds.dim,
        "count": len(ds),
        "label": ds.label,
        "columns": list(METADATA_COLUMNS),
    }
    return json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n"


def _metadata_row(ds: EmbeddingDataset, i: int) -> bytes:
    fields = (
        ds.ids[i],
        ds.sources[i],
        ds.objects[i],
        ds.regions[i],
        ds.countries[i] or "",
        ds.prompt_kinds[i],
        ds.prompt_texts[i] or "",
    )
    for name, value in zip(METADATA_COLUMNS, fields):
        if any(ch in value for ch in _FORBIDDEN_CHARS):
            raise DataError(f"record {i}: field {name} contains a tab or newline")
    return "\t".join(fields).encode("utf-8") + b"\n"


def dataset_bytes(ds: EmbeddingDataset) -> bytes:
    """Canonical serialized form: header line, metadata block, float payload."""
    parts = [_header_bytes(ds)]
    parts.extend(_metadata_row(ds, i) for i in range(len(ds)))
    parts.append(np.ascontiguousarray(ds.vectors, dtype="<f4").tobytes())
    return b"".join(parts)


def write_dataset(ds: EmbeddingDataset, path: str | Path) -> None:
    """Persist ``ds`` so that load_dataset(path) reproduces it exactly."""
    atomic_write_bytes(Path(path), dataset_bytes(ds))


def load_dataset(path: str | Path) -> EmbeddingDataset:
    """Load and validate an embedding file.

    Raises DataError naming the offending record for malformed headers,
    header/payload size mismatches, non-finite values, and duplicate ids.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    cut = raw.find(b"\n")
    if cut < 0:
        raise DataError(f"{path}: malformed header (no newline found)")
    try:
        header = json.loads(raw[:cut].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed header ({exc})") from exc
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise DataError(f"{path}: malformed header (expected magic {MAGIC!r})")
    dim, count = header.get("dim"), header.get("count")
    if not isinstance(dim, int) or not isinstance(count, int) or dim < 0 or count < 0:
        raise DataError(f"{path}: malformed header (dim/count must be non-negative integers)")
    if header.get("columns") != list(METADATA_COLUMNS):
        raise DataError(f"{path}: malformed header (columns must be {list(METADATA_COLUMNS)})")
    label = header.get("label", "")
    if not isinstance(label, str):
        raise DataError(f"{path}: malformed header (label must be a string)")

    pos = cut + 1
    rows: list[tuple[str | None, ...]] = []
    for i in range(count):
        end = raw.find(b"\n", pos)
        if end < 0:
            raise DataError(f"{path}: record {i}: metadata block truncated")
        try:
            line = raw[pos:end].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"{path}: record {i}: metadata is not valid UTF-8") from exc
        fields = line.split("\t")
        if len(fields) != len(METADATA_COLUMNS):
            raise DataError(
                f"{path}: record {i}: expected {len(METADATA_COLUMNS)} metadata fields, got {len(fields)}"
            )
        rid, source, obj, region, country, kind, text = fields
        rows.append((rid, source, obj, region, country or None, kind, text or None))
        pos = end + 1

    payload = raw[pos:]
    expected = count * dim * 4
    if len(payload) != expected:
        have = len(payload) // (dim * 4) if dim else 0
        raise DataError(
            f"{path}: payload holds {have} complete records but header declares {count} "
            f"of dim {dim} (record {min(have, max(count - 1, 0))} is the first affected)"
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    return dataset_from_rows(vectors, rows, label=label)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a temp file and rename, so readers never see partial output."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    finally:
        if tmp.exists():
            try:
                tmp.unlink()
            except OSError:
                pass


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
