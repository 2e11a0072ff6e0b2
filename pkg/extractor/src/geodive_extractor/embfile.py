"""Writer for the GEODIVE-EMB/1 embedding interchange format.

This is an independent implementation of the byte layout documented in the
engine repo (docs/file-formats.md): one compact JSON header line, one
tab-delimited metadata row per record, then little-endian float32 vectors in
record order. Files written here must pass the engine's `validate` command
bit-for-bit.
"""

from __future__ import annotations

import json
import os
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = "GEODIVE-EMB/1"
COLUMNS = ("id", "source", "object", "region", "country", "prompt_kind", "prompt_text")
PROMPT_KINDS = ("object", "object_in_region", "object_in_country", "none")
SOURCES = ("real", "generated")


@dataclass(frozen=True)
class Row:
    """Metadata of one embedding record."""

    id: str
    source: str
    object: str
    region: str = ""
    country: str = ""
    prompt_kind: str = "none"
    prompt_text: str = ""


def _clean(value: str, field: str, index: int) -> str:
    value = unicodedata.normalize("NFC", value)
    if any(ch in value for ch in ("\t", "\n", "\r")):
        raise ValueError(f"row {index}: field {field} contains a tab or newline")
    return value


def write_embeddings(rows: list[Row], vectors: np.ndarray, path: str | Path, label: str = "") -> None:
    """Write one embedding file; row order defines record order."""
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        raise ValueError(f"vectors must be 2-D, got shape {vectors.shape}")
    if len(rows) != vectors.shape[0]:
        raise ValueError(f"{len(rows)} rows for {vectors.shape[0]} vectors")
    if not np.isfinite(vectors).all():
        bad = int(np.flatnonzero(~np.isfinite(vectors).all(axis=1))[0])
        raise ValueError(f"row {bad}: vector contains a non-finite value")
    seen: set[str] = set()
    header = {
        "magic": MAGIC,
        "dim": int(vectors.shape[1]),
        "count": int(vectors.shape[0]),
        "label": unicodedata.normalize("NFC", label),
        "columns": list(COLUMNS),
    }
    parts = [json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n"]
    for i, row in enumerate(rows):
        if row.source not in SOURCES:
            raise ValueError(f"row {i}: unknown source {row.source!r}")
        if row.prompt_kind not in PROMPT_KINDS:
            raise ValueError(f"row {i}: unknown prompt_kind {row.prompt_kind!r}")
        if row.prompt_kind == "object_in_country" and not row.country:
            raise ValueError(f"row {i}: prompt_kind object_in_country requires a country")
        rid = _clean(row.id, "id", i)
        if rid in seen:
            raise ValueError(f"row {i}: duplicate id {rid!r}")
        seen.add(rid)
        fields = [
            rid,
            _clean(row.source, "source", i),
            _clean(row.object, "object", i),
            _clean(row.region, "region", i),
            _clean(row.country, "country", i),
            _clean(row.prompt_kind, "prompt_kind", i),
            _clean(row.prompt_text, "prompt_text", i),
        ]
        parts.append("\t".join(fields).encode("utf-8") + b"\n")
    parts.append(vectors.tobytes())

    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)
