"""Image manifests: the tab-delimited row lists extraction jobs consume.

Columns: path, id, object, region, country, source, prompt_kind,
prompt_text. The first line is a '#'-prefixed header; empty strings mean
absent. Manifest order defines output record order everywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

MANIFEST_COLUMNS = ("path", "id", "object", "region", "country", "source", "prompt_kind", "prompt_text")


@dataclass(frozen=True)
class ManifestRow:
    path: str
    id: str
    object: str
    region: str = ""
    country: str = ""
    source: str = "real"
    prompt_kind: str = "none"
    prompt_text: str = ""


def read_manifest(path: str | Path) -> list[ManifestRow]:
    rows: list[ManifestRow] = []
    seen: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != len(MANIFEST_COLUMNS):
            raise ValueError(f"{path}: line {lineno}: expected {len(MANIFEST_COLUMNS)} fields, got {len(fields)}")
        row = ManifestRow(*fields)
        if row.id in seen:
            raise ValueError(f"{path}: line {lineno}: duplicate id {row.id!r}")
        seen.add(row.id)
        rows.append(row)
    return rows


def write_manifest(rows: list[ManifestRow], path: str | Path) -> None:
    lines = ["#" + "\t".join(MANIFEST_COLUMNS)]
    for row in rows:
        fields = (row.path, row.id, row.object, row.region, row.country, row.source, row.prompt_kind, row.prompt_text)
        for name, value in zip(MANIFEST_COLUMNS, fields):
            if any(ch in value for ch in ("\t", "\n", "\r")):
                raise ValueError(f"manifest field {name} contains a tab or newline: {value!r}")
        lines.append("\t".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
