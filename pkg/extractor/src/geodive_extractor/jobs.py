"""Extraction jobs: manifest in, GEODIVE-EMB/1 file out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .crop import DecodeError, load_image, preprocess
from .embfile import Row, write_embeddings
from .manifest import ManifestRow, read_manifest

JOB_KINDS = ("classifier_features", "joint_image", "joint_text")


@dataclass(frozen=True)
class ExtractionJob:
    manifest_path: Path
    kind: str
    output_path: Path
    batch_size: int = 32
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.kind not in JOB_KINDS:
            raise ValueError(f"kind must be one of {JOB_KINDS}, got {self.kind!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _rows_to_metadata(rows: list[ManifestRow]) -> list[Row]:
    return [
        Row(
            id=r.id,
            source=r.source,
            object=r.object,
            region=r.region,
            country=r.country,
            prompt_kind=r.prompt_kind,
            prompt_text=r.prompt_text,
        )
        for r in rows
    ]


def run_extraction(job: ExtractionJob, backend) -> int:
    """Embed every manifest row with ``backend``; returns the record count.

    Row order is preserved exactly; relative image paths resolve against the
    manifest's directory. Decode failures are collected across the whole
    manifest and reported together; nothing is written in that case.
    """
    rows = read_manifest(job.manifest_path)
    base = Path(job.manifest_path).resolve().parent
    failures: list[str] = []
    images: list[np.ndarray] = []
    for i, row in enumerate(rows):
        image_path = Path(row.path)
        if not image_path.is_absolute():
            image_path = base / image_path
        try:
            images.append(preprocess(load_image(image_path), backend.input_size))
        except DecodeError as exc:
            failures.append(f"row {i} (id {row.id!r}): {exc}")
    if failures:
        raise DecodeError(f"{len(failures)} rows failed to decode:\n" + "\n".join(failures))

    chunks = []
    for start in range(0, len(images), job.batch_size):
        batch = np.stack(images[start : start + job.batch_size])
        chunks.append(backend.embed_images(batch))
    vectors = (
        np.concatenate(chunks) if chunks else np.empty((0, backend.dim), dtype=np.float32)
    )
    label = f"{job.kind}:{backend.backend_id}"
    write_embeddings(_rows_to_metadata(rows), vectors, job.output_path, label=label)
    return len(rows)


def embed_object_texts(objects: list[str], backend, output_path: str | Path) -> int:
    """One text embedding per object name; ids and prompt texts are the names."""
    if len(set(objects)) != len(objects):
        dupes = sorted({o for o in objects if objects.count(o) > 1})
        raise ValueError(f"duplicate object names: {dupes}")
    vectors = backend.embed_texts(objects)
    rows = [
        Row(id=obj, source="real", object=obj, prompt_kind="object", prompt_text=obj)
        for obj in objects
    ]
    write_embeddings(rows, vectors, output_path, label=f"joint_text:{backend.backend_id}")
    return len(objects)
