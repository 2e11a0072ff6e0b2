"""Prompt expansion over object/region/country vocabularies.

Three fixed templates are supported: the bare object name, "{object} in
{region}", and "{object} in {country}". Country prompts are balanced across
the first three countries of each region's ordered list, remainder assigned
to earlier countries.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DataError, PreconditionError
from .store import atomic_write_bytes

TEMPLATES = {
    "object": "{object}",
    "object_in_region": "{object} in {region}",
    "object_in_country": "{object} in {country}",
}
PROMPT_FILE_COLUMNS = ("prompt_text", "object", "region", "country", "prompt_kind", "replicate_index")
TOP_COUNTRIES = 3


@dataclass(frozen=True)
class PromptSpec:
    """Vocabularies and per-cell counts for a prompt build.

    ``per_object_region`` is the uniform per-(object, region) count;
    ``cell_counts`` overrides it with an explicit (object, region) -> count
    map for original-distribution datasets. ``object_pool_per_object``, when
    set, fixes the flat size of the bare-object pool; otherwise that pool
    gets per_object_region x |regions| prompts per object so region-matched
    subsampling stays possible.
    """

    objects: tuple[str, ...]
    regions: tuple[str, ...]
    countries_per_region: Mapping[str, tuple[str, ...]]
    per_object_region: int = 0
    cell_counts: Mapping[tuple[str, str], int] | None = None
    object_pool_per_object: int | None = None

    def __post_init__(self) -> None:
        if not self.objects:
            raise PreconditionError("prompt spec needs at least one object")
        if not self.regions:
            raise PreconditionError("prompt spec needs at least one region")
        if len(set(self.objects)) != len(self.objects):
            raise PreconditionError("object vocabulary contains duplicates")
        if len(set(self.regions)) != len(self.regions):
            raise PreconditionError("region vocabulary contains duplicates")
        if self.cell_counts is None and self.per_object_region < 1:
            raise PreconditionError("per_object_region must be >= 1 unless cell_counts is given")

    def count_for_cell(self, obj: str, region: str) -> int:
        if self.cell_counts is not None:
            try:
                return int(self.cell_counts[(obj, region)])
            except KeyError:
                raise PreconditionError(f"cell_counts has no entry for ({obj!r}, {region!r})") from None
        return self.per_object_region


@dataclass(frozen=True)
class PromptRecord:
    prompt_text: str
    object: str
    region: str | None
    country: str | None
    prompt_kind: str
    replicate_index: int


def _country_shares(total: int, countries: Sequence[str]) -> list[tuple[str, int]]:
    """Split ``total`` as evenly as possible, remainder to earlier countries."""
    n = len(countries)
    base, rem = divmod(total, n)
    return [(c, base + (1 if i < rem else 0)) for i, c in enumerate(countries)]


def expected_counts(spec: PromptSpec, kind: str) -> dict[tuple[str, ...], int]:
    """Exact per-cell counts build_prompts will emit for ``kind``.

    Cell keys: (object,) for bare-object prompts, (object, region) for region
    prompts, (object, region, country) for country prompts.
    """
    if kind not in TEMPLATES:
        raise PreconditionError(f"unknown prompt kind {kind!r}")
    counts: dict[tuple[str, ...], int] = {}
    if kind == "object":
        for obj in spec.objects:
            if spec.object_pool_per_object is not None:
                counts[(obj,)] = spec.object_pool_per_object
            else:
                counts[(obj,)] = sum(spec.count_for_cell(obj, r) for r in spec.regions)
        return counts
    for obj in spec.objects:
        for region in spec.regions:
            cell = spec.count_for_cell(obj, region)
            if kind == "object_in_region":
                counts[(obj, region)] = cell
            else:
                countries = tuple(spec.countries_per_region.get(region, ()))[:TOP_COUNTRIES]
                if not countries:
                    raise PreconditionError(f"region {region!r} has no countries for country prompts")
                for country, share in _country_shares(cell, countries):
                    counts[(obj, region, country)] = share
    return counts


def build_prompts(spec: PromptSpec, kind: str) -> list[PromptRecord]:
    """Expand the vocabularies into the full prompt list for ``kind``."""
    counts = expected_counts(spec, kind)  # validates kind and country lists
    records: list[PromptRecord] = []
    if kind == "object":
        for obj in spec.objects:
            for rep in range(counts[(obj,)]):
                records.append(
                    PromptRecord(
                        prompt_text=obj,
                        object=obj,
                        region=None,
                        country=None,
                        prompt_kind="object",
                        replicate_index=rep,
                    )
                )
        return records
    for obj in spec.objects:
        for region in spec.regions:
            if kind == "object_in_region":
                text = TEMPLATES[kind].format(object=obj, region=region)
                for rep in range(counts[(obj, region)]):
                    records.append(PromptRecord(text, obj, region, None, kind, rep))
            else:
                countries = tuple(spec.countries_per_region[region])[:TOP_COUNTRIES]
                for country in countries:
                    text = TEMPLATES[kind].format(object=obj, country=country)
                    for rep in range(counts[(obj, region, country)]):
                        records.append(PromptRecord(text, obj, region, country, kind, rep))
    return records


def parse_prompt(text: str, spec: PromptSpec) -> tuple[str, str, str | None, str | None]:
    """Invert a template expansion: (kind, object, region, country).

    Assumes an unambiguous vocabulary (no object name ends with an
    " in {region}" or " in {country}" suffix of the vocabularies).
    """
    objects = set(spec.objects)
    if text in objects:
        return ("object", text, None, None)
    for region in spec.regions:
        suffix = f" in {region}"
        if text.endswith(suffix) and text[: -len(suffix)] in objects:
            return ("object_in_region", text[: -len(suffix)], region, None)
    for region in spec.regions:
        for country in spec.countries_per_region.get(region, ())[:TOP_COUNTRIES]:
            suffix = f" in {country}"
            if text.endswith(suffix) and text[: -len(suffix)] in objects:
                return ("object_in_country", text[: -len(suffix)], region, country)
    raise PreconditionError(f"prompt {text!r} does not match any template over the vocabulary")


def write_prompts(records: Sequence[PromptRecord], path: str | Path) -> None:
    """Write a tab-delimited prompt file; one data row per record.

    The single '#'-prefixed header row names the columns, so the row count
    equals the record count.
    """
    lines = ["#" + "\t".join(PROMPT_FILE_COLUMNS)]
    for r in records:
        lines.append(
            "\t".join(
                (r.prompt_text, r.object, r.region or "", r.country or "", r.prompt_kind, str(r.replicate_index))
            )
        )
    atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode("utf-8"))


def read_prompts(path: str | Path) -> list[PromptRecord]:
    """Read a prompt file produced by write_prompts."""
    records: list[PromptRecord] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != len(PROMPT_FILE_COLUMNS):
            raise DataError(f"{path}: line {lineno}: expected {len(PROMPT_FILE_COLUMNS)} fields")
        text, obj, region, country, kind, rep = fields
        records.append(
            PromptRecord(
                prompt_text=text,
                object=obj,
                region=region or None,
                country=country or None,
                prompt_kind=kind,
                replicate_index=int(rep),
            )
        )
    return records
