"""Prompt/image consistency scoring and lower-tail aggregation.

Scores are plain cosine similarities between a generated image's embedding
and the embedding of its bare object prompt, computed in float64. Per-object
groups are then summarized by their lower tail: either the p-th percentile
(linear interpolation) or the mean of the lowest p% of scores.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import PreconditionError
from .store import EmbeddingDataset

TAIL_MODES = ("percentile", "tail_mean")


@dataclass(frozen=True)
class ScoredRecord:
    record_id: str
    object: str
    region: str
    country: str | None
    score: float


@dataclass(frozen=True)
class ObjectTailSummary:
    """Lower-tail statistics of one object's scores within one group."""

    object: str
    group: str
    n: int
    tail_value: float
    tail_mean: float
    mode: str


def clipscore(image_vec: np.ndarray, text_vec: np.ndarray) -> float:
    """Cosine similarity between two non-zero vectors of equal dimension.

    Rounding can push the quotient an ulp past 1, so the result is clamped
    to [-1, 1].
    """
    a = np.asarray(image_vec, dtype=np.float64).ravel()
    b = np.asarray(text_vec, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise PreconditionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    norm_a = math.sqrt(float((a * a).sum()))
    norm_b = math.sqrt(float((b * b).sum()))
    if norm_a == 0.0 or norm_b == 0.0:
        raise PreconditionError("cosine similarity is undefined for a zero-norm vector")
    return min(1.0, max(-1.0, float((a * b).sum()) / (norm_a * norm_b)))


def load_text_embeddings(ds: EmbeddingDataset) -> dict[str, np.ndarray]:
    """Object -> text-embedding map from an embedding dataset.

    By convention the records of a text-embedding file carry the prompt text
    as id and the object name in the object field, one record per object.
    """
    out: dict[str, np.ndarray] = {}
    for i in range(len(ds)):
        obj = ds.objects[i]
        if obj in out:
            raise PreconditionError(f"duplicate text embedding for object {obj!r}")
        out[obj] = ds.vectors[i]
    return out


def score_dataset(
    gen: EmbeddingDataset, text_embeddings: Mapping[str, np.ndarray]
) -> list[ScoredRecord]:
    """Score every generated record against its own object's text embedding.

    The text embedding is always the bare object prompt's, regardless of the
    geographic prompt used at generation time.
    """
    missing = sorted({obj for obj in gen.objects if obj not in text_embeddings})
    if missing:
        raise PreconditionError(f"missing text embeddings for objects: {missing}")
    return [
        ScoredRecord(
            record_id=gen.ids[i],
            object=gen.objects[i],
            region=gen.regions[i],
            country=gen.countries[i],
            score=clipscore(gen.vectors[i], text_embeddings[gen.objects[i]]),
        )
        for i in range(len(gen))
    ]


def _percentile_linear(sorted_values: Sequence[float], p: float) -> float:
    """Linear-interpolation percentile of an ascending sequence.

    With n values, rank h = (n - 1) * p / 100; the result interpolates
    between the values at positions floor(h) and floor(h) + 1.
    """
    n = len(sorted_values)
    h = (n - 1) * p / 100.0
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    return float(sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo]))


def _tail_mean(sorted_values: Sequence[float], p: float) -> float:
    """Mean of the ceil(n * p / 100) smallest values of an ascending sequence."""
    m = math.ceil(len(sorted_values) * p / 100.0)
    return float(np.mean(np.asarray(sorted_values[:m], dtype=np.float64)))


def tail_summary(
    scores: Iterable[ScoredRecord],
    percentile: float = 10.0,
    mode: str = "percentile",
    group_by: str = "region",
) -> list[ObjectTailSummary]:
    """Per-(object, group) lower-tail summaries, sorted by (object, group).

    ``group_by`` selects the group key: "region" or "region_country" (the
    latter joins region and country with "|"). Both tail statistics are
    always computed; ``mode`` marks which one downstream aggregation uses.
    """
    if not 0.0 < percentile < 100.0:
        raise PreconditionError(f"percentile must be in (0, 100), got {percentile}")
    if mode not in TAIL_MODES:
        raise PreconditionError(f"mode must be one of {TAIL_MODES}, got {mode!r}")
    if group_by not in ("region", "region_country"):
        raise PreconditionError(f"group_by must be 'region' or 'region_country', got {group_by!r}")

    grouped: dict[tuple[str, str], list[float]] = defaultdict(list)
    for record in scores:
        group = record.region
        if group_by == "region_country":
            group = f"{record.region}|{record.country or ''}"
        grouped[(record.object, group)].append(record.score)
    if not grouped:
        raise PreconditionError("no scores to summarize (empty group)")

    summaries = []
    for obj, group in sorted(grouped):
        values = sorted(grouped[(obj, group)])
        summaries.append(
            ObjectTailSummary(
                object=obj,
                group=group,
                n=len(values),
                tail_value=_percentile_linear(values, percentile),
                tail_mean=_tail_mean(values, percentile),
                mode=mode,
            )
        )
    return summaries


def consistency_indicator(summaries: Sequence[ObjectTailSummary]) -> dict[str, float]:
    """Per-group unweighted mean over objects of the selected tail statistic.

    Every object must be present in every group; gaps are reported as an
    error so a ragged table can never silently skew the means.
    """
    if not summaries:
        raise PreconditionError("no summaries to aggregate")
    modes = {s.mode for s in summaries}
    if len(modes) != 1:
        raise PreconditionError(f"summaries mix tail modes: {sorted(modes)}")
    mode = modes.pop()

    by_group: dict[str, dict[str, ObjectTailSummary]] = defaultdict(dict)
    for s in summaries:
        by_group[s.group][s.object] = s
    all_objects = sorted({s.object for s in summaries})
    gaps = [
        f"object {obj!r} missing from group {group!r}"
        for group in sorted(by_group)
        for obj in all_objects
        if obj not in by_group[group]
    ]
    if gaps:
        raise PreconditionError("ragged object coverage across groups: " + "; ".join(gaps))

    out: dict[str, float] = {}
    for group in sorted(by_group):
        stats = [
            by_group[group][obj].tail_value if mode == "percentile" else by_group[group][obj].tail_mean
            for obj in all_objects
        ]
        out[group] = float(np.mean(np.asarray(stats, dtype=np.float64)))
    return out
