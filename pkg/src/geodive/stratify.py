"""Regional splits, country merging, and seeded balanced subsampling.

All sampling is without replacement and reproducible: indices are permuted
with a PCG64-seeded Fisher-Yates shuffle (numpy Generator.permutation),
groups are visited in lexicographic order, and selected rows are emitted in
their original dataset order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import PreconditionError
from .store import EmbeddingDataset


@dataclass(frozen=True)
class SamplingPlan:
    """Seeded without-replacement sampling configuration.

    ``per_cell_target`` absent means: keep the original distribution, no
    balancing.
    """

    seed: int
    per_cell_target: int | None = None


def derive_seed(seed: int, *parts: str) -> int:
    """Stable 63-bit child seed for a named subgroup of a run."""
    text = ":".join([str(seed), *parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def split_by_region(ds: EmbeddingDataset, region_vocab: list[str] | tuple[str, ...]) -> dict[str, EmbeddingDataset]:
    """Partition a dataset into one slice per vocabulary region.

    Every record must carry a vocabulary region; the result maps each
    vocabulary region (in vocabulary order) to its slice, which may be empty.
    """
    vocab = list(region_vocab)
    strays = sorted(set(ds.regions) - set(vocab))
    if strays:
        raise PreconditionError(f"records carry regions outside the vocabulary: {strays}")
    return {region: ds.slice(region=region) for region in vocab}


def merge_countries(ds: EmbeddingDataset, country_to_region: Mapping[str, str]) -> EmbeddingDataset:
    """Rewrite each record's region to the one its country maps to."""
    unmapped = sorted({c for c in ds.countries if c is not None and c not in country_to_region})
    if unmapped:
        raise PreconditionError(f"countries missing from the country map: {unmapped}")
    missing = [i for i, c in enumerate(ds.countries) if c is None]
    if missing:
        raise PreconditionError(f"record {missing[0]} (id {ds.ids[missing[0]]!r}) has no country label")
    return ds.with_regions([country_to_region[c] for c in ds.countries])


def _sample_group(rng: np.random.Generator, indices: np.ndarray, count: int) -> np.ndarray:
    perm = rng.permutation(len(indices))
    return indices[perm[:count]]


def match_object_distribution(
    gen_pool: EmbeddingDataset,
    reference_counts: Mapping[str, int],
    plan: SamplingPlan,
) -> EmbeddingDataset:
    """Subsample a generated pool so its object counts match a reference.

    Objects are visited in lexicographic order; each object's rows are
    shuffled with the plan's seed and the first ``reference_counts[object]``
    are kept. Selected rows are returned in original pool order, so an
    exhaustive draw reproduces the pool.
    """
    rng = np.random.Generator(np.random.PCG64(plan.seed))
    pool_objects = np.asarray(gen_pool.objects, dtype=object)
    selected: list[np.ndarray] = []
    for obj in sorted(reference_counts):
        need = int(reference_counts[obj])
        indices = np.flatnonzero(pool_objects == obj)
        if len(indices) < need:
            raise PreconditionError(
                f"object {obj!r}: pool has {len(indices)} records, need {need} "
                f"(short by {need - len(indices)})"
            )
        selected.append(_sample_group(rng, indices, need))
    if selected:
        order = np.sort(np.concatenate(selected))
    else:
        order = np.empty(0, dtype=np.intp)
    return gen_pool.take(order)


def balance_cells(ds: EmbeddingDataset, per_cell: int, plan: SamplingPlan) -> EmbeddingDataset:
    """Sample every (object, region) cell present in ``ds`` down to ``per_cell``."""
    if per_cell < 1:
        raise PreconditionError(f"per_cell must be >= 1, got {per_cell}")
    keys = np.asarray([f"{o}\x1f{r}" for o, r in zip(ds.objects, ds.regions)], dtype=object)
    cells = sorted(set(zip(ds.objects, ds.regions)))
    rng = np.random.Generator(np.random.PCG64(plan.seed))
    selected: list[np.ndarray] = []
    for obj, region in cells:
        indices = np.flatnonzero(keys == f"{obj}\x1f{region}")
        if len(indices) < per_cell:
            raise PreconditionError(
                f"cell (object={obj!r}, region={region!r}) has {len(indices)} records, "
                f"need {per_cell}"
            )
        selected.append(_sample_group(rng, indices, per_cell))
    order = np.sort(np.concatenate(selected)) if selected else np.empty(0, dtype=np.intp)
    return ds.take(order)
