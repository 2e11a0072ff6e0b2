"""Geodiversity evaluation engine for embedding datasets.

Computes three indicators over (real, generated) embedding datasets:
per-region precision/coverage, per-(object, region) precision/coverage, and
a per-region object-consistency score from lower-tail cosine similarities.
Also ships the prompt expansion and dataset balancing the indicators need.
"""

from .consistency import (
    ObjectTailSummary,
    ScoredRecord,
    clipscore,
    consistency_indicator,
    load_text_embeddings,
    score_dataset,
    tail_summary,
)
from .errors import ConfigError, DataError, GeodiveError, PreconditionError
from .indicators import (
    CellResult,
    ConsistencyGroup,
    IndicatorReport,
    RunConfig,
    full_report,
    object_consistency_indicator,
    object_region_indicator,
    region_indicator,
)
from .manifold import (
    DEFAULT_K,
    ManifoldModel,
    MetricResult,
    build_manifold,
    coverage,
    load_manifold,
    precision,
    precision_coverage,
    save_manifold,
)
from .prompts import PromptRecord, PromptSpec, build_prompts, expected_counts, parse_prompt, read_prompts, write_prompts
from .store import (
    EmbeddingDataset,
    EmbeddingRecord,
    dataset_from_rows,
    file_sha256,
    load_dataset,
    write_dataset,
)
from .stratify import SamplingPlan, balance_cells, match_object_distribution, merge_countries, split_by_region

__all__ = [
    "CellResult",
    "ConfigError",
    "ConsistencyGroup",
    "DataError",
    "DEFAULT_K",
    "EmbeddingDataset",
    "EmbeddingRecord",
    "GeodiveError",
    "IndicatorReport",
    "ManifoldModel",
    "MetricResult",
    "ObjectTailSummary",
    "PreconditionError",
    "PromptRecord",
    "PromptSpec",
    "RunConfig",
    "SamplingPlan",
    "ScoredRecord",
    "balance_cells",
    "build_manifold",
    "build_prompts",
    "clipscore",
    "consistency_indicator",
    "coverage",
    "dataset_from_rows",
    "expected_counts",
    "file_sha256",
    "full_report",
    "load_dataset",
    "load_manifold",
    "load_text_embeddings",
    "match_object_distribution",
    "merge_countries",
    "object_consistency_indicator",
    "object_region_indicator",
    "parse_prompt",
    "precision",
    "precision_coverage",
    "read_prompts",
    "region_indicator",
    "save_manifold",
    "score_dataset",
    "split_by_region",
    "tail_summary",
    "write_dataset",
    "write_prompts",
]
