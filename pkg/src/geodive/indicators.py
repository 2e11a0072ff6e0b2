"""End-to-end indicator runs: dataset assembly, metrics, and reports.

Three indicators are computed over a (reference, generated) dataset pair:
per-region precision/coverage, per-(object, region) precision/coverage, and
the per-region object-consistency score built from lower-tail cosine
similarities. The generated side is assembled per the evaluated prompt kind:
region-prompted slices are used as-is, country-prompted generations are
merged into regions via the country map, and bare-object generations are
subsampled to match the reference's per-region object distribution.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .consistency import (
    ObjectTailSummary,
    TAIL_MODES,
    consistency_indicator,
    load_text_embeddings,
    score_dataset,
    tail_summary,
)
from .errors import ConfigError, PreconditionError
from .manifold import DEFAULT_K, build_manifold, precision_coverage
from .store import EmbeddingDataset, file_sha256, load_dataset
from .stratify import SamplingPlan, derive_seed, match_object_distribution, merge_countries, split_by_region

EVAL_PROMPT_KINDS = ("object", "object_in_region", "object_in_country")


@dataclass(frozen=True)
class RunConfig:
    """One evaluation run: knobs, vocabularies, and input/output paths."""

    prompt_kind: str
    region_vocab: tuple[str, ...]
    object_vocab: tuple[str, ...]
    country_map: Mapping[str, str] = field(default_factory=dict)
    k: int = DEFAULT_K
    percentile: float = 10.0
    tail_mode: str = "percentile"
    seed: int = 0
    workers: int = 1
    label: str = ""
    reference_path: Path | None = None
    generated_path: Path | None = None
    consistency_generated_path: Path | None = None
    text_embeddings_path: Path | None = None
    output_dir: Path | None = None

    def __post_init__(self) -> None:
        if self.prompt_kind not in EVAL_PROMPT_KINDS:
            raise ConfigError(f"prompt_kind must be one of {EVAL_PROMPT_KINDS}, got {self.prompt_kind!r}")
        if not self.region_vocab:
            raise ConfigError("region_vocab must not be empty")
        if not self.object_vocab:
            raise ConfigError("object_vocab must not be empty")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.percentile < 100.0:
            raise ConfigError(f"percentile must be in (0, 100), got {self.percentile}")
        if self.tail_mode not in TAIL_MODES:
            raise ConfigError(f"tail_mode must be one of {TAIL_MODES}, got {self.tail_mode!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        strays = sorted(set(self.country_map.values()) - set(self.region_vocab))
        if strays:
            raise ConfigError(f"country_map targets regions outside the vocabulary: {strays}")

    @classmethod
    def from_dict(cls, doc: Mapping, base_dir: Path | None = None) -> "RunConfig":
        """Build from a parsed run-configuration document.

        Relative paths are resolved against ``base_dir`` (normally the
        config file's directory).
        """
        if not isinstance(doc, Mapping):
            raise ConfigError("run configuration must be a JSON object")
        paths = doc.get("paths", {})
        if not isinstance(paths, Mapping):
            raise ConfigError("'paths' must be an object")

        def path_of(key: str) -> Path | None:
            value = paths.get(key)
            if value is None:
                return None
            if not isinstance(value, str):
                raise ConfigError(f"paths.{key} must be a string")
            p = Path(value)
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            return p

        try:
            return cls(
                prompt_kind=doc.get("prompt_kind", ""),
                region_vocab=tuple(doc.get("region_vocab", ())),
                object_vocab=tuple(doc.get("object_vocab", ())),
                country_map=dict(doc.get("country_map", {})),
                k=int(doc.get("k", DEFAULT_K)),
                percentile=float(doc.get("percentile", 10.0)),
                tail_mode=doc.get("tail_mode", "percentile"),
                seed=int(doc.get("seed", 0)),
                workers=int(doc.get("workers", 1)),
                label=doc.get("label", ""),
                reference_path=path_of("reference"),
                generated_path=path_of("generated"),
                consistency_generated_path=path_of("consistency_generated"),
                text_embeddings_path=path_of("text_embeddings"),
                output_dir=path_of("output_dir"),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid run configuration: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        doc = load_config_document(path)
        return cls.from_dict(doc, base_dir=Path(path).resolve().parent)


def load_config_document(path: str | Path) -> dict:
    """Parse the JSON run-configuration document."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return doc


@dataclass(frozen=True)
class CellResult:
    """Metrics for one report cell, or the reason it was skipped."""

    precision: float | None
    coverage: float | None
    n_real: int
    n_generated: int
    skipped: bool = False
    skip_reason: str = ""

    @classmethod
    def skip(cls, n_real: int, n_generated: int, reason: str) -> "CellResult":
        return cls(None, None, n_real, n_generated, skipped=True, skip_reason=reason)


@dataclass(frozen=True)
class ConsistencyGroup:
    value: float
    mode: str
    objects: Mapping[str, ObjectTailSummary]


@dataclass(frozen=True)
class IndicatorReport:
    config: Mapping
    region: Mapping[str, CellResult] | None = None
    object_region: Mapping[tuple[str, str], CellResult] | None = None
    consistency: Mapping[str, ConsistencyGroup] | None = None


def _check_vocab(ds: EmbeddingDataset, cfg: RunConfig, role: str, regions: bool = True) -> None:
    stray_objects = sorted(set(ds.objects) - set(cfg.object_vocab))
    if stray_objects:
        raise PreconditionError(f"{role} dataset carries objects outside the vocabulary: {stray_objects}")
    if regions:
        stray_regions = sorted(set(ds.regions) - set(cfg.region_vocab))
        if stray_regions:
            raise PreconditionError(f"{role} dataset carries regions outside the vocabulary: {stray_regions}")


def _eval_pool(generated: EmbeddingDataset, cfg: RunConfig) -> EmbeddingDataset:
    pool = generated.slice(prompt_kind=cfg.prompt_kind)
    if len(pool) == 0:
        raise PreconditionError(
            f"generated dataset has no records with prompt_kind {cfg.prompt_kind!r}"
        )
    _check_vocab(pool, cfg, "generated", regions=cfg.prompt_kind == "object_in_region")
    return pool


def assemble_generated_by_region(
    reference_by_region: Mapping[str, EmbeddingDataset],
    generated: EmbeddingDataset,
    cfg: RunConfig,
) -> dict[str, EmbeddingDataset]:
    """Per-region generated datasets for the evaluated prompt kind.

    Region-prompted records are sliced by their region; country-prompted
    records are first merged into regions via the country map; bare-object
    records are subsampled (seeded, without replacement) to match each
    reference region's object counts.
    """
    pool = _eval_pool(generated, cfg)
    if cfg.prompt_kind == "object_in_region":
        return {r: pool.slice(region=r) for r in cfg.region_vocab}
    if cfg.prompt_kind == "object_in_country":
        merged = merge_countries(pool, cfg.country_map)
        return {r: merged.slice(region=r) for r in cfg.region_vocab}
    out: dict[str, EmbeddingDataset] = {}
    for region in cfg.region_vocab:
        counts = reference_by_region[region].object_counts()
        plan = SamplingPlan(seed=derive_seed(cfg.seed, "region", region))
        out[region] = match_object_distribution(pool, counts, plan)
    return out


def region_indicator(
    reference: EmbeddingDataset, generated: EmbeddingDataset, cfg: RunConfig
) -> dict[str, CellResult]:
    """Precision and coverage per region over all objects."""
    _check_vocab(reference, cfg, "reference")
    ref_by_region = split_by_region(reference, cfg.region_vocab)
    for region, ref in ref_by_region.items():
        if len(ref) < cfg.k + 1:
            raise PreconditionError(
                f"region {region!r}: reference has {len(ref)} records, needs at least {cfg.k + 1} for k={cfg.k}"
            )
    gen_by_region = assemble_generated_by_region(ref_by_region, generated, cfg)
    out: dict[str, CellResult] = {}
    for region in cfg.region_vocab:
        gen = gen_by_region[region]
        if len(gen) == 0:
            raise PreconditionError(f"region {region!r}: no generated records to evaluate")
        model = build_manifold(ref_by_region[region], cfg.k, workers=cfg.workers)
        prec, cov = precision_coverage(model, gen, workers=cfg.workers)
        out[region] = CellResult(prec.value, cov.value, prec.n_real, prec.n_generated)
    return out


def object_region_indicator(
    reference: EmbeddingDataset, generated: EmbeddingDataset, cfg: RunConfig
) -> dict[tuple[str, str], CellResult]:
    """Precision and coverage per (object, region) cell.

    Deficient cells are skipped, never fatal: a cell is reported with a
    reason when its reference side is too small for k, its generated side is
    empty, or a bare-object pool cannot cover its reference count.
    """
    _check_vocab(reference, cfg, "reference")
    pool = _eval_pool(generated, cfg)
    if cfg.prompt_kind == "object_in_country":
        pool = merge_countries(pool, cfg.country_map)

    out: dict[tuple[str, str], CellResult] = {}
    for obj in cfg.object_vocab:
        for region in cfg.region_vocab:
            ref_cell = reference.slice(object=obj, region=region)
            n_ref = len(ref_cell)
            if n_ref < cfg.k + 1:
                out[(obj, region)] = CellResult.skip(
                    n_ref, 0, f"reference cell has {n_ref} records, needs at least {cfg.k + 1} for k={cfg.k}"
                )
                continue
            if cfg.prompt_kind == "object":
                plan = SamplingPlan(seed=derive_seed(cfg.seed, "cell", obj, region))
                try:
                    gen_cell = match_object_distribution(pool, {obj: n_ref}, plan)
                except PreconditionError as exc:
                    out[(obj, region)] = CellResult.skip(n_ref, 0, str(exc))
                    continue
            else:
                gen_cell = pool.slice(object=obj, region=region)
            if len(gen_cell) == 0:
                out[(obj, region)] = CellResult.skip(n_ref, 0, "no generated records in cell")
                continue
            model = build_manifold(ref_cell, cfg.k, workers=cfg.workers)
            prec, cov = precision_coverage(model, gen_cell, workers=cfg.workers)
            out[(obj, region)] = CellResult(prec.value, cov.value, prec.n_real, prec.n_generated)
    return out


def object_consistency_indicator(
    reference: EmbeddingDataset,
    generated: EmbeddingDataset,
    text_embeddings: Mapping,
    cfg: RunConfig,
) -> dict[str, ConsistencyGroup]:
    """Per-region mean over objects of the lower-tail consistency score.

    Scores always compare a generated image's embedding against its bare
    object prompt's text embedding; the region grouping follows the same
    assembly as the other indicators.
    """
    _check_vocab(reference, cfg, "reference")
    ref_by_region = split_by_region(reference, cfg.region_vocab)
    gen_by_region = assemble_generated_by_region(ref_by_region, generated, cfg)

    summaries: list[ObjectTailSummary] = []
    for region in cfg.region_vocab:
        gen = gen_by_region[region]
        if len(gen) == 0:
            raise PreconditionError(f"region {region!r}: no generated records to score")
        scored = [dataclasses.replace(s, region=region) for s in score_dataset(gen, text_embeddings)]
        summaries.extend(tail_summary(scored, percentile=cfg.percentile, mode=cfg.tail_mode))
    values = consistency_indicator(summaries)

    by_region: dict[str, dict[str, ObjectTailSummary]] = {r: {} for r in cfg.region_vocab}
    for s in summaries:
        by_region[s.group][s.object] = s
    return {
        region: ConsistencyGroup(value=values[region], mode=cfg.tail_mode, objects=by_region[region])
        for region in cfg.region_vocab
    }


@dataclass(frozen=True)
class RunInputs:
    reference: EmbeddingDataset
    generated: EmbeddingDataset
    consistency_generated: EmbeddingDataset | None
    text_embeddings: Mapping | None
    checksums: Mapping[str, str]


def load_run_inputs(cfg: RunConfig, need_text: bool) -> RunInputs:
    """Load every input file named by the config and record its checksum."""
    if cfg.reference_path is None or cfg.generated_path is None:
        raise ConfigError("config must name paths.reference and paths.generated")
    checksums = {
        "reference": file_sha256(cfg.reference_path),
        "generated": file_sha256(cfg.generated_path),
    }
    reference = load_dataset(cfg.reference_path)
    generated = load_dataset(cfg.generated_path)
    consistency_generated = None
    text_embeddings = None
    if need_text:
        if cfg.text_embeddings_path is None:
            raise ConfigError("config must name paths.text_embeddings for consistency scoring")
        checksums["text_embeddings"] = file_sha256(cfg.text_embeddings_path)
        text_embeddings = load_text_embeddings(load_dataset(cfg.text_embeddings_path))
        joint_path = cfg.consistency_generated_path
        if joint_path is not None:
            checksums["consistency_generated"] = file_sha256(joint_path)
            consistency_generated = load_dataset(joint_path)
        else:
            consistency_generated = generated
    return RunInputs(reference, generated, consistency_generated, text_embeddings, checksums)


def config_echo(cfg: RunConfig, checksums: Mapping[str, str]) -> dict:
    return {
        "k": cfg.k,
        "seed": cfg.seed,
        "percentile": cfg.percentile,
        "tail_mode": cfg.tail_mode,
        "prompt_kind": cfg.prompt_kind,
        "workers": cfg.workers,
        "label": cfg.label,
        "region_vocab": list(cfg.region_vocab),
        "object_vocab": list(cfg.object_vocab),
        "checksums": dict(sorted(checksums.items())),
    }


def full_report(cfg: RunConfig, sections: tuple[str, ...] = ("region", "object_region", "consistency")) -> IndicatorReport:
    """Run the requested indicator sections from the config's input files."""
    unknown = sorted(set(sections) - {"region", "object_region", "consistency"})
    if unknown:
        raise ConfigError(f"unknown report sections: {unknown}")
    inputs = load_run_inputs(cfg, need_text="consistency" in sections)
    region = object_region = consist = None
    if "region" in sections:
        region = region_indicator(inputs.reference, inputs.generated, cfg)
    if "object_region" in sections:
        object_region = object_region_indicator(inputs.reference, inputs.generated, cfg)
    if "consistency" in sections:
        consist = object_consistency_indicator(
            inputs.reference, inputs.consistency_generated, inputs.text_embeddings, cfg
        )
    return IndicatorReport(
        config=config_echo(cfg, inputs.checksums),
        region=region,
        object_region=object_region,
        consistency=consist,
    )


def _cell_dict(cell: CellResult) -> dict:
    return {
        "precision": cell.precision,
        "coverage": cell.coverage,
        "n_real": cell.n_real,
        "n_generated": cell.n_generated,
        "skipped": cell.skipped,
        "skip_reason": cell.skip_reason,
    }


def report_to_dict(report: IndicatorReport) -> dict:
    """Plain-dict form of a report, ready for stable JSON serialization."""
    doc: dict = {"config": dict(report.config)}
    if report.region is not None:
        doc["region_indicator"] = {r: _cell_dict(c) for r, c in report.region.items()}
    if report.object_region is not None:
        nested: dict[str, dict] = {}
        for (obj, region), cell in report.object_region.items():
            nested.setdefault(obj, {})[region] = _cell_dict(cell)
        doc["object_region_indicator"] = nested
    if report.consistency is not None:
        doc["consistency_indicator"] = {
            region: {
                "value": group.value,
                "mode": group.mode,
                "objects": {
                    obj: {"n": s.n, "tail_value": s.tail_value, "tail_mean": s.tail_mean}
                    for obj, s in group.objects.items()
                },
            }
            for region, group in report.consistency.items()
        }
    return doc


def report_json_bytes(report: IndicatorReport) -> bytes:
    """Deterministic JSON serialization (sorted keys, fixed layout)."""
    return (json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n").encode("utf-8")


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(value)


def _table_preamble(report: IndicatorReport) -> list[str]:
    """Comment lines carrying the config echo, so every artifact is auditable."""
    return ["#config: " + json.dumps(dict(report.config), sort_keys=True, separators=(",", ":"))]


def region_table(report: IndicatorReport) -> bytes:
    """Flat tab-delimited per-region table for plotting."""
    lines = _table_preamble(report)
    lines += ["#region\tprecision\tcoverage\tn_real\tn_generated\tskipped\tskip_reason"]
    for region in sorted(report.region or {}):
        c = (report.region or {})[region]
        lines.append(
            f"{region}\t{_fmt(c.precision)}\t{_fmt(c.coverage)}\t{c.n_real}\t{c.n_generated}"
            f"\t{int(c.skipped)}\t{c.skip_reason}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def object_region_table(report: IndicatorReport) -> bytes:
    lines = _table_preamble(report)
    lines += ["#object\tregion\tprecision\tcoverage\tn_real\tn_generated\tskipped\tskip_reason"]
    for obj, region in sorted(report.object_region or {}):
        c = (report.object_region or {})[(obj, region)]
        lines.append(
            f"{obj}\t{region}\t{_fmt(c.precision)}\t{_fmt(c.coverage)}\t{c.n_real}\t{c.n_generated}"
            f"\t{int(c.skipped)}\t{c.skip_reason}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def consistency_table(report: IndicatorReport) -> bytes:
    lines = _table_preamble(report)
    lines += ["#region\tobject\tn\ttail_value\ttail_mean\tmode\tregion_value"]
    for region in sorted(report.consistency or {}):
        group = (report.consistency or {})[region]
        for obj in sorted(group.objects):
            s = group.objects[obj]
            lines.append(
                f"{region}\t{obj}\t{s.n}\t{s.tail_value!r}\t{s.tail_mean!r}\t{group.mode}\t{group.value!r}"
            )
    return ("\n".join(lines) + "\n").encode("utf-8")
