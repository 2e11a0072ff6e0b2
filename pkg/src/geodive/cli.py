"""Command-line surface for the evaluation pipeline.

One JSON configuration document drives a run; flags may override its scalar
knobs. Exit codes: 0 success, 2 configuration errors, 3 data validation
errors, 4 compute-precondition errors. Failures emit a single machine-
readable JSON line on stderr, and artifacts are written atomically so a
failed run never leaves partial output behind.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, DataError, GeodiveError, PreconditionError
from .indicators import (
    IndicatorReport,
    RunConfig,
    consistency_table,
    full_report,
    load_config_document,
    object_region_table,
    region_table,
    report_json_bytes,
)
from .prompts import PromptSpec, build_prompts, write_prompts
from .store import atomic_write_bytes, load_dataset, write_dataset
from .stratify import SamplingPlan, balance_cells

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PRECONDITION = 4


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geodive", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate embedding files and print group counts")
    p_validate.add_argument("files", nargs="+", type=Path)

    for name in ("build-prompts", "balance", "region-indicator", "object-region-indicator", "consistency-indicator", "full-report"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="run-configuration JSON document")
        if name.endswith("indicator") or name == "full-report":
            p.add_argument("--k", type=int, default=None)
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--percentile", type=float, default=None)
            p.add_argument("--workers", type=int, default=None)
    return parser


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    overrides = {
        key: getattr(args, key)
        for key in ("k", "seed", "percentile", "workers")
        if getattr(args, key, None) is not None
    }
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _cmd_validate(args: argparse.Namespace) -> int:
    for path in args.files:
        ds = load_dataset(path)
        print(f"{path}: ok (label={ds.label!r}, records={len(ds)}, dim={ds.dim})")
        for (obj, region), count in sorted(ds.cell_counts().items()):
            print(f"  {obj}\t{region}\t{count}")
    return 0


def _prompt_spec_from_doc(doc: dict) -> tuple[PromptSpec, str, Path]:
    section = doc.get("prompt_build")
    if not isinstance(section, dict):
        raise ConfigError("config must hold a 'prompt_build' object for build-prompts")
    spec_doc = section.get("spec")
    if not isinstance(spec_doc, dict):
        raise ConfigError("prompt_build.spec must be an object")
    kind = section.get("kind")
    output = section.get("output")
    if not isinstance(kind, str) or not isinstance(output, str):
        raise ConfigError("prompt_build needs string fields 'kind' and 'output'")
    cell_counts = None
    if spec_doc.get("cell_counts") is not None:
        try:
            cell_counts = {(o, r): int(n) for o, r, n in spec_doc["cell_counts"]}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"prompt_build.spec.cell_counts must be [object, region, count] triples: {exc}") from exc
    try:
        spec = PromptSpec(
            objects=tuple(spec_doc.get("objects", ())),
            regions=tuple(spec_doc.get("regions", ())),
            countries_per_region={k: tuple(v) for k, v in spec_doc.get("countries_per_region", {}).items()},
            per_object_region=int(spec_doc.get("per_object_region", 0)),
            cell_counts=cell_counts,
            object_pool_per_object=spec_doc.get("object_pool_per_object"),
        )
    except (PreconditionError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid prompt spec: {exc}") from exc
    return spec, kind, Path(output)


def _cmd_build_prompts(args: argparse.Namespace) -> int:
    doc = load_config_document(args.config)
    spec, kind, output = _prompt_spec_from_doc(doc)
    if not output.is_absolute():
        output = args.config.resolve().parent / output
    records = build_prompts(spec, kind)
    write_prompts(records, output)
    print(f"{output}: wrote {len(records)} prompts ({kind})")
    return 0


def _cmd_balance(args: argparse.Namespace) -> int:
    doc = load_config_document(args.config)
    section = doc.get("balance")
    if not isinstance(section, dict):
        raise ConfigError("config must hold a 'balance' object for the balance command")
    try:
        per_cell = int(section["per_cell"])
        input_path = Path(section["input"])
        output_path = Path(section["output"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"balance section needs input, output, per_cell: {exc}") from exc
    base = args.config.resolve().parent
    if not input_path.is_absolute():
        input_path = base / input_path
    if not output_path.is_absolute():
        output_path = base / output_path
    plan = SamplingPlan(seed=int(doc.get("seed", 0)), per_cell_target=per_cell)
    ds = load_dataset(input_path)
    balanced = balance_cells(ds, per_cell, plan)
    write_dataset(balanced, output_path)
    print(f"{output_path}: wrote {len(balanced)} records ({per_cell} per cell)")
    return 0


_SECTION_BY_COMMAND = {
    "region-indicator": ("region",),
    "object-region-indicator": ("object_region",),
    "consistency-indicator": ("consistency",),
    "full-report": ("region", "object_region", "consistency"),
}


def _write_report(report: IndicatorReport, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "report.json"]
    atomic_write_bytes(written[0], report_json_bytes(report))
    if report.region is not None:
        path = out_dir / "region_indicator.tsv"
        atomic_write_bytes(path, region_table(report))
        written.append(path)
    if report.object_region is not None:
        path = out_dir / "object_region_indicator.tsv"
        atomic_write_bytes(path, object_region_table(report))
        written.append(path)
    if report.consistency is not None:
        path = out_dir / "consistency_indicator.tsv"
        atomic_write_bytes(path, consistency_table(report))
        written.append(path)
    return written


def _cmd_indicator(args: argparse.Namespace, command: str) -> int:
    cfg = _load_run_config(args)
    if cfg.output_dir is None:
        raise ConfigError("config must name paths.output_dir for indicator commands")
    report = full_report(cfg, sections=_SECTION_BY_COMMAND[command])
    for path in _write_report(report, cfg.output_dir):
        print(f"wrote {path}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "build-prompts":
            return _cmd_build_prompts(args)
        if args.command == "balance":
            return _cmd_balance(args)
        return _cmd_indicator(args, args.command)
    except ConfigError as exc:
        _report_error("config", exc)
        return EXIT_CONFIG
    except DataError as exc:
        _report_error("data", exc)
        return EXIT_DATA
    except PreconditionError as exc:
        _report_error("precondition", exc)
        return EXIT_PRECONDITION
    except GeodiveError as exc:  # base-class fallback
        _report_error("error", exc)
        return EXIT_PRECONDITION


def _report_error(kind: str, exc: Exception) -> None:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
