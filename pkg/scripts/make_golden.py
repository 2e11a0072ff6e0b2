#!/usr/bin/env python3
"""Regenerate the golden files under tests/golden/.

Run after make_fixtures.py whenever an on-disk format intentionally changes;
the golden tests pin these bytes exactly.
"""

from pathlib import Path

import numpy as np

from geodive.indicators import (
    RunConfig,
    consistency_table,
    full_report,
    object_region_table,
    region_table,
    report_json_bytes,
)
from geodive.store import dataset_from_rows, write_dataset

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
GOLDEN = ROOT / "tests" / "golden"


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)

    vectors = np.array([[1.0, 2.0, 3.5], [-1.0, 0.5, 4.25]], dtype=np.float32)
    rows = [
        ("a", "real", "car", "east", "atlantis", "none", None),
        ("b", "generated", "stove", "west", None, "object_in_region", "stove in west"),
    ]
    write_dataset(dataset_from_rows(vectors, rows, label="golden"), GOLDEN / "mini.emb")

    cfg = RunConfig(
        prompt_kind="object_in_region",
        region_vocab=("east", "west"),
        object_vocab=("car", "stove", "toothbrush"),
        country_map={"atlantis": "east", "borduria": "east", "cascadia": "west", "dorne": "west"},
        k=3,
        percentile=10.0,
        tail_mode="percentile",
        seed=7,
        workers=1,
        reference_path=FIXTURES / "ref_small.emb",
        generated_path=FIXTURES / "gen_selfeval.emb",
        text_embeddings_path=FIXTURES / "text_small.emb",
    )
    report = full_report(cfg)
    out = GOLDEN / "selfeval_report"
    out.mkdir(exist_ok=True)
    (out / "report.json").write_bytes(report_json_bytes(report))
    (out / "region_indicator.tsv").write_bytes(region_table(report))
    (out / "object_region_indicator.tsv").write_bytes(object_region_table(report))
    (out / "consistency_indicator.tsv").write_bytes(consistency_table(report))

    for path in sorted(GOLDEN.rglob("*")):
        if path.is_file():
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
