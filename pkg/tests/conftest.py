import sys
from pathlib import Path

import numpy as np
import pytest

from geodive.store import dataset_from_rows


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    sys.stderr.write(f"[{status}] acceptance criterion: {name}\n")

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def make_dataset(
    vectors,
    ids=None,
    objects="widget",
    regions="east",
    countries=None,
    prompt_kinds="none",
    prompt_texts=None,
    sources="real",
    label="",
    id_prefix="rec",
):
    """Build a dataset from a vector array, broadcasting scalar metadata."""
    vectors = np.asarray(vectors, dtype=np.float32)
    n = len(vectors)

    def column(value, default=None):
        if value is None:
            return [default] * n
        if isinstance(value, str):
            return [value] * n
        return list(value)

    ids = [f"{id_prefix}-{i}" for i in range(n)] if ids is None else list(ids)
    rows = list(
        zip(
            ids,
            column(sources),
            column(objects),
            column(regions),
            column(countries),
            column(prompt_kinds),
            column(prompt_texts),
        )
    )
    return dataset_from_rows(vectors, rows, label=label)


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)


FIXTURE_REGIONS = ("east", "west")
FIXTURE_OBJECTS = ("car", "stove", "toothbrush")
FIXTURE_COUNTRY_MAP = {"atlantis": "east", "borduria": "east", "cascadia": "west", "dorne": "west"}


def write_config(
    directory: Path,
    generated: str = "gen_selfeval.emb",
    prompt_kind: str = "object_in_region",
    out_name: str = "out",
    **overrides,
):
    """Write a run-configuration JSON pointing at the checked-in fixtures."""
    import json

    doc = {
        "prompt_kind": prompt_kind,
        "k": 3,
        "seed": 7,
        "percentile": 10.0,
        "tail_mode": "percentile",
        "workers": 1,
        "region_vocab": list(FIXTURE_REGIONS),
        "object_vocab": list(FIXTURE_OBJECTS),
        "country_map": dict(FIXTURE_COUNTRY_MAP),
        "paths": {
            "reference": str(FIXTURES / "ref_small.emb"),
            "generated": str(FIXTURES / generated),
            "text_embeddings": str(FIXTURES / "text_small.emb"),
            "output_dir": str(Path(directory) / out_name),
        },
    }
    for key, value in overrides.items():
        if key == "paths":
            doc["paths"].update(value)
        else:
            doc[key] = value
    path = Path(directory) / "config.json"
    path.write_text(json.dumps(doc, indent=2))
    return path
