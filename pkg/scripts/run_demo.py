#!/usr/bin/env python3
"""End-to-end demo on a synthetic two-region world.

Builds prompts, synthesizes reference/generated embedding files (generated
vectors are noisy copies of the reference, with one region degraded), runs
the full report through the CLI, and prints the per-region results.
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from geodive.cli import main as cli_main
from geodive.prompts import PromptSpec, build_prompts, write_prompts
from geodive.store import dataset_from_rows, write_dataset

REGIONS = ("Alpinia", "Borealia")
OBJECTS = ("car", "stove", "plate of food")
COUNTRIES = {"Alpinia": ("Aland", "Avia", "Arbor"), "Borealia": ("Bern", "Boro", "Brim")}
PER_CELL = 40
DIM = 16


def synthesize(workdir: Path) -> Path:
    rng = np.random.default_rng(2718)
    ref_vectors, ref_rows = [], []
    gen_vectors, gen_rows = [], []
    for obj in OBJECTS:
        for region in REGIONS:
            center = rng.normal(scale=4.0, size=DIM)
            for i in range(PER_CELL):
                vec = center + rng.normal(size=DIM)
                ref_vectors.append(vec)
                ref_rows.append((f"ref-{obj}-{region}-{i}", "real", obj, region, None, "none", None))
                # Borealia generations drift away from the real data.
                drift = 6.0 if region == "Borealia" else 0.0
                gen_vectors.append(vec + rng.normal(scale=0.3, size=DIM) + drift)
                gen_rows.append(
                    (f"gen-{obj}-{region}-{i}", "generated", obj, region, None, "object_in_region", f"{obj} in {region}")
                )
    write_dataset(
        dataset_from_rows(np.asarray(ref_vectors, dtype=np.float32), ref_rows, label="demo-reference"),
        workdir / "reference.emb",
    )
    write_dataset(
        dataset_from_rows(np.asarray(gen_vectors, dtype=np.float32), gen_rows, label="demo-model"),
        workdir / "generated.emb",
    )

    text_vectors = rng.normal(size=(len(OBJECTS), DIM)).astype(np.float32)
    text_rows = [(obj, "real", obj, "", None, "object", obj) for obj in OBJECTS]
    write_dataset(dataset_from_rows(text_vectors, text_rows, label="demo-text"), workdir / "text.emb")

    spec = PromptSpec(
        objects=OBJECTS,
        regions=REGIONS,
        countries_per_region=COUNTRIES,
        per_object_region=PER_CELL,
    )
    write_prompts(build_prompts(spec, "object_in_region"), workdir / "prompts.tsv")

    config = {
        "prompt_kind": "object_in_region",
        "k": 3,
        "seed": 7,
        "percentile": 10.0,
        "tail_mode": "percentile",
        "region_vocab": list(REGIONS),
        "object_vocab": list(OBJECTS),
        "country_map": {c: r for r, cs in COUNTRIES.items() for c in cs},
        "paths": {
            "reference": "reference.emb",
            "generated": "generated.emb",
            "text_embeddings": "text.emb",
            "output_dir": "out",
        },
    }
    config_path = workdir / "config.json"
    config_path.write_text(json.dumps(config, indent=2))
    return config_path


def main() -> int:
    with tempfile.TemporaryDirectory(prefix="geodive-demo-") as tmp:
        workdir = Path(tmp)
        config_path = synthesize(workdir)
        code = cli_main(["full-report", "--config", str(config_path)])
        if code != 0:
            return code
        report = json.loads((workdir / "out" / "report.json").read_text())
        print("\nper-region indicators:")
        for region in REGIONS:
            cell = report["region_indicator"][region]
            consistency = report["consistency_indicator"][region]["value"]
            print(
                f"  {region:10s} precision={cell['precision']:.3f} "
                f"coverage={cell['coverage']:.3f} consistency={consistency:+.3f}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
