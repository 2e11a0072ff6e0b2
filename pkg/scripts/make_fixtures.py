#!/usr/bin/env python3
"""Regenerate the synthetic embedding fixtures under tests/fixtures/.

Everything is seeded, so reruns are byte-identical. The fixture world has
two regions ("east", "west"), three objects, two countries per region, and
dim-8 feature vectors clustered per (object, region) cell:

  ref_small.emb     reference, 10 records per cell (60 total)
  gen_selfeval.emb  generated twin of the reference, region-prompted
  gen_country.emb   generated twin, country-prompted (region left blank)
  gen_pool.emb      bare-object pool, two copies of every reference vector
  gen_shifted.emb   east generations mean-shifted by 10x the data scale
  text_small.emb    one text embedding per object
"""

from pathlib import Path

import numpy as np

from geodive.store import dataset_from_rows, write_dataset

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

REGIONS = ("east", "west")
OBJECTS = ("car", "stove", "toothbrush")
COUNTRIES = {"east": ("atlantis", "borduria"), "west": ("cascadia", "dorne")}
PER_CELL = 10
DIM = 8
SEED = 20240810


def reference_vectors(rng):
    vectors, rows = [], []
    for obj in OBJECTS:
        for region in REGIONS:
            center = rng.normal(scale=5.0, size=DIM)
            for i in range(PER_CELL):
                vectors.append(center + rng.normal(size=DIM))
                country = COUNTRIES[region][i % 2]
                rows.append((f"ref-{obj}-{region}-{i}", "real", obj, region, country, "none", None))
    return np.asarray(vectors, dtype=np.float32), rows


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)

    vectors, rows = reference_vectors(rng)
    ref = dataset_from_rows(vectors, rows, label="fixture-reference")
    write_dataset(ref, FIXTURES / "ref_small.emb")

    self_rows = [
        (f"gen-{obj}-{region}-{i}", "generated", obj, region, None, "object_in_region", f"{obj} in {region}")
        for obj in OBJECTS
        for region in REGIONS
        for i in range(PER_CELL)
    ]
    write_dataset(dataset_from_rows(vectors, self_rows, label="fixture-selfeval"), FIXTURES / "gen_selfeval.emb")

    country_rows = []
    for obj in OBJECTS:
        for region in REGIONS:
            for i in range(PER_CELL):
                country = COUNTRIES[region][i % 2]
                country_rows.append(
                    (f"genc-{obj}-{region}-{i}", "generated", obj, "", country, "object_in_country", f"{obj} in {country}")
                )
    write_dataset(dataset_from_rows(vectors, country_rows, label="fixture-country"), FIXTURES / "gen_country.emb")

    pool_vectors = np.concatenate([vectors, vectors])
    pool_rows = [
        (f"pool-{copy}-{obj}-{region}-{i}", "generated", obj, "", None, "object", obj)
        for copy in (0, 1)
        for obj in OBJECTS
        for region in REGIONS
        for i in range(PER_CELL)
    ]
    write_dataset(dataset_from_rows(pool_vectors, pool_rows, label="fixture-pool"), FIXTURES / "gen_pool.emb")

    east_mask = np.asarray([row[3] == "east" for row in self_rows])
    spread = float(
        np.sqrt(((vectors[east_mask][:, None, :] - vectors[east_mask][None, :, :]) ** 2).sum(-1)).max()
    )
    shifted = vectors.copy()
    shifted[east_mask, 0] += np.float32(10.0 * spread)
    shift_rows = [
        (f"shift-{obj}-{region}-{i}", "generated", obj, region, None, "object_in_region", f"{obj} in {region}")
        for obj in OBJECTS
        for region in REGIONS
        for i in range(PER_CELL)
    ]
    write_dataset(dataset_from_rows(shifted, shift_rows, label="fixture-shifted"), FIXTURES / "gen_shifted.emb")

    text_vectors = rng.normal(size=(len(OBJECTS), DIM)).astype(np.float32)
    text_rows = [(obj, "real", obj, "", None, "object", obj) for obj in OBJECTS]
    write_dataset(dataset_from_rows(text_vectors, text_rows, label="fixture-text"), FIXTURES / "text_small.emb")

    for name in sorted(p.name for p in FIXTURES.glob("*.emb")):
        print(f"wrote {FIXTURES / name}")


if __name__ == "__main__":
    main()
