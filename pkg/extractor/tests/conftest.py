from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from geodive_extractor.manifest import ManifestRow, write_manifest


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)


def make_image(path: Path, width: int, height: int, seed: int = 0) -> Path:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(pixels, "RGB").save(path)
    return path


@pytest.fixture
def image_workspace(tmp_path):
    """Images plus a manifest covering two objects in two regions."""
    rows = []
    spec = [
        ("car", "east", "atlantis"),
        ("car", "west", "cascadia"),
        ("stove", "east", "borduria"),
        ("stove", "west", "dorne"),
    ]
    for i, (obj, region, country) in enumerate(spec):
        path = make_image(tmp_path / f"img{i}.png", 40 + 8 * i, 32, seed=i)
        rows.append(
            ManifestRow(
                path=path.name,
                id=f"img-{i}",
                object=obj,
                region=region,
                country=country,
                source="real",
            )
        )
    manifest_path = tmp_path / "manifest.tsv"
    write_manifest(rows, manifest_path)
    return tmp_path, manifest_path, rows
