"""Hypersphere manifold estimation and precision/coverage metrics.

The manifold of a real dataset is the union of closed balls centered at its
points, each with radius equal to the Euclidean distance to that point's
k-th nearest neighbor (self excluded). Precision is the fraction of
generated points inside the union; coverage is the fraction of balls that
contain at least one generated point.

Numerics: squared distances are accumulated in float64 using the difference
form sum((x - y)^2), never the Gram expansion, so coincident points yield an
exact zero. Membership compares squared distances against squared radii with
<=, which keeps duplicate points and zero radii consistent. Pairwise work is
tiled over query rows; tiles are independent, so worker count never changes
the result.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from .errors import DataError, PreconditionError
from .store import EmbeddingDataset, atomic_write_bytes

DEFAULT_K = 3
MANIFOLD_MAGIC = "GEODIVE-MAN/1"

# Tile budget: at most this many float64 elements per (rows x points x dim)
# difference tensor, ~256 MiB.
_TILE_ELEMS = 1 << 25


@dataclass(frozen=True)
class ManifoldModel:
    """Per-real-point hypersphere radii estimated from k-th-NN distances."""

    points: EmbeddingDataset
    radii: np.ndarray
    sq_radii: np.ndarray
    k: int


@dataclass(frozen=True)
class MetricResult:
    value: float
    n_real: int
    n_generated: int
    k: int


def _as_f64(ds: EmbeddingDataset) -> np.ndarray:
    return np.ascontiguousarray(ds.vectors, dtype=np.float64)


def _sq_dists(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (len(queries), len(points))."""
    diff = queries[:, None, :] - points[None, :, :]
    return (diff * diff).sum(axis=2)


def _tiles(n_rows: int, n_points: int, dim: int) -> list[tuple[int, int]]:
    rows_per_tile = max(1, _TILE_ELEMS // max(1, n_points * dim))
    return [(a, min(a + rows_per_tile, n_rows)) for a in range(0, n_rows, rows_per_tile)]


def _run_tiles(fn, tiles: list[tuple[int, int]], workers: int) -> list:
    if workers <= 1 or len(tiles) <= 1:
        return [fn(a, b) for a, b in tiles]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tiles))


def build_manifold(real: EmbeddingDataset, k: int = DEFAULT_K, workers: int = 1) -> ManifoldModel:
    """Estimate hypersphere radii for every point of ``real``.

    Ties in distance count as distinct neighbors, so radii[j] is the k-th
    order statistic of the multiset of distances from point j to the others.
    Requires k >= 1 and at least k + 1 points.
    """
    n = len(real)
    if n == 0:
        raise PreconditionError("cannot build a manifold on an empty dataset")
    if real.dim < 1:
        raise PreconditionError("cannot build a manifold on zero-dimensional vectors")
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if k > n - 1:
        raise PreconditionError(f"dataset too small for k={k}: need at least {k + 1} records, got {n}")

    points = _as_f64(real)
    sq_radii = np.empty(n, dtype=np.float64)

    def tile(a: int, b: int) -> None:
        sq = _sq_dists(points[a:b], points)
        sq[np.arange(b - a), np.arange(a, b)] = np.inf  # exclude self
        sq_radii[a:b] = np.partition(sq, k - 1, axis=1)[:, k - 1]

    _run_tiles(tile, _tiles(n, n, real.dim), workers)
    radii = np.sqrt(sq_radii)
    radii.setflags(write=False)
    sq_radii.setflags(write=False)
    return ManifoldModel(points=real, radii=radii, sq_radii=sq_radii, k=k)


def _membership(manifold: ManifoldModel, gen: EmbeddingDataset, workers: int) -> tuple[np.ndarray, np.ndarray]:
    """For each generated point, whether it falls inside any ball; for each
    ball, whether any generated point falls inside it."""
    if len(gen) == 0:
        raise PreconditionError("generated dataset is empty")
    if gen.dim != manifold.points.dim:
        raise PreconditionError(
            f"dimension mismatch: generated dim {gen.dim} vs reference dim {manifold.points.dim}"
        )
    points = _as_f64(manifold.points)
    queries = _as_f64(gen)
    sq_radii = manifold.sq_radii
    n_gen = len(gen)

    gen_hit = np.zeros(n_gen, dtype=bool)
    tiles = _tiles(n_gen, len(manifold.points), gen.dim)

    def tile(a: int, b: int) -> np.ndarray:
        inside = _sq_dists(queries[a:b], points) <= sq_radii[None, :]
        gen_hit[a:b] = inside.any(axis=1)
        return inside.any(axis=0)

    per_tile = _run_tiles(tile, tiles, workers)
    ball_hit = np.logical_or.reduce(per_tile, axis=0)
    return gen_hit, ball_hit


def precision(manifold: ManifoldModel, gen: EmbeddingDataset, workers: int = 1) -> MetricResult:
    """Fraction of generated points lying inside the manifold (closed balls)."""
    gen_hit, _ = _membership(manifold, gen, workers)
    value = float(np.count_nonzero(gen_hit)) / len(gen)
    return MetricResult(value=value, n_real=len(manifold.points), n_generated=len(gen), k=manifold.k)


def coverage(manifold: ManifoldModel, gen: EmbeddingDataset, workers: int = 1) -> MetricResult:
    """Fraction of real-point hyperspheres containing a generated point."""
    _, ball_hit = _membership(manifold, gen, workers)
    value = float(np.count_nonzero(ball_hit)) / len(manifold.points)
    return MetricResult(value=value, n_real=len(manifold.points), n_generated=len(gen), k=manifold.k)


def precision_coverage(
    manifold: ManifoldModel, gen: EmbeddingDataset, workers: int = 1
) -> tuple[MetricResult, MetricResult]:
    """Both metrics from a single pass over the pairwise distances."""
    gen_hit, ball_hit = _membership(manifold, gen, workers)
    n_real, n_gen = len(manifold.points), len(gen)
    return (
        MetricResult(float(np.count_nonzero(gen_hit)) / n_gen, n_real, n_gen, manifold.k),
        MetricResult(float(np.count_nonzero(ball_hit)) / n_real, n_real, n_gen, manifold.k),
    )


def save_manifold(manifold: ManifoldModel, path: str | Path) -> None:
    """Cache radii to disk, keyed by the reference dataset's content digest.

    Layout: one JSON header line (magic, k, count, checksum), then count
    little-endian float64 radii, then count little-endian float64 squared
    radii.
    """
    header = {
        "magic": MANIFOLD_MAGIC,
        "k": manifold.k,
        "count": len(manifold.points),
        "checksum": manifold.points.content_digest(),
    }
    data = (
        json.dumps(header, separators=(",", ":")).encode("utf-8")
        + b"\n"
        + np.ascontiguousarray(manifold.radii, dtype="<f8").tobytes()
        + np.ascontiguousarray(manifold.sq_radii, dtype="<f8").tobytes()
    )
    atomic_write_bytes(Path(path), data)


def load_manifold(path: str | Path, points: EmbeddingDataset) -> ManifoldModel:
    """Load cached radii; rejects the cache if ``points`` has changed."""
    raw = Path(path).read_bytes()
    cut = raw.find(b"\n")
    if cut < 0:
        raise DataError(f"{path}: malformed manifold header")
    try:
        header = json.loads(raw[:cut].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed manifold header ({exc})") from exc
    if header.get("magic") != MANIFOLD_MAGIC:
        raise DataError(f"{path}: expected magic {MANIFOLD_MAGIC!r}")
    if header.get("checksum") != points.content_digest():
        raise DataError(f"{path}: cached manifold does not match the given reference dataset")
    count, k = header.get("count"), header.get("k")
    if count != len(points) or not isinstance(k, int):
        raise DataError(f"{path}: malformed manifold header (count/k)")
    payload = raw[cut + 1 :]
    if len(payload) != 2 * count * 8:
        raise DataError(f"{path}: manifold payload has wrong size")
    radii = np.frombuffer(payload[: count * 8], dtype="<f8")
    sq_radii = np.frombuffer(payload[count * 8 :], dtype="<f8")
    return ManifoldModel(points=points, radii=radii, sq_radii=sq_radii, k=k)
