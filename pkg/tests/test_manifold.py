import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geodive.errors import PreconditionError
from geodive.manifold import (
    build_manifold,
    coverage,
    load_manifold,
    precision,
    precision_coverage,
    save_manifold,
)

from conftest import make_dataset
from oracles import brute_precision_coverage, brute_sq_radii


def gen_ds(vectors, **kw):
    kw.setdefault("sources", "generated")
    kw.setdefault("prompt_kinds", "object_in_region")
    kw.setdefault("id_prefix", "gen")
    return make_dataset(vectors, **kw)


def test_radii_k1():
    real = make_dataset([(0, 0), (3, 0), (4, 0)])
    model = build_manifold(real, k=1)
    assert model.radii.tolist() == [3.0, 1.0, 1.0]


def test_radii_k2():
    real = make_dataset([(0, 0), (3, 0), (4, 0)])
    model = build_manifold(real, k=2)
    assert model.radii.tolist() == [4.0, 3.0, 4.0]


def test_k_must_leave_a_neighbor():
    with pytest.raises(PreconditionError, match="too small"):
        build_manifold(make_dataset([(0, 0)]), k=1)
    with pytest.raises(PreconditionError, match="empty"):
        build_manifold(make_dataset(np.zeros((0, 2))), k=1)
    with pytest.raises(PreconditionError, match="k must be"):
        build_manifold(make_dataset([(0, 0), (1, 0)]), k=0)
    with pytest.raises(PreconditionError, match="zero-dimensional"):
        build_manifold(make_dataset(np.zeros((3, 0))), k=1)


def test_duplicate_points_give_zero_radius():
    real = make_dataset([(1, 1), (1, 1), (5, 5)])
    model = build_manifold(real, k=1)
    assert model.radii[0] == 0.0 and model.radii[1] == 0.0


def test_tied_distances_consume_neighbor_slots():
    # Point 0 sits at distance 1 from both neighbors; the tie fills k=1 and k=2.
    real = make_dataset([(0, 0), (1, 0), (-1, 0)])
    assert build_manifold(real, k=1).radii[0] == 1.0
    assert build_manifold(real, k=2).radii[0] == 1.0


def test_precision_self_is_one():
    real = make_dataset(np.random.default_rng(0).normal(size=(20, 3)))
    model = build_manifold(real, k=3)
    result = precision(model, gen_ds(real.vectors))
    assert result.value == 1.0
    assert result.n_real == 20 and result.n_generated == 20 and result.k == 3


def test_precision_far_point_is_zero():
    real = make_dataset([(0, 0), (1, 0)])
    model = build_manifold(real, k=1)
    assert precision(model, gen_ds([(3, 0)])).value == 0.0


def test_precision_two_clusters():
    real = make_dataset([(0, 0), (1, 0), (10, 0), (11, 0)])
    model = build_manifold(real, k=1)
    gen = gen_ds([(0.5, 0), (0.6, 0)])
    assert precision(model, gen).value == 1.0


def test_coverage_self_is_one():
    real = make_dataset(np.random.default_rng(1).normal(size=(15, 4)))
    model = build_manifold(real, k=2)
    assert coverage(model, gen_ds(real.vectors)).value == 1.0


def test_coverage_half_covered():
    real = make_dataset([(0, 0), (1, 0), (10, 0), (11, 0)])
    model = build_manifold(real, k=1)
    gen = gen_ds([(0.5, 0), (0.6, 0)])
    assert coverage(model, gen).value == 0.5


def test_coverage_nothing_covered():
    real = make_dataset([(0, 0), (1, 0)])
    model = build_manifold(real, k=1)
    assert coverage(model, gen_ds([(2.5, 0)])).value == 0.0


def test_membership_uses_closed_balls():
    # All-identical reference: radii are 0, and only exact copies count.
    real = make_dataset([(2, 2), (2, 2)])
    model = build_manifold(real, k=1)
    assert model.radii.tolist() == [0.0, 0.0]
    assert precision(model, gen_ds([(2, 2)])).value == 1.0
    assert coverage(model, gen_ds([(2, 2)])).value == 1.0
    assert precision(model, gen_ds([(2, 2 + 1e-6)])).value == 0.0


def test_dimension_mismatch_rejected():
    model = build_manifold(make_dataset([(0, 0), (1, 0)]), k=1)
    with pytest.raises(PreconditionError, match="dimension mismatch"):
        precision(model, gen_ds([(0, 0, 0)]))


def test_empty_generated_rejected():
    model = build_manifold(make_dataset([(0, 0), (1, 0)]), k=1)
    with pytest.raises(PreconditionError, match="empty"):
        precision(model, gen_ds(np.zeros((0, 2))))


@given(
    n_real=st.integers(min_value=2, max_value=40),
    n_gen=st.integers(min_value=1, max_value=40),
    dim=st.integers(min_value=1, max_value=8),
    k=st.integers(min_value=1, max_value=5),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=150, deadline=None)
def test_matches_brute_force_oracle(n_real, n_gen, dim, k, seed):
    if k > n_real - 1:
        k = n_real - 1
    rng = np.random.default_rng(seed)
    real_vecs = rng.normal(size=(n_real, dim)).astype(np.float32)
    gen_vecs = rng.normal(size=(n_gen, dim)).astype(np.float32)
    # Sometimes inject exact copies so zero radii and zero distances occur.
    if n_gen >= 2 and seed % 3 == 0:
        gen_vecs[0] = real_vecs[0]
    real = make_dataset(real_vecs)
    gen = gen_ds(gen_vecs)
    model = build_manifold(real, k=k)
    expect_sq = brute_sq_radii(real_vecs.astype(np.float64), k)
    assert model.sq_radii.tolist() == expect_sq.tolist()
    expect_p, expect_c = brute_precision_coverage(
        real_vecs.astype(np.float64), gen_vecs.astype(np.float64), k
    )
    got_p, got_c = precision_coverage(model, gen)
    assert got_p.value == expect_p
    assert got_c.value == expect_c


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_isometry_invariance(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 9))
    real = rng.normal(size=(30, dim))
    gen = rng.normal(size=(25, dim))
    gen[0] = real[0]  # keep one exact duplicate across the transform

    rotation = np.linalg.qr(rng.normal(size=(dim, dim)))[0]
    translation = rng.normal(size=dim) * 10
    perm = rng.permutation(dim)

    def transform(x):
        return ((x @ rotation) + translation)[:, perm]

    k = 3
    base_p, base_c = precision_coverage(build_manifold(make_dataset(real), k), gen_ds(gen))
    iso_p, iso_c = precision_coverage(
        build_manifold(make_dataset(transform(real)), k), gen_ds(transform(gen))
    )
    assert iso_p.value == base_p.value
    assert iso_c.value == base_c.value


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_record_order_invariance(seed):
    rng = np.random.default_rng(seed)
    real = rng.normal(size=(20, 4))
    gen = rng.normal(size=(15, 4))
    k = 2
    base_p, base_c = precision_coverage(build_manifold(make_dataset(real), k), gen_ds(gen))
    shuf_p, shuf_c = precision_coverage(
        build_manifold(make_dataset(real[rng.permutation(20)]), k),
        gen_ds(gen[rng.permutation(15)]),
    )
    assert shuf_p.value == base_p.value
    assert shuf_c.value == base_c.value


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_monotone_in_k(seed):
    rng = np.random.default_rng(seed)
    real = make_dataset(rng.normal(size=(25, 5)))
    gen = gen_ds(rng.normal(size=(20, 5)))
    prev_radii = None
    prev_p = prev_c = 0.0
    for k in range(1, 6):
        model = build_manifold(real, k)
        if prev_radii is not None:
            assert (model.radii >= prev_radii).all()
        p, c = precision_coverage(model, gen)
        assert p.value >= prev_p and c.value >= prev_c
        prev_radii, prev_p, prev_c = model.radii, p.value, c.value


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_coverage_monotone_under_added_generations(seed):
    rng = np.random.default_rng(seed)
    model = build_manifold(make_dataset(rng.normal(size=(20, 3))), k=2)
    gen = rng.normal(size=(12, 3))
    small = coverage(model, gen_ds(gen[:6])).value
    large = coverage(model, gen_ds(gen)).value
    assert large >= small


def test_parallel_matches_serial_bitwise(rng):
    real_vecs = rng.normal(size=(500, 6))
    gen_vecs = rng.normal(size=(400, 6))
    real, gen = make_dataset(real_vecs), gen_ds(gen_vecs)
    serial = build_manifold(real, k=3, workers=1)
    parallel = build_manifold(real, k=3, workers=4)
    assert serial.radii.tobytes() == parallel.radii.tobytes()
    sp, sc = precision_coverage(serial, gen, workers=1)
    pp, pc = precision_coverage(parallel, gen, workers=4)
    assert (sp.value, sc.value) == (pp.value, pc.value)


def test_tiling_matches_single_block(rng, monkeypatch):
    import geodive.manifold as mm

    real_vecs = rng.normal(size=(64, 5))
    gen_vecs = rng.normal(size=(50, 5))
    real, gen = make_dataset(real_vecs), gen_ds(gen_vecs)
    whole = build_manifold(real, k=3)
    wp, wc = precision_coverage(whole, gen)
    monkeypatch.setattr(mm, "_TILE_ELEMS", 64)  # force many tiny tiles
    tiled = build_manifold(real, k=3)
    tp, tc = precision_coverage(tiled, gen)
    assert whole.radii.tobytes() == tiled.radii.tobytes()
    assert (wp.value, wc.value) == (tp.value, tc.value)


def test_manifold_cache_round_trip(tmp_path, rng):
    real = make_dataset(rng.normal(size=(10, 3)))
    model = build_manifold(real, k=2)
    path = tmp_path / "cache.man"
    save_manifold(model, path)
    loaded = load_manifold(path, real)
    assert loaded.k == 2
    assert loaded.radii.tobytes() == model.radii.tobytes()
    assert loaded.sq_radii.tobytes() == model.sq_radii.tobytes()


def test_manifold_cache_rejects_changed_reference(tmp_path, rng):
    from geodive.errors import DataError

    real = make_dataset(rng.normal(size=(10, 3)))
    other = make_dataset(rng.normal(size=(10, 3)))
    path = tmp_path / "cache.man"
    save_manifold(build_manifold(real, k=2), path)
    with pytest.raises(DataError, match="does not match"):
        load_manifold(path, other)
