import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geodive.errors import DataError
from geodive.store import (
    MAGIC,
    METADATA_COLUMNS,
    dataset_from_rows,
    load_dataset,
    write_dataset,
)

from conftest import make_dataset


def test_round_trip_basic(tmp_path):
    ds = make_dataset(
        [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]],
        objects=["car", "stove"],
        regions=["east", "west"],
        countries=["Aland", None],
        prompt_kinds=["none", "none"],
        sources="real",
        label="fixture",
    )
    path = tmp_path / "two.emb"
    write_dataset(ds, path)
    loaded = load_dataset(path)
    assert loaded == ds
    assert len(loaded) == 2 and loaded.dim == 3


def test_round_trip_preserves_vector_bits(tmp_path):
    # Includes negative zero and subnormals; equality is on raw bytes.
    vectors = np.array([[-0.0, np.float32(1e-41)], [np.pi, -np.e]], dtype=np.float32)
    ds = make_dataset(vectors)
    path = tmp_path / "bits.emb"
    write_dataset(ds, path)
    assert load_dataset(path).vectors.tobytes() == vectors.tobytes()


def test_empty_dataset_round_trip(tmp_path):
    ds = make_dataset(np.zeros((0, 2048), dtype=np.float32))
    path = tmp_path / "empty.emb"
    write_dataset(ds, path)
    loaded = load_dataset(path)
    assert len(loaded) == 0
    assert loaded.dim == 2048


def test_balanced_scale_round_trip(tmp_path):
    # 27 objects x 6 regions x 180 records, the balanced-reference shape.
    objects = [f"obj{i:02d}" for i in range(27)]
    regions = [f"region{j}" for j in range(6)]
    obj_col, region_col = [], []
    for obj in objects:
        for region in regions:
            obj_col.extend([obj] * 180)
            region_col.extend([region] * 180)
    n = len(obj_col)
    assert n == 29_160
    vectors = np.arange(n * 4, dtype=np.float32).reshape(n, 4)
    ds = make_dataset(vectors, objects=obj_col, regions=region_col)
    path = tmp_path / "balanced.emb"
    write_dataset(ds, path)
    loaded = load_dataset(path)
    assert len(loaded) == 29_160
    assert loaded.cell_counts()[("obj00", "region3")] == 180


def test_nan_vector_rejected_with_index():
    vectors = np.array([[0.0, 1.0], [np.nan, 0.0]], dtype=np.float32)
    with pytest.raises(DataError, match="record 1"):
        make_dataset(vectors)


def test_infinite_vector_rejected():
    vectors = np.array([[0.0, 1.0], [1.0, np.inf], [0.0, 0.0]], dtype=np.float32)
    with pytest.raises(DataError, match="record 1"):
        make_dataset(vectors)


def test_duplicate_id_rejected():
    with pytest.raises(DataError, match="duplicate id 'a'"):
        make_dataset(np.zeros((2, 2), dtype=np.float32), ids=["a", "a"])


def test_country_required_for_country_prompts():
    with pytest.raises(DataError, match="requires a country"):
        make_dataset(np.zeros((1, 2)), prompt_kinds="object_in_country", countries=None)


def test_unknown_enum_values_rejected():
    with pytest.raises(DataError, match="unknown source"):
        make_dataset(np.zeros((1, 2)), sources="synthetic")
    with pytest.raises(DataError, match="unknown prompt_kind"):
        make_dataset(np.zeros((1, 2)), prompt_kinds="freeform")


def test_malformed_header(tmp_path):
    path = tmp_path / "bad.emb"
    path.write_bytes(b"not json\n")
    with pytest.raises(DataError, match="malformed header"):
        load_dataset(path)
    path.write_bytes(b'{"magic":"OTHER/9","dim":1,"count":0,"label":"","columns":[]}\n')
    with pytest.raises(DataError, match="malformed header"):
        load_dataset(path)


def test_payload_size_mismatch_names_record(tmp_path):
    ds = make_dataset(np.ones((3, 2), dtype=np.float32))
    path = tmp_path / "trunc.emb"
    write_dataset(ds, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])  # drop half of the last record's payload
    with pytest.raises(DataError, match="record 2"):
        load_dataset(path)


def test_metadata_field_count_checked(tmp_path):
    header = (
        '{"magic":"%s","dim":1,"count":1,"label":"","columns":%s}'
        % (MAGIC, str(list(METADATA_COLUMNS)).replace("'", '"'))
    ).encode() + b"\n"
    path = tmp_path / "fields.emb"
    path.write_bytes(header + b"a\treal\tcar\teast\n" + b"\x00" * 4)
    with pytest.raises(DataError, match="record 0"):
        load_dataset(path)


def test_tab_in_field_rejected_at_write(tmp_path):
    ds = make_dataset(np.zeros((1, 1)), objects="bad\tname")
    with pytest.raises(DataError, match="contains a tab"):
        write_dataset(ds, tmp_path / "tab.emb")


def test_nfc_normalization_applied():
    # "e" + combining acute vs precomposed e-acute normalize to one key.
    decomposed = "café"
    composed = "café"
    ds = make_dataset(np.zeros((2, 1)), objects=[decomposed, composed])
    assert ds.objects[0] == ds.objects[1] == composed


def test_slice_by_region():
    ds = make_dataset(np.zeros((5, 2)), regions=["east"] * 3 + ["west"] * 2)
    out = ds.slice(region="east")
    assert len(out) == 3
    assert set(out.regions) == {"east"}


def test_slice_conjunction():
    ds = make_dataset(
        np.zeros((4, 2)),
        objects=["stove", "stove", "car", "stove"],
        regions=["west", "east", "west", "west"],
    )
    out = ds.slice(object="stove", region="west")
    assert [out.ids[i] for i in range(len(out))] == ["rec-0", "rec-3"]


def test_slice_empty_result_is_legal():
    ds = make_dataset(np.zeros((2, 2)))
    assert len(ds.slice(region="nowhere")) == 0


def test_slice_idempotent_and_order_preserving():
    ds = make_dataset(np.arange(12, dtype=np.float32).reshape(6, 2), regions=["a", "b", "a", "a", "b", "a"])
    once = ds.slice(region="a")
    twice = once.slice(region="a")
    assert once == twice
    assert list(once.ids) == ["rec-0", "rec-2", "rec-3", "rec-5"]


def test_region_slices_reconstruct_dataset():
    ds = make_dataset(np.arange(10, dtype=np.float32).reshape(5, 2), regions=["a", "b", "a", "c", "b"])
    pieces = [ds.slice(region=r) for r in ("a", "b", "c")]
    ids = [i for piece in pieces for i in piece.ids]
    assert sorted(ids) == sorted(ds.ids)
    assert sum(len(p) for p in pieces) == len(ds)


def test_vectors_are_immutable():
    ds = make_dataset(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        ds.vectors[0, 0] = 1.0


def test_content_digest_tracks_content():
    a = make_dataset(np.zeros((2, 2)))
    b = make_dataset(np.zeros((2, 2)))
    c = make_dataset(np.ones((2, 2)))
    assert a.content_digest() == b.content_digest()
    assert a.content_digest() != c.content_digest()


@st.composite
def dataset_strategy(draw):
    n = draw(st.integers(min_value=0, max_value=12))
    dim = draw(st.integers(min_value=1, max_value=6))
    values = draw(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, width=32, allow_nan=False, allow_infinity=False),
            min_size=n * dim,
            max_size=n * dim,
        )
    )
    vectors = np.asarray(values, dtype=np.float32).reshape(n, dim)
    names = st.text(
        alphabet=st.characters(blacklist_characters="\t\n\r", blacklist_categories=("Cs",)),
        min_size=1,
        max_size=8,
    )
    objects = draw(st.lists(names, min_size=n, max_size=n))
    regions = draw(st.lists(names, min_size=n, max_size=n))
    return make_dataset(vectors, objects=objects, regions=regions, label=draw(names))


@given(dataset_strategy())
@settings(max_examples=60, deadline=None)
def test_round_trip_property(tmp_path_factory, ds):
    path = tmp_path_factory.mktemp("rt") / "ds.emb"
    write_dataset(ds, path)
    assert load_dataset(path) == ds
