import struct

import numpy as np
import pytest
from PIL import Image

from clogprep.errors import (
    BadMagic,
    BadVersion,
    DimensionMismatch,
    EmptyManifest,
    EmptyVolume,
    IoFailure,
    MissingFrames,
)
from clogprep.volume_io import (
    SampleManifest,
    SampleRecord,
    VolumeTensor,
    assign_splits,
    load_manifest,
    read_volume,
    save_manifest,
    write_volume,
)


def random_volume(rng, w=5, h=4, d=3):
    return VolumeTensor(rng.integers(0, 256, size=(d, h, w, 3), dtype=np.uint8))


def make_manifest(n_stalled, n_flowing, seed=0):
    records = [
        SampleRecord(id=f"s{i:03d}", path=f"s{i:03d}.cvol", label="stalled", num_frames=8)
        for i in range(n_stalled)
    ] + [
        SampleRecord(id=f"f{i:03d}", path=f"f{i:03d}.cvol", label="flowing", num_frames=8)
        for i in range(n_flowing)
    ]
    return SampleManifest(samples=records, seed=seed)


def test_cvol_header_is_bit_exact(tmp_path):
    v = VolumeTensor(np.array([7, 8, 9], dtype=np.uint8).reshape(1, 1, 1, 3))
    path = tmp_path / "one.cvol"
    write_volume(v, path)
    raw = path.read_bytes()
    assert raw == struct.pack("<4sIIIII", b"CVOL", 1, 1, 1, 1, 3) + bytes([7, 8, 9])
    assert len(raw) == 24 + 3


def test_cvol_round_trip_bitwise():
    rng = np.random.default_rng(11)
    for _ in range(10):
        w, h, d = (int(x) for x in rng.integers(1, 9, size=3))
        v = random_volume(rng, w, h, d)
        import tempfile, os

        with tempfile.TemporaryDirectory() as tdir:
            p = os.path.join(tdir, "v.cvol")
            write_volume(v, p)
            assert read_volume(p) == v


def test_cvol_bad_magic(tmp_path):
    p = tmp_path / "bad.cvol"
    p.write_bytes(b"NOPE" + b"\x00" * 30)
    with pytest.raises(BadMagic):
        read_volume(p)


def test_cvol_bad_version(tmp_path):
    p = tmp_path / "v2.cvol"
    p.write_bytes(struct.pack("<4sIIIII", b"CVOL", 2, 1, 1, 1, 3) + b"\x00" * 3)
    with pytest.raises(BadVersion):
        read_volume(p)


def test_cvol_truncated_body(tmp_path):
    p = tmp_path / "short.cvol"
    p.write_bytes(struct.pack("<4sIIIII", b"CVOL", 1, 2, 2, 1, 3) + b"\x00" * 5)
    with pytest.raises(IoFailure):
        read_volume(p)


def test_write_unwritable_path(tmp_path):
    v = VolumeTensor(np.zeros((1, 1, 1, 3), dtype=np.uint8))
    with pytest.raises(IoFailure):
        write_volume(v, tmp_path / "missing_dir" / "v.cvol")


def _write_frames(dirpath, arrays, names=None):
    dirpath.mkdir(exist_ok=True)
    for i, arr in enumerate(arrays):
        name = names[i] if names else f"frame_{i:05d}.png"
        Image.fromarray(arr, "RGB").save(dirpath / name)


def test_frame_dir_read(tmp_path):
    rng = np.random.default_rng(3)
    frames = [rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8) for _ in range(3)]
    _write_frames(tmp_path / "vol", frames)
    v = read_volume(tmp_path / "vol")
    assert (v.width, v.height, v.depth, v.channels) == (4, 4, 3, 3)
    assert len(v.tobytes()) == 144
    assert np.array_equal(v.data, np.stack(frames))


def test_frame_dir_gap_raises(tmp_path):
    rng = np.random.default_rng(4)
    frames = [rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8) for _ in range(2)]
    _write_frames(tmp_path / "vol", frames, names=["frame_00000.png", "frame_00002.png"])
    with pytest.raises(MissingFrames):
        read_volume(tmp_path / "vol")


def test_frame_dir_empty_raises(tmp_path):
    (tmp_path / "vol").mkdir()
    with pytest.raises(EmptyVolume):
        read_volume(tmp_path / "vol")


def test_frame_dir_size_mismatch(tmp_path):
    a = np.zeros((4, 4, 3), dtype=np.uint8)
    b = np.zeros((5, 4, 3), dtype=np.uint8)
    _write_frames(tmp_path / "vol", [a, b])
    with pytest.raises(DimensionMismatch):
        read_volume(tmp_path / "vol")


def test_volume_immutable_after_construction():
    v = VolumeTensor(np.zeros((1, 2, 2, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        v.data[0, 0, 0, 0] = 1


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


def test_split_balanced_200_samples():
    m = assign_splits(make_manifest(100, 100), seed=42)
    for label in ("stalled", "flowing"):
        per = [s.split for s in m.samples if s.label == label]
        assert per.count("train") == 75
        assert per.count("val") == 15
        assert per.count("test") == 10


def test_split_deterministic():
    base = make_manifest(40, 40)
    a = assign_splits(base, seed=7)
    b = assign_splits(base, seed=7)
    assert [s.split for s in a.samples] == [s.split for s in b.samples]
    c = assign_splits(base, seed=8)
    assert [s.split for s in a.samples] != [s.split for s in c.samples]


def test_split_ten_samples_floor_rule():
    # floor(7.5)=7 train, floor(1.5)=1 val, remainder 2 test
    m = assign_splits(make_manifest(10, 0), seed=1)
    splits = [s.split for s in m.samples]
    assert splits.count("train") == 7
    assert splits.count("val") == 1
    assert splits.count("test") == 2


def test_split_partition_property():
    rng = np.random.default_rng(9)
    for _ in range(20):
        ns, nf = int(rng.integers(1, 60)), int(rng.integers(1, 60))
        m = assign_splits(make_manifest(ns, nf), seed=int(rng.integers(0, 1000)))
        assert all(s.split in ("train", "val", "test") for s in m.samples)
        for label, n in (("stalled", ns), ("flowing", nf)):
            per = [s.split for s in m.samples if s.label == label]
            assert per.count("train") == int(0.75 * n)
            assert per.count("val") == int(0.15 * n)
            assert per.count("test") == n - int(0.75 * n) - int(0.15 * n)


def test_split_empty_manifest():
    with pytest.raises(EmptyManifest):
        assign_splits(SampleManifest(samples=[], seed=0), seed=0)


def test_manifest_round_trip(tmp_path):
    m = assign_splits(make_manifest(8, 8), seed=3)
    save_manifest(m, tmp_path / "manifest.json")
    loaded = load_manifest(tmp_path / "manifest.json")
    assert loaded.seed == m.seed
    assert loaded.samples == m.samples


def test_manifest_duplicate_ids_rejected():
    rec = SampleRecord(id="a", path="a.cvol", label="stalled", num_frames=1)
    with pytest.raises(ValueError):
        SampleManifest(samples=[rec, rec], seed=0)
