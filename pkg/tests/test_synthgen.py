import numpy as np
import pytest

from clogprep.errors import TubeOutOfBounds
from clogprep.roi import detect_roi
from clogprep.synthgen import SynthConfig, generate_dataset, generate_sample
from clogprep.volume_io import load_manifest, read_volume


def gt_runs(gt_bits):
    """Lengths of empty-frame runs between the first and last occupied frame."""
    occupied = gt_bits.any(axis=(1, 2))
    nz = np.flatnonzero(occupied)
    runs, run = [], 0
    for z in range(nz[0], nz[-1] + 1):
        if occupied[z]:
            if run:
                runs.append(run)
            run = 0
        else:
            run += 1
    return runs


def test_flowing_ground_truth_z_connected():
    for seed in range(4):
        _, gt, _ = generate_sample(SynthConfig(seed=seed), "flowing")
        for z in range(gt.depth - 1):
            assert (gt.bits[z] & gt.bits[z + 1]).any(), f"frames {z},{z+1} disjoint"


def test_stalled_has_exactly_one_gap():
    cfg = SynthConfig(seed=11, gap_length=6)
    _, gt, _ = generate_sample(cfg, "stalled")
    runs = gt_runs(gt.bits)
    assert runs == [6]


def test_deterministic_per_seed():
    cfg = SynthConfig(seed=5)
    va, gta, roia = generate_sample(cfg, "stalled")
    vb, gtb, roib = generate_sample(cfg, "stalled")
    assert va == vb
    assert np.array_equal(gta.bits, gtb.bits)
    assert roia.bbox == roib.bbox
    vc, _, _ = generate_sample(SynthConfig(seed=6), "stalled")
    assert va != vc


def test_roi_ground_truth_matches_detection():
    for seed in (0, 9):
        vol, _, roi_gt = generate_sample(SynthConfig(seed=seed), "flowing")
        detected = detect_roi(vol)
        assert detected.bbox == roi_gt.bbox
        assert np.array_equal(detected.mask, roi_gt.mask)


def test_ground_truth_voxels_are_bright():
    vol, gt, _ = generate_sample(SynthConfig(seed=13, noise_std=10), "flowing")
    fg = vol.data[gt.bits]
    assert fg.mean() > 180


def test_tube_out_of_bounds():
    with pytest.raises(TubeOutOfBounds):
        generate_sample(SynthConfig(dims=(40, 40, 8), curvature=30.0, seed=0), "flowing")


def test_generate_dataset_layout(tmp_path):
    manifest = generate_dataset(10, SynthConfig(seed=3), tmp_path)
    assert len(manifest.samples) == 20
    labels = [s.label for s in manifest.samples]
    assert labels.count("stalled") == 10
    assert labels.count("flowing") == 10
    on_disk = load_manifest(tmp_path / "manifest.json")
    assert on_disk.samples == manifest.samples
    for record in manifest.samples:
        v = read_volume(tmp_path / record.path)
        assert v.depth == record.num_frames


def test_generate_dataset_regeneration_identical(tmp_path):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    ma = generate_dataset(3, SynthConfig(seed=8), a_dir)
    mb = generate_dataset(3, SynthConfig(seed=8), b_dir)
    assert ma.samples == mb.samples
    for record in ma.samples:
        assert (a_dir / record.path).read_bytes() == (b_dir / record.path).read_bytes()


def test_generated_samples_pass_roi_detection(tmp_path):
    manifest = generate_dataset(3, SynthConfig(seed=21), tmp_path)
    for record in manifest.samples:
        detect_roi(read_volume(tmp_path / record.path))
