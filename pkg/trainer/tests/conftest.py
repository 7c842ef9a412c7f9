import shutil
import subprocess

import pytest

CLOGPREP = shutil.which("clogprep")


def run_clogprep(*args):
    assert CLOGPREP, "clogprep CLI not on PATH (install the preprocessing package)"
    proc = subprocess.run(
        [CLOGPREP, *map(str, args)], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0, f"clogprep {args[0]} failed:\n{proc.stderr}"
    return proc


def build_dataset(root, n_per_class, seed, noise_std=10.0, split_seed=0, workers="2"):
    """Synthesize, split, and preprocess a dataset through the clogprep CLI."""
    data = root / "data"
    prep = root / "prep"
    run_clogprep(
        "synth", "--n", n_per_class, "--out", data, "--seed", seed, "--noise-std", noise_std
    )
    run_clogprep("split", "--manifest", data / "manifest.json", "--seed", split_seed)
    run_clogprep(
        "preprocess", "--manifest", data / "manifest.json", "--out", prep, "--workers", workers
    )
    return data / "manifest.json", prep


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """24 samples, enough for fast train-loop tests (train 18 / val 2 / test 4)."""
    root = tmp_path_factory.mktemp("small_ds")
    return build_dataset(root, 12, seed=50)
