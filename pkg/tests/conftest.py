"""Shared fixtures: small synthetic dataset roots and config-file helpers."""

import numpy as np
import pytest

from hdpan.pudata import LabeledImageSet, save_dataset, synth_gaussians


def three_way(full: LabeledImageSet, n_train: int, n_val: int, n_test: int):
    """Slice an already-shuffled labeled set into train/val/test parts."""
    if n_train + n_val + n_test > len(full):
        raise ValueError("not enough samples to slice")
    parts = []
    at = 0
    for n in (n_train, n_val, n_test):
        parts.append(
            LabeledImageSet(
                full.images[at : at + n],
                full.labels[at : at + n],
                full.name,
                full.label_offset,
            )
        )
        at += n
    return parts


def write_dataset_root(root, train, val, test):
    for part_name, part in (("train", train), ("val", val), ("test", test)):
        save_dataset(part, root / part_name)
    return root


def write_config(path, **keys):
    """Write a flat key = value config file; None values are omitted."""
    lines = [f"{k} = {v}" for k, v in keys.items() if v is not None]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def synth_root(tmp_path):
    """Dataset root holding 120/40/40 two-Gaussian samples (dim 2, sep 6)."""
    full = synth_gaussians(110, 2, 6.0, seed=5)
    train, val, test = three_way(full, 120, 40, 40)
    return write_dataset_root(tmp_path / "synth", train, val, test)


@pytest.fixture
def tenclass_root(tmp_path):
    """Tiny ten-class dataset (random 4x4 images, labels 1..10) for parity paths."""
    rng = np.random.default_rng(17)

    def part(n):
        return LabeledImageSet(
            rng.integers(0, 256, size=(n, 4, 4, 1), dtype=np.uint8),
            (rng.integers(0, 10, size=n) + 1).astype(np.uint8),
            "tenclass",
            label_offset=1,
        )

    return write_dataset_root(tmp_path / "tenclass", part(80), part(30), part(30))
