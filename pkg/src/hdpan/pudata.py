"""Dataset containers, the on-disk directory format, and PU split construction.

A dataset directory holds three files:

    meta        UTF-8 text, one "key = value" per line, keys in order:
                name, n, h, w, c, label_offset
    images.bin  n*h*w*c unsigned bytes, row-major (N, H, W, C)
    labels.bin  n unsigned bytes

The format is bit-exact: save followed by load reproduces images and labels
byte for byte.  c must be 1 or 3.  label_offset records the value of the
first category in the source labeling (0 for the distributed benchmarks,
1 for prose-style numbering); parity binarization consumes it.

A PU split hides the unlabeled set's ground truth from training: the
trainer receives a TrainView without the truth vector, which stays on the
PUSplit for the metrics path only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

META_KEYS = ("name", "n", "h", "w", "c", "label_offset")


class DataError(Exception):
    """Malformed dataset directory or infeasible split request."""


@dataclass
class LabeledImageSet:
    images: np.ndarray  # (N, H, W, C) uint8
    labels: np.ndarray  # (N,) uint8
    name: str
    label_offset: int = 0

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.uint8)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if self.images.ndim != 4:
            raise DataError(f"images must be (N, H, W, C), got {self.images.shape}")
        if self.images.shape[3] not in (1, 3):
            raise DataError(f"channel count must be 1 or 3, got {self.images.shape[3]}")
        if len(self.labels) != self.images.shape[0]:
            raise DataError(
                f"{len(self.labels)} labels for {self.images.shape[0]} images"
            )

    def __len__(self) -> int:
        return self.images.shape[0]


@dataclass
class TrainView:
    """What the trainer is allowed to see: no unlabeled ground truth."""

    positives: np.ndarray  # (Np, H, W, C) uint8
    unlabeled: np.ndarray  # (Nu, H, W, C) uint8
    val: LabeledImageSet
    test: LabeledImageSet


@dataclass
class PUSplit:
    positives: np.ndarray
    unlabeled: np.ndarray
    unlabeled_truth: np.ndarray  # evaluation only; never read by the trainer
    val: LabeledImageSet
    test: LabeledImageSet
    seed: int
    positive_indices: np.ndarray  # into the source training set
    unlabeled_indices: np.ndarray

    def train_view(self) -> TrainView:
        return TrainView(self.positives, self.unlabeled, self.val, self.test)


def save_dataset(ds: LabeledImageSet, dirpath) -> None:
    os.makedirs(dirpath, exist_ok=True)
    n, h, w, c = ds.images.shape
    meta = "".join(
        f"{k} = {v}\n"
        for k, v in zip(META_KEYS, (ds.name, n, h, w, c, ds.label_offset))
    )
    with open(os.path.join(dirpath, "meta"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(meta)
    with open(os.path.join(dirpath, "images.bin"), "wb") as fh:
        fh.write(ds.images.tobytes())
    with open(os.path.join(dirpath, "labels.bin"), "wb") as fh:
        fh.write(ds.labels.tobytes())


def load_dataset(dirpath) -> LabeledImageSet:
    meta_path = os.path.join(dirpath, "meta")
    try:
        with open(meta_path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {meta_path}: {exc}") from exc

    fields = {}
    for ln in lines:
        key, sep, value = ln.partition("=")
        if not sep:
            raise DataError(f"{meta_path}: bad line {ln!r}")
        fields[key.strip()] = value.strip()
    missing = [k for k in META_KEYS if k not in fields]
    if missing:
        raise DataError(f"{meta_path}: missing keys {missing}")

    try:
        n, h, w, c = (int(fields[k]) for k in ("n", "h", "w", "c"))
        label_offset = int(fields["label_offset"])
    except ValueError as exc:
        raise DataError(f"{meta_path}: non-integer size field") from exc
    if c not in (1, 3):
        raise DataError(f"{meta_path}: channel count must be 1 or 3, got {c}")

    img_path = os.path.join(dirpath, "images.bin")
    lbl_path = os.path.join(dirpath, "labels.bin")
    try:
        raw_img = open(img_path, "rb").read()
        raw_lbl = open(lbl_path, "rb").read()
    except OSError as exc:
        raise DataError(f"cannot read dataset binaries: {exc}") from exc
    if len(raw_img) != n * h * w * c:
        raise DataError(
            f"{img_path}: {len(raw_img)} bytes, expected {n}*{h}*{w}*{c}"
        )
    if len(raw_lbl) != n:
        raise DataError(f"{lbl_path}: {len(raw_lbl)} bytes, expected {n}")

    images = np.frombuffer(raw_img, dtype=np.uint8).reshape(n, h, w, c)
    labels = np.frombuffer(raw_lbl, dtype=np.uint8)
    return LabeledImageSet(images, labels, fields["name"], label_offset)


def binarize_by_parity(labels, label_offset: int = 1) -> np.ndarray:
    """Map category labels to binary: even-numbered categories are positive.

    Categories are numbered from 1 in the convention this follows; a source
    whose stored labels start at label_offset has category number
    label - label_offset + 1, so stored label L is positive iff
    (L - label_offset) is odd.
    """
    labels = np.asarray(labels)
    return ((labels.astype(np.int64) - label_offset) % 2 == 1).astype(np.uint8)


def is_binary(labels) -> bool:
    return bool(np.all(np.asarray(labels) <= 1))


def binarize_dataset(ds: LabeledImageSet) -> LabeledImageSet:
    """Binary label view of a dataset.

    Already-binary label sets pass through unchanged (their positive class
    is 1); running parity on them would invert the labels, so they bypass
    it.  Multi-category sets are binarized by parity using the recorded
    offset; the result is canonical 0/1, so its label_offset is 0.
    """
    if is_binary(ds.labels):
        return ds
    labels = binarize_by_parity(ds.labels, ds.label_offset)
    return LabeledImageSet(ds.images, labels, ds.name, label_offset=0)


def draw_positive_indices(
    labels: np.ndarray, n_positive: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform draw of the labeled-positive index set.

    Returns (positive_indices, unlabeled_indices), both sorted; the unlabeled
    set is the complement of the draw over all samples.
    """
    labels = np.asarray(labels)
    if not is_binary(labels):
        raise DataError("labels must be binarized before splitting")
    pos_pool = np.flatnonzero(labels == 1)
    if n_positive < 1:
        raise DataError(f"n_positive must be >= 1, got {n_positive}")
    if len(pos_pool) < n_positive:
        raise DataError(
            f"requested {n_positive} positives, only {len(pos_pool)} exist"
        )
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(pos_pool, size=n_positive, replace=False))
    mask = np.ones(len(labels), dtype=bool)
    mask[chosen] = False
    return chosen, np.flatnonzero(mask)


def make_pu_split(
    ds: LabeledImageSet,
    n_positive: int,
    seed: int,
    val: LabeledImageSet,
    test: LabeledImageSet,
) -> PUSplit:
    """Draw the labeled-positive set and hide the rest of the training labels.

    n_positive positives are drawn uniformly without replacement (seeded);
    every remaining training image goes to the unlabeled set, whose true
    labels are kept only for the metrics path.  val and test pass through.
    """
    try:
        chosen, unlabeled_idx = draw_positive_indices(ds.labels, n_positive, seed)
    except DataError as exc:
        raise DataError(f"{ds.name}: {exc}") from exc
    return PUSplit(
        positives=ds.images[chosen],
        unlabeled=ds.images[unlabeled_idx],
        unlabeled_truth=ds.labels[unlabeled_idx].copy(),
        val=val,
        test=test,
        seed=seed,
        positive_indices=chosen,
        unlabeled_indices=unlabeled_idx,
    )


def synth_gaussians(
    n_per_class: int, dim: int, separation: float, seed: int
) -> LabeledImageSet:
    """Two isotropic Gaussian classes packed into the 8-bit image container.

    Class means sit at +/-(separation/2) along the first axis; the positive
    class (label 1) is on the + side.  Samples are quantized to bytes over
    [-(separation/2 + 1), +(separation/2 + 1)]: one sigma of headroom beyond
    each mean, so the byte range is spent on class structure rather than on
    tails.  Outer tails saturate at 0/255, which only moves them further from
    the decision boundary.  Stored as (N, 1, dim, 1) images.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if separation < 0.0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    rng = np.random.default_rng(seed)
    half = separation / 2.0
    neg = rng.standard_normal((n_per_class, dim))
    neg[:, 0] -= half
    pos = rng.standard_normal((n_per_class, dim))
    pos[:, 0] += half
    points = np.concatenate([neg, pos])
    labels = np.concatenate(
        [np.zeros(n_per_class, dtype=np.uint8), np.ones(n_per_class, dtype=np.uint8)]
    )
    order = rng.permutation(len(points))
    points, labels = points[order], labels[order]

    span = half + 1.0
    quantized = np.clip(np.rint((points + span) * (255.0 / (2.0 * span))), 0, 255)
    images = quantized.astype(np.uint8).reshape(-1, 1, dim, 1)
    return LabeledImageSet(images, labels, f"synth-gaussians-{dim}d", label_offset=0)


def normalize(images, dtype=np.float32) -> np.ndarray:
    """8-bit intensities to reals in [0, 1] (x / 255)."""
    return np.asarray(images).astype(dtype) / np.asarray(255.0, dtype=dtype)
