"""Dataset ingestion: synthetic blobs, IDX file pairs and raw record files.

Every loader returns images scaled to [0, 1]; :func:`load_dataset` then
splits off a test set and standardizes each channel with statistics taken
from the training split.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from nsdlab.core.config import RunConfig
from nsdlab.core.exceptions import ConfigError, DataError
from nsdlab.core.registry import get_registry
from nsdlab.core.types import DecodeOptions, LabeledImages
from nsdlab.formats.idx import images_from_idx
from nsdlab.utils.io import read_bytes
from nsdlab.utils.validation import validate_file_exists, validate_labels


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetSplit:
    """Normalized train/test data plus provenance.

    Attributes:
        train: Training images and labels
        test: Held-out images and labels
        mean: Per-channel mean removed from both splits
        std: Per-channel standard deviation divided out
        fingerprint: SHA-256 of the normalized training set
    """

    train: LabeledImages
    test: LabeledImages
    mean: tuple[float, ...]
    std: tuple[float, ...]
    fingerprint: str

    @property
    def num_classes(self) -> int:
        return self.train.num_classes

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return self.train.image_shape

    def stats(self) -> dict[str, Any]:
        return {"dataset.mean": list(self.mean), "dataset.std": list(self.std)}


def make_blobs(
    classes: int = 2,
    samples: int = 200,
    image_size: int = 8,
    channels: int = 1,
    noise: float = 0.35,
    seed: int = 7,
) -> LabeledImages:
    """Class-balanced Gaussian-bump images in [0, 1].

    Class ``k`` places a bump near the point at angle ``pi/2 + 2*pi*k/classes``
    on a ring around the image centre (two classes sit above and below, so a
    horizontal flip keeps the class); each sample jitters the bump position and
    amplitude and adds pixel noise.
    """
    if classes < 2 or samples < classes or image_size < 2 or channels < 1:
        msg = f"Invalid blob settings: classes={classes}, samples={samples}, image_size={image_size}"
        raise ConfigError(msg)
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(samples) % classes)
    grid = np.arange(image_size, dtype=np.float64) + 0.5
    centre = image_size / 2
    radius = 0.28 * image_size
    angles = np.pi / 2 + 2 * np.pi * labels / classes
    cy = centre + radius * np.sin(angles) + rng.normal(0.0, 0.12 * image_size, samples)
    cx = centre + radius * np.cos(angles) + rng.normal(0.0, 0.12 * image_size, samples)
    width = 0.18 * image_size
    bump = np.exp(
        -((grid[None, :, None] - cy[:, None, None]) ** 2 + (grid[None, None, :] - cx[:, None, None]) ** 2)
        / (2 * width**2)
    )
    amplitude = rng.uniform(0.6, 1.0, size=(samples, channels, 1, 1))
    images = amplitude * bump[:, None, :, :]
    images = images + noise * rng.normal(size=images.shape)
    return LabeledImages(np.clip(images, 0.0, 1.0), labels.astype(np.int64), classes)


def _scale_unit(array: np.ndarray) -> np.ndarray:
    if np.issubdtype(array.dtype, np.integer):
        return array.astype(np.float64) / 255.0
    return array.astype(np.float64)


def load_idx_pair(images_path: str, labels_path: str, classes: int) -> LabeledImages:
    """Read an IDX image stack and its IDX label vector.

    Raises:
        FileOperationError: If a file is missing
        DataFormatError: On a bad magic or size mismatch
    """
    adapter = get_registry().get("idx")
    images = images_from_idx(adapter.decode(read_bytes(validate_file_exists(images_path))))
    labels = adapter.decode(read_bytes(validate_file_exists(labels_path)))
    if labels.ndim != 1 or labels.shape[0] != images.shape[0]:
        msg = f"{labels_path} holds {labels.shape} labels for {images.shape[0]} images"
        raise DataError(msg)
    return LabeledImages(_scale_unit(images), validate_labels(labels, classes), classes)


def load_raw_records(path: str, record_shape: tuple[int, int, int], classes: int) -> LabeledImages:
    """Read a raw record file (u8 label + float32 pixels per record)."""
    adapter = get_registry().get("raw")
    images, labels = adapter.decode(
        read_bytes(validate_file_exists(path)), DecodeOptions(record_shape=record_shape)
    )
    return LabeledImages(_scale_unit(images), validate_labels(labels, classes), classes)


def split_train_test(data: LabeledImages, test_fraction: float, seed: int) -> tuple[LabeledImages, LabeledImages]:
    """Stratified split; every class keeps at least one training image."""
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for c in range(data.num_classes):
        members = rng.permutation(np.flatnonzero(data.labels == c))
        if members.size == 0:
            continue
        n_test = min(int(round(members.size * test_fraction)), members.size - 1)
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx)) if test_idx else np.zeros(0, dtype=np.int64)
    if test.size == 0:
        msg = f"test_fraction={test_fraction} leaves no test images"
        raise ConfigError(msg)
    return data.subset(train), data.subset(test)


def channel_stats(images: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = images.mean(axis=(0, 2, 3))
    std = images.std(axis=(0, 2, 3))
    return mean, np.where(std > 0, std, 1.0)


def normalize(data: LabeledImages, mean: np.ndarray, std: np.ndarray) -> LabeledImages:
    images = (data.images - mean.reshape(1, -1, 1, 1)) / std.reshape(1, -1, 1, 1)
    return LabeledImages(images, data.labels, data.num_classes)


def fingerprint(data: LabeledImages) -> str:
    """SHA-256 over image bytes, labels and shape."""
    h = hashlib.sha256()
    h.update(str(data.images.shape).encode("ascii"))
    h.update(np.ascontiguousarray(data.images, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(data.labels, dtype=np.int64).tobytes())
    return h.hexdigest()


def load_dataset(cfg: RunConfig) -> DatasetSplit:
    """Load, split and normalize the configured dataset.

    Raises:
        ConfigError: On missing paths or invalid settings
        FileOperationError: If a dataset file is missing
        DataFormatError: If a file does not match its format
    """
    kind = cfg["dataset.kind"]
    classes = cfg["dataset.classes"]
    if kind == "blobs":
        data = make_blobs(
            classes=classes,
            samples=cfg["dataset.samples"],
            image_size=cfg["dataset.image_size"],
            channels=cfg["dataset.channels"],
            noise=cfg["dataset.noise"],
            seed=cfg["dataset.seed"],
        )
    elif kind == "idx":
        if not cfg["dataset.path"] or not cfg["dataset.labels_path"]:
            msg = "dataset.kind = 'idx' needs dataset.path and dataset.labels_path"
            raise ConfigError(msg)
        data = load_idx_pair(cfg["dataset.path"], cfg["dataset.labels_path"], classes)
    else:
        if not cfg["dataset.path"]:
            msg = "dataset.kind = 'raw' needs dataset.path"
            raise ConfigError(msg)
        size = cfg["dataset.image_size"]
        data = load_raw_records(cfg["dataset.path"], (cfg["dataset.channels"], size, size), classes)

    train, test = split_train_test(data, cfg["dataset.test_fraction"], cfg["dataset.seed"])
    mean, std = channel_stats(train.images)
    train, test = normalize(train, mean, std), normalize(test, mean, std)
    split = DatasetSplit(
        train=train,
        test=test,
        mean=tuple(float(m) for m in mean),
        std=tuple(float(s) for s in std),
        fingerprint=fingerprint(train),
    )
    logger.info(
        "Loaded %s dataset: %d train / %d test images of shape %s",
        kind,
        len(train),
        len(test),
        train.image_shape,
    )
    return split
