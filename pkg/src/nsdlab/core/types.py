"""Type definitions and data classes for nsdlab."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .exceptions import ConfigError


class TransformKind(str, Enum):
    """How kernel factors are constructed.

    The ``L`` prefix marks the learnable variant of an analytic transform.
    """

    RANDOM = "random"
    DCT = "dct"
    LDCT = "ldct"
    DWT = "dwt"
    SVD = "svd"
    LSVD = "lsvd"
    IDENTITY = "identity"

    @property
    def trainable(self) -> bool:
        return self in (TransformKind.RANDOM, TransformKind.LDCT, TransformKind.LSVD)

    @property
    def analytic(self) -> bool:
        """Factors can be rebuilt from code and need not be stored."""
        return self in (TransformKind.DCT, TransformKind.LDCT, TransformKind.DWT, TransformKind.IDENTITY)

    @property
    def needs_images(self) -> bool:
        return self in (TransformKind.SVD, TransformKind.LSVD)

    @classmethod
    def parse(cls, value: str | TransformKind) -> TransformKind:
        if isinstance(value, TransformKind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError as e:
            choices = ", ".join(k.value for k in cls)
            msg = f"Unsupported transform kind '{value}'. Choose one of: {choices}"
            raise ConfigError(msg) from e


@dataclass(frozen=True)
class TransformSpec:
    """Transform choice plus its variant-specific settings.

    Attributes:
        kind: Construction rule for the spatial factors
        band_probs: Keep probabilities for (LH, HL, HH); DWT only
        truncation_rank: Rank n for SVD kinds (defaults to the mode extent)
        init_from_real: Fit the starting spectra to real class images when
            real data is available
        init_scale: Multiplier on the fitted spectra
    """

    kind: TransformKind = TransformKind.RANDOM
    band_probs: tuple[float, float, float] = (0.5, 0.5, 0.5)
    truncation_rank: int | None = None
    init_from_real: bool = True
    init_scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.init_scale > 0:
            msg = f"init_scale must be > 0, got {self.init_scale}"
            raise ConfigError(msg)
        if len(self.band_probs) != 3:
            msg = f"band_probs needs three entries (LH, HL, HH), got {len(self.band_probs)}"
            raise ConfigError(msg)
        if any(not 0.0 <= p <= 1.0 for p in self.band_probs):
            msg = f"band_probs must lie in [0, 1], got {self.band_probs}"
            raise ConfigError(msg)
        if self.truncation_rank is not None and self.truncation_rank < 1:
            msg = f"truncation_rank must be >= 1, got {self.truncation_rank}"
            raise ConfigError(msg)


class LabelRule(str, Enum):
    """How synthesized images are assigned class labels."""

    PER_CLASS_TENSORS = "per_class_tensors"
    PER_CLASS_KERNELS = "per_class_kernels"
    PER_PAIR = "per_pair"

    @classmethod
    def parse(cls, value: str | LabelRule) -> LabelRule:
        if isinstance(value, LabelRule):
            return value
        try:
            return cls(str(value).lower())
        except ValueError as e:
            choices = ", ".join(r.value for r in cls)
            msg = f"Unknown label rule '{value}'. Choose one of: {choices}"
            raise ConfigError(msg) from e


class ModelFamily(str, Enum):
    CONVNET = "convnet"
    MLP = "mlp"


@dataclass(frozen=True)
class ModelSpec:
    """Network architecture description.

    Attributes:
        family: CONVNET or MLP
        depth: Number of conv blocks (or hidden layers)
        width: Channels per conv block (or hidden units)
        input_shape: ``(channels, height, width)``
        num_classes: Number of output classes C
    """

    family: ModelFamily = ModelFamily.CONVNET
    depth: int = 2
    width: int = 16
    input_shape: tuple[int, int, int] = (1, 8, 8)
    num_classes: int = 2

    def __post_init__(self) -> None:
        if self.depth < 1 or self.width < 1:
            msg = f"Model depth and width must be >= 1, got depth={self.depth}, width={self.width}"
            raise ConfigError(msg)
        if self.num_classes < 2:
            msg = f"A classifier needs at least 2 classes, got {self.num_classes}"
            raise ConfigError(msg)
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            msg = f"input_shape must be (channels, height, width), got {self.input_shape}"
            raise ConfigError(msg)

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family.value,
            "depth": self.depth,
            "width": self.width,
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelSpec:
        return cls(
            family=ModelFamily(data["family"]),
            depth=int(data["depth"]),
            width=int(data["width"]),
            input_shape=tuple(int(v) for v in data["input_shape"]),  # type: ignore[arg-type]
            num_classes=int(data["num_classes"]),
        )


@dataclass(frozen=True)
class BudgetSpec:
    """Storage budget expressed in images-per-class.

    Attributes:
        num_classes: C
        ipc: Images-per-class equivalent
        image_shape: ``(channels, H, W)``
        train_size: Number of real training images, when known
    """

    num_classes: int
    ipc: int
    image_shape: tuple[int, int, int]
    train_size: int | None = None

    def __post_init__(self) -> None:
        if self.ipc < 1:
            msg = f"ipc must be >= 1, got {self.ipc}"
            raise ConfigError(msg)
        if self.num_classes < 1:
            msg = f"num_classes must be >= 1, got {self.num_classes}"
            raise ConfigError(msg)
        if len(self.image_shape) != 3 or min(self.image_shape) < 1:
            msg = f"image_shape must be (channels, H, W), got {self.image_shape}"
            raise ConfigError(msg)
        if self.train_size is not None and self.train_size < self.num_classes * self.ipc:
            msg = (
                f"Budget of {self.num_classes * self.ipc} images exceeds "
                f"the training set size {self.train_size}"
            )
            raise ConfigError(msg)

    @property
    def budget_scalars(self) -> int:
        """``C * ipc * channels * H * W``."""
        return self.num_classes * self.ipc * math.prod(self.image_shape)

    @property
    def ratio_percent(self) -> float | None:
        """Condensed images as a percentage of the training set."""
        if self.train_size is None:
            return None
        return 100.0 * self.num_classes * self.ipc / self.train_size


@dataclass(frozen=True)
class BudgetReport:
    """Outcome of a budget check. Over budget is reported, never raised."""

    ok: bool
    stored: int
    allowed: int
    utilization: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "stored": self.stored,
            "allowed": self.allowed,
            "utilization": self.utilization,
        }


@dataclass(frozen=True)
class TrainConfig:
    """Plain SGD training settings (experts and evaluation models).

    Attributes:
        epochs: Passes over the training data
        batch_size: Mini-batch size
        lr: Learning rate
        momentum: Momentum coefficient
        weight_decay: L2 coefficient added to the gradient
        augment: Apply flip + crop augmentation to each batch
    """

    epochs: int = 200
    batch_size: int = 32
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    augment: bool = False

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1 or self.lr < 0:
            msg = (
                f"Invalid training settings: epochs={self.epochs}, "
                f"batch_size={self.batch_size}, lr={self.lr}"
            )
            raise ConfigError(msg)


class DistillMethod(str, Enum):
    """Outer objective: trajectory matching, distribution matching, gradient matching."""

    MTT = "mtt"
    DM = "dm"
    DC = "dc"


@dataclass(frozen=True)
class DistillConfig:
    """Settings for the distillation loop.

    Attributes:
        inner_steps: Student SGD steps N per outer iteration
        expert_span: Snapshots M between segment start and target
        inner_lr: Student learning rate alpha
        inner_momentum: Student momentum (0 is plain SGD)
        guided_weight: Weight gamma of the real-guided loss
        outer_lr: Learning rate for spectrum tensors and kernels
        outer_momentum: Momentum of the outer SGD
        outer_clip: Global-norm clip on the outer gradient (0 disables)
        iterations: Outer iterations
        batch_size: Synthetic and real mini-batch size
        normalize_match: Divide the match loss by the expert segment length
        method: Outer objective
        checkpoint_every: Iterations between checkpoints (0 disables)
        log_every: Iterations between progress log lines
        log_wall_clock: Include wall-clock seconds in metric records
        seed: Root seed for the per-step random streams
    """

    inner_steps: int = 10
    expert_span: int = 2
    inner_lr: float = 0.02
    inner_momentum: float = 0.0
    guided_weight: float = 0.1
    outer_lr: float = 0.05
    outer_momentum: float = 0.9
    outer_clip: float = 1.0
    iterations: int = 1000
    batch_size: int = 32
    normalize_match: bool = True
    method: DistillMethod = DistillMethod.MTT
    checkpoint_every: int = 100
    log_every: int = 50
    log_wall_clock: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        problems = []
        if self.inner_steps < 1:
            problems.append(f"inner_steps={self.inner_steps} (needs >= 1)")
        if self.expert_span < 1:
            problems.append(f"expert_span={self.expert_span} (needs >= 1)")
        if self.inner_lr <= 0:
            problems.append(f"inner_lr={self.inner_lr} (needs > 0)")
        if self.guided_weight < 0:
            problems.append(f"guided_weight={self.guided_weight} (needs >= 0)")
        if self.outer_lr < 0:
            problems.append(f"outer_lr={self.outer_lr} (needs >= 0)")
        if self.outer_clip < 0:
            problems.append(f"outer_clip={self.outer_clip} (needs >= 0)")
        if self.iterations < 0:
            problems.append(f"iterations={self.iterations} (needs >= 0)")
        if self.batch_size < 1:
            problems.append(f"batch_size={self.batch_size} (needs >= 1)")
        if problems:
            msg = "Invalid distillation settings: " + ", ".join(problems)
            raise ConfigError(msg)


@dataclass
class EvalReport:
    """Accuracy of models trained on a condensed set, over several repeats.

    Attributes:
        accuracies: Top-1 test accuracy per repeat
        spec: Architecture that was evaluated
        config_digest: Digest of the resolved run configuration
        label: Free-form name of the evaluated arm
    """

    accuracies: list[float]
    spec: ModelSpec
    config_digest: str = ""
    label: str = ""
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.accuracies:
            msg = "An evaluation report needs at least one repeat"
            raise ConfigError(msg)

    @property
    def repeats(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "accuracies": [float(a) for a in self.accuracies],
            "mean": self.mean,
            "std": self.std,
            "repeats": self.repeats,
            "spec": self.spec.to_dict(),
            "config_digest": self.config_digest,
            **self.metadata,
        }


@dataclass(frozen=True)
class LabeledImages:
    """Images ``(B, C, H, W)`` with integer labels ``(B,)``."""

    images: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        if self.images.ndim != 4:
            msg = f"Images must be (B, C, H, W), got shape {self.images.shape}"
            raise ConfigError(msg)
        if self.labels.shape != (self.images.shape[0],):
            msg = f"Expected {self.images.shape[0]} labels, got shape {self.labels.shape}"
            raise ConfigError(msg)

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(int(v) for v in self.images.shape[1:])  # type: ignore[return-value]

    def subset(self, index: np.ndarray) -> LabeledImages:
        return LabeledImages(self.images[index], self.labels[index], self.num_classes)


@dataclass
class DecodeOptions:
    """Options for decoding binary dataset files.

    Attributes:
        record_shape: ``(channels, H, W)`` of one raw record
        labels: Label payload for IDX image files
    """

    record_shape: tuple[int, int, int] | None = None
    labels: bytes | None = None
