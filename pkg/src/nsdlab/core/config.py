"""Run configuration: flat dotted keys with documented defaults.

Config files are TOML using dotted keys::

    seed = 3
    distill.inner_steps = 10
    transform.kind = "dct"

Command-line overrides use the same keys (``--set distill.iterations=50``).
"""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli_w

from .exceptions import ConfigError, FileOperationError
from .types import (
    BudgetSpec,
    DistillConfig,
    DistillMethod,
    LabelRule,
    ModelFamily,
    ModelSpec,
    TrainConfig,
    TransformKind,
    TransformSpec,
)


if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

AUTO = "auto"

# key -> (default, kind)
SCHEMA: dict[str, tuple[Any, str]] = {
    "seed": (0, "int"),
    "output_dir": ("runs/default", "str"),
    "dataset.kind": ("blobs", "str"),
    "dataset.path": (None, "opt_str"),
    "dataset.labels_path": (None, "opt_str"),
    "dataset.classes": (2, "int"),
    "dataset.samples": (200, "int"),
    "dataset.image_size": (8, "int"),
    "dataset.channels": (1, "int"),
    "dataset.noise": (0.35, "float"),
    "dataset.seed": (7, "int"),
    "dataset.test_fraction": (0.25, "float"),
    "dataset.mean": (None, "opt_float_list"),
    "dataset.std": (None, "opt_float_list"),
    "budget.ipc": (1, "int"),
    "budget.train_size": (None, "opt_int"),
    "decomposition.enabled": (True, "bool"),
    "decomposition.t1": (AUTO, "auto_int"),
    "decomposition.t3": (AUTO, "auto_int"),
    "decomposition.u1": (AUTO, "auto_int"),
    "decomposition.tensors_per_class": (1, "int"),
    "decomposition.kernels": (1, "int"),
    "decomposition.u1_ratio": (2.0, "float"),
    "decomposition.label_rule": (LabelRule.PER_CLASS_TENSORS.value, "str"),
    "transform.kind": (TransformKind.RANDOM.value, "str"),
    "transform.band_probs": ([0.5, 0.5, 0.5], "float_list"),
    "transform.rank": (None, "opt_int"),
    "transform.init_from_real": (True, "bool"),
    "transform.init_scale": (1.0, "float"),
    "model.family": (ModelFamily.CONVNET.value, "str"),
    "model.depth": (2, "int"),
    "model.width": (16, "int"),
    "expert.trajectories": (4, "int"),
    "expert.epochs": (20, "int"),
    "expert.snapshot_stride": (1, "int"),
    "expert.lr": (0.01, "float"),
    "expert.momentum": (0.9, "float"),
    "expert.weight_decay": (0.0005, "float"),
    "expert.batch_size": (32, "int"),
    "distill.method": (DistillMethod.MTT.value, "str"),
    "distill.inner_steps": (10, "int"),
    "distill.expert_span": (2, "int"),
    "distill.inner_lr": (0.02, "float"),
    "distill.inner_momentum": (0.0, "float"),
    "distill.guided_weight": (0.1, "float"),
    "distill.outer_lr": (0.05, "float"),
    "distill.outer_momentum": (0.9, "float"),
    "distill.outer_clip": (1.0, "float"),
    "distill.iterations": (1000, "int"),
    "distill.batch_size": (32, "int"),
    "distill.normalize_match": (True, "bool"),
    "distill.checkpoint_every": (100, "int"),
    "distill.log_every": (50, "int"),
    "distill.log_wall_clock": (False, "bool"),
    "eval.repeats": (5, "int"),
    "eval.epochs": (200, "int"),
    "eval.batch_size": (32, "int"),
    "eval.lr": (0.01, "float"),
    "eval.momentum": (0.9, "float"),
    "eval.weight_decay": (0.0005, "float"),
    "eval.augment": (True, "bool"),
}


def _flatten(tree: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _nest(flat: dict[str, Any]) -> dict[str, Any]:
    tree: dict[str, Any] = {}
    for key, value in flat.items():
        if value is None:
            continue
        *sections, leaf = key.split(".")
        node = tree
        for section in sections:
            node = node.setdefault(section, {})
        node[leaf] = value
    return tree


def _coerce(key: str, value: Any) -> Any:
    """Check ``value`` against the schema entry for ``key``."""
    if key not in SCHEMA:
        msg = f"Unknown configuration key '{key}'"
        raise ConfigError(msg)
    _, kind = SCHEMA[key]
    if value is None and kind.startswith("opt_"):
        return None
    base = kind.removeprefix("opt_")

    def fail() -> ConfigError:
        return ConfigError(f"Configuration key '{key}' expects {base.replace('_', ' ')}, got {value!r}")

    if base == "bool":
        if not isinstance(value, bool):
            raise fail()
        return value
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise fail()
        return int(value)
    if base == "auto_int":
        if isinstance(value, str) and value.lower() == AUTO:
            return AUTO
        if isinstance(value, bool) or not isinstance(value, int):
            raise fail()
        return int(value)
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise fail()
        return float(value)
    if base == "float_list":
        if not isinstance(value, (list, tuple)) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
        ):
            raise fail()
        return [float(v) for v in value]
    if not isinstance(value, str):
        raise fail()
    return value


def parse_override(assignment: str) -> tuple[str, Any]:
    """Parse ``key=value``; the value is read as a TOML literal, else a bare string.

    Raises:
        ConfigError: If there is no ``=``
    """
    if "=" not in assignment:
        msg = f"Override '{assignment}' must have the form key=value"
        raise ConfigError(msg)
    key, raw = (part.strip() for part in assignment.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration.

    Attributes:
        values: Flat mapping of every schema key to its resolved value
        source: File the configuration was loaded from, if any
    """

    values: dict[str, Any] = field(default_factory=lambda: {k: v for k, (v, _) in SCHEMA.items()})
    source: str | None = None

    def __post_init__(self) -> None:
        for key, value in list(self.values.items()):
            self.values[key] = _coerce(key, value)
        for key, (default, _) in SCHEMA.items():
            self.values.setdefault(key, default)
        self._check()

    def _check(self) -> None:
        v = self.values
        if v["budget.ipc"] < 1:
            msg = f"budget.ipc must be >= 1, got {v['budget.ipc']}"
            raise ConfigError(msg)
        if v["dataset.kind"] not in ("blobs", "idx", "raw"):
            msg = f"dataset.kind must be blobs, idx or raw, got '{v['dataset.kind']}'"
            raise ConfigError(msg)
        if v["dataset.classes"] < 2 or v["dataset.channels"] < 1 or v["dataset.image_size"] < 2:
            msg = "dataset.classes must be >= 2, dataset.channels >= 1 and dataset.image_size >= 2"
            raise ConfigError(msg)
        if not 0.0 < v["dataset.test_fraction"] < 1.0:
            msg = f"dataset.test_fraction must lie in (0, 1), got {v['dataset.test_fraction']}"
            raise ConfigError(msg)
        if v["decomposition.tensors_per_class"] < 1 or v["decomposition.kernels"] < 1:
            msg = "decomposition.tensors_per_class and decomposition.kernels must be >= 1"
            raise ConfigError(msg)
        if v["expert.trajectories"] < 1:
            msg = f"expert.trajectories must be >= 1, got {v['expert.trajectories']}"
            raise ConfigError(msg)
        if v["expert.epochs"] < 1 or v["expert.snapshot_stride"] < 1:
            msg = (
                "An expert trajectory needs at least two snapshots: "
                f"expert.epochs={v['expert.epochs']}, expert.snapshot_stride={v['expert.snapshot_stride']}"
            )
            raise ConfigError(msg)
        if v["eval.repeats"] < 1:
            msg = f"eval.repeats must be >= 1, got {v['eval.repeats']}"
            raise ConfigError(msg)
        LabelRule.parse(v["decomposition.label_rule"])
        TransformKind.parse(v["transform.kind"])
        try:
            ModelFamily(v["model.family"])
            DistillMethod(v["distill.method"])
        except ValueError as e:
            msg = f"Invalid choice in configuration: {e}"
            raise ConfigError(msg) from e
        # Building the typed views validates their ranges.
        self.distill_config()
        self.transform_spec()

    def __getitem__(self, key: str) -> Any:
        if key not in self.values:
            msg = f"Unknown configuration key '{key}'"
            raise ConfigError(msg)
        return self.values[key]

    def with_values(self, updates: dict[str, Any]) -> RunConfig:
        """Return a copy with the given dotted keys replaced."""
        merged = dict(self.values)
        for key, value in updates.items():
            merged[key] = _coerce(key, value)
        return RunConfig(values=merged, source=self.source)

    # Typed views

    def distill_config(self) -> DistillConfig:
        v = self.values
        return DistillConfig(
            inner_steps=v["distill.inner_steps"],
            expert_span=v["distill.expert_span"],
            inner_lr=v["distill.inner_lr"],
            inner_momentum=v["distill.inner_momentum"],
            guided_weight=v["distill.guided_weight"],
            outer_lr=v["distill.outer_lr"],
            outer_momentum=v["distill.outer_momentum"],
            outer_clip=v["distill.outer_clip"],
            iterations=v["distill.iterations"],
            batch_size=v["distill.batch_size"],
            normalize_match=v["distill.normalize_match"],
            method=DistillMethod(v["distill.method"]),
            checkpoint_every=v["distill.checkpoint_every"],
            log_every=v["distill.log_every"],
            log_wall_clock=v["distill.log_wall_clock"],
            seed=v["seed"],
        )

    def expert_config(self) -> TrainConfig:
        v = self.values
        return TrainConfig(
            epochs=v["expert.epochs"],
            batch_size=v["expert.batch_size"],
            lr=v["expert.lr"],
            momentum=v["expert.momentum"],
            weight_decay=v["expert.weight_decay"],
        )

    def eval_config(self) -> TrainConfig:
        v = self.values
        return TrainConfig(
            epochs=v["eval.epochs"],
            batch_size=v["eval.batch_size"],
            lr=v["eval.lr"],
            momentum=v["eval.momentum"],
            weight_decay=v["eval.weight_decay"],
            augment=v["eval.augment"],
        )

    def transform_spec(self) -> TransformSpec:
        v = self.values
        return TransformSpec(
            kind=TransformKind.parse(v["transform.kind"]),
            band_probs=tuple(v["transform.band_probs"]),  # type: ignore[arg-type]
            truncation_rank=v["transform.rank"],
            init_from_real=v["transform.init_from_real"],
            init_scale=v["transform.init_scale"],
        )

    def model_spec(self, input_shape: tuple[int, int, int], num_classes: int) -> ModelSpec:
        v = self.values
        return ModelSpec(
            family=ModelFamily(v["model.family"]),
            depth=v["model.depth"],
            width=v["model.width"],
            input_shape=input_shape,
            num_classes=num_classes,
        )

    def budget_spec(
        self,
        num_classes: int | None = None,
        image_shape: tuple[int, int, int] | None = None,
        train_size: int | None = None,
    ) -> BudgetSpec:
        v = self.values
        size = v["dataset.image_size"]
        return BudgetSpec(
            num_classes=num_classes if num_classes is not None else v["dataset.classes"],
            ipc=v["budget.ipc"],
            image_shape=image_shape if image_shape is not None else (v["dataset.channels"], size, size),
            train_size=v["budget.train_size"] if v["budget.train_size"] is not None else train_size,
        )

    # Serialization

    def digest(self) -> str:
        """SHA-256 over the sorted flat mapping; changes iff a resolved value changes."""
        payload = json.dumps(
            {k: self.values[k] for k in sorted(self.values)},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_toml(self) -> str:
        return tomli_w.dumps(_nest(self.values))

    def save(self, path: str | Path) -> Path:
        from nsdlab.utils.io import write_text

        target = Path(path)
        write_text(target, self.to_toml())
        return target


def load_config(path: str | Path | None = None, overrides: tuple[str, ...] | list[str] = ()) -> RunConfig:
    """Resolve defaults, then the config file, then ``key=value`` overrides.

    Args:
        path: Optional TOML file with dotted keys
        overrides: ``key=value`` strings applied last

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: On unknown keys, wrong types or invalid values
        FileOperationError: If the file cannot be read
    """
    values = {key: default for key, (default, _) in SCHEMA.items()}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            msg = f"Failed to read config file {path}: {e}"
            raise FileOperationError(msg) from e
        try:
            tree = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            msg = f"Config file {path} is not valid TOML: {e}"
            raise ConfigError(msg) from e
        for key, value in _flatten(tree).items():
            values[key] = _coerce(key, value)
    for assignment in overrides:
        key, value = parse_override(assignment)
        values[key] = _coerce(key, value)
        logger.debug("Override %s = %r", key, value)
    return RunConfig(values=values, source=str(path) if path is not None else None)
