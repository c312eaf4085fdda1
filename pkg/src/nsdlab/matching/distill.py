"""The outer distillation loop over spectrum tensors and kernels.

One step samples an expert segment, starts a student at the segment's first
snapshot, trains it for N recorded SGD steps on mini-batches synthesized from
the live state and updates every trainable tensor and kernel factor with the
gradient of ``match + guided_weight * guided``. The DM and DC objectives
replace the trajectory match when ``cfg.method`` selects them.
"""

from __future__ import annotations

import json
import logging
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from nsdlab.core.exceptions import ConfigError, ContractViolationError, DataFormatError, SamplingError
from nsdlab.core.seeding import SeedStreams
from nsdlab.core.types import DistillConfig, DistillMethod, LabeledImages, LabelRule, TransformKind
from nsdlab.decomposition import (
    DistillState,
    KernelFactor,
    OuterOptimizerState,
    SeparableKernel,
    SpectrumTensor,
    factor_name,
    spectrum_name,
    synthesize_dataset,
)
from nsdlab.diffmath import InnerBatch, Node, backward, no_grad, ops, unrolled_sgd_gradients
from nsdlab.formats.container import load_container, save_container
from nsdlab.models import Model, ParamVector, build_model
from nsdlab.transforms.haar import sample_band_mask
from nsdlab.utils.io import append_line, truncate_lines

from .losses import dc_loss, dm_loss, match_loss, real_guided_loss
from .trajectory import ExpertBank


logger = logging.getLogger(__name__)

SEED_CEILING = 2**31 - 1


@dataclass(frozen=True)
class StepMetrics:
    """Scalars reported by one outer step.

    ``match`` holds the DM or DC loss when those objectives are selected;
    ``guided`` is None whenever the guided loss was not computed.
    """

    iteration: int
    match: float
    guided: float | None
    combined: float
    skipped: tuple[str, ...] = ()
    wall_clock: float | None = None

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "iteration": self.iteration,
            "match": self.match,
            "guided": self.guided,
            "combined": self.combined,
        }
        if self.skipped:
            record["skipped"] = list(self.skipped)
        if self.wall_clock is not None:
            record["wall_clock"] = self.wall_clock
        return record


@dataclass(frozen=True)
class StepResult:
    """Updated state plus everything needed to replay the step.

    Attributes:
        state: State after the outer update
        metrics: Scalars of the step
        student_final: Student parameters after the unroll (MTT only)
        trajectory: Index of the sampled trajectory (MTT only)
        start: Sampled start snapshot i (MTT only)
        batch_indices: Synthetic image indices used by each inner step
        mask: Band mask applied to the spectra, if any
    """

    state: DistillState
    metrics: StepMetrics
    student_final: np.ndarray | None = None
    trajectory: int | None = None
    start: int | None = None
    batch_indices: tuple[np.ndarray, ...] = ()
    mask: np.ndarray | None = None


@dataclass
class DistillResult:
    state: DistillState
    metrics: list[StepMetrics] = field(default_factory=list)


class DistillCallback(Protocol):
    def on_step(self, result: StepResult) -> None: ...

    def on_end(self, state: DistillState) -> None: ...


def sample_segment(bank: ExpertBank, span: int, rng: np.random.Generator) -> tuple[int, int]:
    """Pick a trajectory uniformly among those long enough, then a start ``i <= T - span``.

    Raises:
        SamplingError: If no trajectory has more than ``span`` snapshots
    """
    eligible = [k for k, t in enumerate(bank.trajectories) if len(t) > span]
    if not eligible:
        longest = max(len(t) for t in bank.trajectories)
        msg = f"No expert trajectory covers a span of {span} snapshots (longest has {longest})"
        raise SamplingError(msg)
    k = eligible[int(rng.integers(len(eligible)))]
    start = int(rng.integers(len(bank.trajectories[k]) - span))
    return k, start


def _uses_dwt(state: DistillState) -> bool:
    return any(f.kind is TransformKind.DWT for k in state.kernels for f in k.factors)


def _draw_mask(state: DistillState, rng: np.random.Generator) -> np.ndarray | None:
    if state.band_probs is None or not _uses_dwt(state):
        return None
    _, _, t3, t4 = state.tensor_dims
    return sample_band_mask(t3, t4, rng, state.band_probs)


def _real_batch(real: LabeledImages, size: int, rng: np.random.Generator) -> LabeledImages:
    return real.subset(rng.integers(0, len(real), size=size))


def clip_global_norm(gradients: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    """Scale all gradients together so their joint L2 norm is at most ``max_norm`` (0 disables)."""
    if max_norm <= 0 or not gradients:
        return gradients
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in gradients.values())))
    if total <= max_norm:
        return gradients
    scale = max_norm / total
    return {name: g * scale for name, g in gradients.items()}


def outer_update(
    state: DistillState,
    gradients: dict[str, np.ndarray],
    lr: float,
    momentum: float,
    clip: float = 0.0,
) -> DistillState:
    """One momentum-SGD step on the named trainable leaves, after global-norm clipping."""
    gradients = clip_global_norm(gradients, clip)
    velocity = dict(state.optimizer.velocity)
    updates: dict[str, np.ndarray] = {}
    for name, node in state.trainable_leaves().items():
        g = gradients.get(name)
        if g is None:
            g = np.zeros_like(node.value)
        v = momentum * velocity[name] + g if name in velocity else np.array(g)
        velocity[name] = v
        updates[name] = node.value - lr * v
    return state.with_values(updates, OuterOptimizerState(velocity=velocity, step=state.step + 1))


def _by_name(state: DistillState, leaf_grads: dict[Node, np.ndarray]) -> dict[str, np.ndarray]:
    names = {id(node): name for name, node in state.trainable_leaves().items()}
    return {names[id(leaf)]: g for leaf, g in leaf_grads.items()}


def _mtt_objective(
    state: DistillState,
    bank: ExpertBank,
    cfg: DistillConfig,
    rng: np.random.Generator,
    model: Model,
    real: LabeledImages | None,
    mask: np.ndarray | None,
) -> tuple[float, dict[str, np.ndarray], dict[str, Any]]:
    k, i = sample_segment(bank, cfg.expert_span, rng)
    trajectory = bank.trajectories[k]
    expert_start, expert_target = trajectory[i], trajectory[i + cfg.expert_span]

    images, labels = synthesize_dataset(state, mask=mask)
    n_images = images.shape[0]
    size = min(cfg.batch_size, n_images)
    indices = tuple(rng.choice(n_images, size=size, replace=False) for _ in range(cfg.inner_steps))
    batches = [InnerBatch(ops.take_rows(images, idx), labels[idx]) for idx in indices]

    real_batch: LabeledImages | None = None
    if cfg.guided_weight > 0:
        if real is None:
            msg = "A positive guided_weight needs the real training set"
            raise ConfigError(msg)
        real_batch = _real_batch(real, cfg.batch_size, rng)

    parts: dict[str, Node] = {}

    def objective(final: Node) -> Node:
        parts["match"] = match_loss(final, expert_start, expert_target, cfg.normalize_match)
        if real_batch is None:
            return parts["match"]
        parts["guided"] = real_guided_loss(model, final, real_batch)
        return ops.add(parts["match"], ops.mul(parts["guided"], cfg.guided_weight))

    outcome = unrolled_sgd_gradients(
        lambda theta, batch: model.loss(theta, batch.images, batch.labels),
        expert_start.values,
        batches,
        cfg.inner_steps,
        cfg.inner_lr,
        cfg.inner_momentum,
        outer_loss=objective,
        leaves=state.trainable_leaves().values(),
    )
    info = {
        "match": parts["match"].item(),
        "guided": parts["guided"].item() if "guided" in parts else None,
        "student_final": outcome.final_params,
        "trajectory": k,
        "start": i,
        "batch_indices": indices,
    }
    return outcome.outer_value, _by_name(state, outcome.gradients), info


def _baseline_objective(
    state: DistillState,
    cfg: DistillConfig,
    rng: np.random.Generator,
    model: Model,
    real: LabeledImages | None,
    mask: np.ndarray | None,
) -> tuple[float, dict[str, np.ndarray], dict[str, Any]]:
    if real is None:
        msg = f"distill.method = '{cfg.method.value}' needs the real training set"
        raise ConfigError(msg)
    batch = _real_batch(real, cfg.batch_size, rng)
    net_seed = int(rng.integers(SEED_CEILING))
    if cfg.method is DistillMethod.DM:
        result = dm_loss(state, batch, net_seed, model, mask=mask)
    else:
        params, _ = build_model(model.spec, net_seed)
        result = dc_loss(state, batch, params, model, mask=mask)
    gradients = _by_name(state, backward(result.value, list(state.trainable_leaves().values())))
    info = {"match": result.value.item(), "guided": None, "skipped": result.skipped}
    return result.value.item(), gradients, info


def _check_finite(step: int, combined: float, gradients: dict[str, np.ndarray]) -> None:
    bad = sorted(name for name, g in gradients.items() if not np.all(np.isfinite(g)))
    if np.isfinite(combined) and not bad:
        return
    msg = f"Outer step {step} diverged: combined loss {combined}"
    if bad:
        msg += f", non-finite gradient for {', '.join(bad)}"
    raise ContractViolationError(msg)


def distill_step(
    state: DistillState,
    bank: ExpertBank | None,
    cfg: DistillConfig,
    rng: np.random.Generator,
    *,
    real: LabeledImages | None = None,
    model: Model | None = None,
) -> StepResult:
    """Run one outer iteration and return the updated state.

    Draw order from ``rng``: band mask, segment, inner batches, real batch
    (only when needed), network seed (DM/DC only).

    Raises:
        SamplingError: If no trajectory covers ``cfg.expert_span``
        ConfigError: If a needed input (bank, real data) is missing
        ContractViolationError: If the loss or a gradient is not finite
    """
    if model is None:
        if bank is None:
            msg = "distill_step needs an expert bank or a model"
            raise ConfigError(msg)
        model = Model(bank.spec)
    started = time.perf_counter()
    mask = _draw_mask(state, rng)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if cfg.method is DistillMethod.MTT:
            if bank is None:
                msg = "Trajectory matching needs an expert bank"
                raise ConfigError(msg)
            combined, gradients, info = _mtt_objective(state, bank, cfg, rng, model, real, mask)
        else:
            combined, gradients, info = _baseline_objective(state, cfg, rng, model, real, mask)
    _check_finite(state.step + 1, combined, gradients)
    updated = outer_update(state, gradients, cfg.outer_lr, cfg.outer_momentum, cfg.outer_clip)

    metrics = StepMetrics(
        iteration=updated.step,
        match=info["match"],
        guided=info["guided"],
        combined=combined,
        skipped=tuple(info.get("skipped", ())),
        wall_clock=time.perf_counter() - started if cfg.log_wall_clock else None,
    )
    return StepResult(
        state=updated,
        metrics=metrics,
        student_final=info.get("student_final"),
        trajectory=info.get("trajectory"),
        start=info.get("start"),
        batch_indices=info.get("batch_indices", ()),
        mask=mask,
    )


def distill(
    state: DistillState,
    bank: ExpertBank | None,
    cfg: DistillConfig,
    *,
    real: LabeledImages | None = None,
    model: Model | None = None,
    callbacks: Sequence[DistillCallback] = (),
) -> DistillResult:
    """Iterate :func:`distill_step` from ``state.step`` up to ``cfg.iterations``.

    Step ``k`` draws from the named stream ``("distill", k)``, so a run
    resumed from a checkpoint at step ``k`` continues exactly as the
    uninterrupted run would.
    """
    streams = SeedStreams(cfg.seed)
    result = DistillResult(state)
    for step in range(state.step, cfg.iterations):
        outcome = distill_step(
            result.state, bank, cfg, streams.generator("distill", step), real=real, model=model
        )
        result.state = outcome.state
        result.metrics.append(outcome.metrics)
        for callback in callbacks:
            callback.on_step(outcome)
    for callback in callbacks:
        callback.on_end(result.state)
    return result


class ProgressLogger:
    """Logs one INFO line every ``every`` iterations."""

    def __init__(self, every: int, total: int) -> None:
        self.every = max(1, every)
        self.total = total

    def on_step(self, result: StepResult) -> None:
        m = result.metrics
        if m.iteration % self.every == 0 or m.iteration == self.total:
            guided = "-" if m.guided is None else f"{m.guided:.4f}"
            logger.info(
                "step %d/%d match %.4f guided %s combined %.4f",
                m.iteration,
                self.total,
                m.match,
                guided,
                m.combined,
            )

    def on_end(self, state: DistillState) -> None:
        logger.info("Distillation finished at step %d", state.step)


class MetricLogWriter:
    """Appends one JSON line per step to ``path``."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)

    def on_step(self, result: StepResult) -> None:
        append_line(self.path, json.dumps(result.metrics.to_dict(), sort_keys=True))

    def on_end(self, state: DistillState) -> None:
        pass


class CheckpointWriter:
    """Saves the state every ``every`` steps and once at the end."""

    def __init__(self, path: str | Path, every: int, fingerprint: str = "") -> None:
        self.path = Path(path)
        self.every = every
        self.fingerprint = fingerprint

    def on_step(self, result: StepResult) -> None:
        if self.every and result.state.step % self.every == 0:
            save_checkpoint(self.path, result.state, self.fingerprint)

    def on_end(self, state: DistillState) -> None:
        save_checkpoint(self.path, state, self.fingerprint)


def prepare_metric_log(path: str | Path, step: int) -> None:
    """Drop metric lines written after the checkpoint being resumed."""
    log_path = Path(path)
    if log_path.exists():
        truncate_lines(log_path, step)


def save_checkpoint(path: str | Path, state: DistillState, fingerprint: str = "") -> Path:
    """Persist arrays, velocity buffers, pair labels and metadata."""
    records: dict[str, Any] = {name: np.asarray(node.value) for name, node in state.named_nodes().items()}
    for name, velocity in state.optimizer.velocity.items():
        records[f"velocity/{name}"] = np.asarray(velocity)
    records["labels"] = state.pair_labels().astype(np.int64)
    records["meta"] = {**state.describe(), "fingerprint": fingerprint}
    logger.debug("Checkpoint at step %d -> %s", state.step, path)
    return save_container(path, records)


def _array(records: dict[str, Any], name: str) -> np.ndarray:
    value = records.get(name)
    if not isinstance(value, np.ndarray):
        msg = f"Checkpoint is missing array '{name}'"
        raise DataFormatError(msg)
    return value.astype(np.float64)


def load_checkpoint(path: str | Path) -> tuple[DistillState, str]:
    """Rebuild a state from :func:`save_checkpoint` output.

    Returns:
        ``(state, fingerprint)``

    Raises:
        FileOperationError: If the file cannot be read
        DataFormatError: If records are missing or malformed
    """
    records = load_container(path)
    meta = records.get("meta")
    if not isinstance(meta, dict):
        msg = f"{path} has no checkpoint metadata"
        raise DataFormatError(msg)
    num_classes = int(meta["num_classes"])
    n_tensors = int(meta["n_tensors"])
    rule = LabelRule.parse(meta["label_rule"])

    trainable: dict[str, bool] = {spectrum_name(i): True for i in range(n_tensors)}
    tensors = tuple(
        SpectrumTensor(
            values=Node.leaf(_array(records, spectrum_name(i)), trainable=True, name=spectrum_name(i)),
            class_id=(i * num_classes) // n_tensors,
            index=i,
        )
        for i in range(n_tensors)
    )
    by_kernel: dict[int, list[KernelFactor]] = {}
    for entry in meta["factors"]:
        name = factor_name(int(entry["kernel"]), int(entry["mode"]))
        trainable[name] = bool(entry["trainable"])
        values = _array(records, name)
        node = Node.leaf(values, trainable=True, name=name) if entry["trainable"] else Node.constant(values)
        by_kernel.setdefault(int(entry["kernel"]), []).append(
            KernelFactor(
                mode=int(entry["mode"]),
                values=node,
                kind=TransformKind.parse(entry["kind"]),
                analytic=bool(entry["analytic"]),
            )
        )
    kernels = tuple(
        SeparableKernel(tuple(sorted(fs, key=lambda f: f.mode)), kernel_id)  # type: ignore[arg-type]
        for kernel_id, fs in sorted(by_kernel.items())
    )
    velocity = {
        name: _array(records, f"velocity/{name}")
        for name, is_trainable in trainable.items()
        if is_trainable and f"velocity/{name}" in records
    }
    band = meta.get("band_probs")
    state = DistillState(
        tensors=tensors,
        kernels=kernels,
        num_classes=num_classes,
        label_rule=rule,
        optimizer=OuterOptimizerState(velocity=velocity, step=int(meta["step"])),
        band_probs=tuple(band) if band is not None else None,  # type: ignore[arg-type]
    )
    stored = records.get("labels")
    if isinstance(stored, np.ndarray) and not np.array_equal(stored, state.pair_labels()):
        msg = f"{path}: stored pair labels disagree with label rule '{rule.value}'"
        raise DataFormatError(msg)
    return state, str(meta.get("fingerprint", ""))


def detached_images(state: DistillState) -> LabeledImages:
    """Synthesized images as plain arrays, with no tape attached."""
    with no_grad():
        images, labels = synthesize_dataset(state)
    return LabeledImages(np.array(images.value), labels, state.num_classes)


def replay_student(
    model: Model,
    start: ParamVector,
    images: np.ndarray,
    labels: np.ndarray,
    batch_indices: Iterable[np.ndarray],
    lr: float,
    momentum: float = 0.0,
) -> np.ndarray:
    """Plain (untaped) SGD on the same batches the unroll used."""
    values = np.array(start.values)
    velocity = np.zeros_like(values)
    for idx in batch_indices:
        theta = start.with_values(values).as_node(trainable=True)
        gradient = backward(model.loss(theta, images[idx], labels[idx]), [theta])[theta]
        velocity = momentum * velocity + gradient
        values = values - lr * velocity
    return values

