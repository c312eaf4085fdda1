"""Glue between configuration, data, experts, distillation and evaluation.

The CLI commands and the ablation grid call these functions; each one takes
a :class:`RunContext` holding the resolved configuration and loaded data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from nsdlab.core.config import RunConfig
from nsdlab.core.exceptions import ConfigError, FingerprintMismatchError
from nsdlab.core.seeding import SeedStreams
from nsdlab.core.types import BudgetSpec, DistillMethod, EvalReport, LabelRule, ModelSpec
from nsdlab.datasets import DatasetSplit, load_dataset
from nsdlab.decomposition import DecompositionPlan, DistillState, plan_dimensions, raw_pixel_plan
from nsdlab.evalharness.evaluate import evaluate_synthetic, random_subset_baseline
from nsdlab.matching import (
    CheckpointWriter,
    DistillCallback,
    DistillResult,
    ExpertBank,
    MetricLogWriter,
    ProgressLogger,
    distill,
    load_checkpoint,
    prepare_metric_log,
    train_experts,
)
from nsdlab.models import Model
from nsdlab.transforms import initial_state


logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.nsdt"
METRICS_FILE = "metrics.jsonl"
RESOLVED_CONFIG_FILE = "resolved.toml"
EXPERT_DIR = "experts"


@dataclass(frozen=True)
class RunContext:
    """Resolved configuration (including normalization statistics) plus data."""

    cfg: RunConfig
    split: DatasetSplit

    @property
    def streams(self) -> SeedStreams:
        return SeedStreams(self.cfg["seed"])

    @property
    def output_dir(self) -> Path:
        return Path(self.cfg["output_dir"])

    @property
    def budget(self) -> BudgetSpec:
        return self.cfg.budget_spec(self.split.num_classes, self.split.image_shape, len(self.split.train))

    @property
    def model_spec(self) -> ModelSpec:
        return self.cfg.model_spec(self.split.image_shape, self.split.num_classes)

    def with_config(self, cfg: RunConfig) -> RunContext:
        """Same data, different settings (the dataset keys must not change)."""
        return RunContext(cfg.with_values(self.split.stats()), self.split)


def prepare(cfg: RunConfig) -> RunContext:
    """Load the configured dataset and record its normalization statistics."""
    split = load_dataset(cfg)
    return RunContext(cfg.with_values(split.stats()), split)


def plan_for(cfg: RunConfig, budget: BudgetSpec) -> DecompositionPlan:
    """Extents for the configured decomposition, or the raw-pixel plan when disabled.

    Raises:
        ConfigError: If no extents fit the budget
    """
    if not cfg["decomposition.enabled"]:
        return raw_pixel_plan(budget)
    spec = cfg.transform_spec()
    return plan_dimensions(
        budget,
        spec.kind,
        t1=cfg["decomposition.t1"],
        t3=cfg["decomposition.t3"],
        u1=cfg["decomposition.u1"],
        tensors_per_class=cfg["decomposition.tensors_per_class"],
        kernels=cfg["decomposition.kernels"],
        u1_ratio=cfg["decomposition.u1_ratio"],
        rank=spec.truncation_rank,
    )


def resolve_plan(ctx: RunContext) -> DecompositionPlan:
    return plan_for(ctx.cfg, ctx.budget)


def resolve_plan_for_budget(cfg: RunConfig) -> DecompositionPlan:
    """Plan from the configured dataset shape alone, without loading data."""
    return plan_for(cfg, cfg.budget_spec())


def build_state(ctx: RunContext, plan: DecompositionPlan) -> DistillState:
    """Initial state drawn from the ``init`` stream."""
    return initial_state(
        plan,
        ctx.cfg.transform_spec(),
        ctx.split.num_classes,
        ctx.streams.generator("init"),
        label_rule=LabelRule.parse(ctx.cfg["decomposition.label_rule"]),
        real=ctx.split.train,
    )


def run_experts(ctx: RunContext, directory: str | Path | None = None) -> ExpertBank:
    """Train and save the expert bank."""
    cfg = ctx.cfg
    bank = train_experts(
        ctx.split.train,
        ctx.model_spec,
        cfg.expert_config(),
        count=cfg["expert.trajectories"],
        snapshot_stride=cfg["expert.snapshot_stride"],
        streams=ctx.streams,
        fingerprint=ctx.split.fingerprint,
    )
    if directory is not None:
        bank.save(directory)
    return bank


def load_bank(ctx: RunContext, directory: str | Path) -> ExpertBank:
    """Read experts and refuse them if they were trained on other data.

    Raises:
        FileOperationError: If the directory holds no experts
        FingerprintMismatchError: If the data fingerprint differs
    """
    bank = ExpertBank.load(directory)
    bank.check_fingerprint(ctx.split.fingerprint)
    return bank


def needs_bank(cfg: RunConfig) -> bool:
    return DistillMethod(cfg["distill.method"]) is DistillMethod.MTT


def run_distill(
    ctx: RunContext,
    bank: ExpertBank | None,
    *,
    persist: bool = True,
    resume: bool = True,
) -> DistillResult:
    """Distill from scratch or resume from the checkpoint in the output directory.

    With ``persist`` the resolved config, metric log and checkpoints are
    written to ``output_dir``; otherwise the run stays in memory.

    Raises:
        ConfigError: If the expert bank was trained with another architecture
        FingerprintMismatchError: If the checkpoint was made on other data
    """
    cfg = ctx.cfg.distill_config()
    model = Model(ctx.model_spec)
    if bank is not None and bank.spec != ctx.model_spec:
        msg = f"Expert bank uses {bank.spec.to_dict()}, configuration asks for {ctx.model_spec.to_dict()}"
        raise ConfigError(msg)
    out = ctx.output_dir
    checkpoint = out / CHECKPOINT_FILE
    metrics = out / METRICS_FILE

    if persist and resume and checkpoint.exists():
        state, fingerprint = load_checkpoint(checkpoint)
        if fingerprint and fingerprint != ctx.split.fingerprint:
            msg = f"Checkpoint {checkpoint} was made on a different dataset"
            raise FingerprintMismatchError(msg)
        logger.info("Resuming from step %d", state.step)
        prepare_metric_log(metrics, state.step)
    else:
        plan = resolve_plan(ctx)
        if not plan.report.ok:
            logger.warning("Plan stores %d of %d allowed scalars", plan.report.stored, plan.report.allowed)
        state = build_state(ctx, plan)
        if persist:
            prepare_metric_log(metrics, 0)

    callbacks: list[DistillCallback] = [ProgressLogger(cfg.log_every, cfg.iterations)]
    if persist:
        ctx.cfg.save(out / RESOLVED_CONFIG_FILE)
        callbacks += [
            MetricLogWriter(metrics),
            CheckpointWriter(checkpoint, cfg.checkpoint_every, ctx.split.fingerprint),
        ]
    return distill(state, bank, cfg, real=ctx.split.train, model=model, callbacks=callbacks)


def run_eval(ctx: RunContext, state: DistillState, label: str = "synthetic") -> EvalReport:
    return evaluate_synthetic(
        state,
        ctx.split.test,
        ctx.cfg.eval_config(),
        ctx.cfg["eval.repeats"],
        spec=ctx.model_spec,
        seed=ctx.cfg["seed"],
        label=label,
        config_digest=ctx.cfg.digest(),
    )


def run_baseline(ctx: RunContext) -> EvalReport:
    return random_subset_baseline(
        ctx.split.train,
        ctx.budget,
        ctx.cfg["eval.repeats"],
        test_set=ctx.split.test,
        train_cfg=ctx.cfg.eval_config(),
        spec=ctx.model_spec,
        seed=ctx.cfg["seed"],
        config_digest=ctx.cfg.digest(),
    )
