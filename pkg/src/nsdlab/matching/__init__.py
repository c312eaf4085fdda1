"""Expert trajectories and the distillation loop."""

from .distill import (
    CheckpointWriter,
    DistillCallback,
    DistillResult,
    MetricLogWriter,
    ProgressLogger,
    StepMetrics,
    StepResult,
    clip_global_norm,
    detached_images,
    distill,
    distill_step,
    load_checkpoint,
    outer_update,
    prepare_metric_log,
    replay_student,
    sample_segment,
    save_checkpoint,
)
from .losses import (
    BaselineLoss,
    dc_loss,
    distribution_matching_loss,
    dm_loss,
    gradient_matching_loss,
    match_loss,
    real_guided_loss,
)
from .trajectory import ExpertBank, Trajectory, train_expert, train_experts


__all__ = [
    "BaselineLoss",
    "CheckpointWriter",
    "DistillCallback",
    "DistillResult",
    "ExpertBank",
    "MetricLogWriter",
    "ProgressLogger",
    "StepMetrics",
    "StepResult",
    "Trajectory",
    "clip_global_norm",
    "dc_loss",
    "detached_images",
    "distill",
    "distill_step",
    "distribution_matching_loss",
    "dm_loss",
    "gradient_matching_loss",
    "load_checkpoint",
    "match_loss",
    "outer_update",
    "prepare_metric_log",
    "real_guided_loss",
    "replay_student",
    "sample_segment",
    "save_checkpoint",
    "train_expert",
    "train_experts",
]
