"""Expert trajectories: parameter snapshots of networks trained on real data."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from nsdlab.core.exceptions import ConfigError, DataFormatError, FileOperationError, FingerprintMismatchError
from nsdlab.core.seeding import SeedStreams
from nsdlab.core.types import LabeledImages, ModelSpec, TrainConfig
from nsdlab.formats.container import load_container, save_container
from nsdlab.models import ParamLayout, ParamVector, accuracy, build_model, sgd_train
from nsdlab.utils.concurrency import ordered_map


logger = logging.getLogger(__name__)

EXPERT_GLOB = "expert_*.nsdt"


@dataclass(frozen=True)
class Trajectory:
    """Snapshots ``theta_0 .. theta_T`` of one expert run.

    Attributes:
        snapshots: Parameter vectors sharing one layout
        spec: Architecture
        seed: Seed of the run
        stride: Epochs between consecutive snapshots
    """

    snapshots: tuple[ParamVector, ...]
    spec: ModelSpec
    seed: int
    stride: int = 1

    def __post_init__(self) -> None:
        if len(self.snapshots) < 2:
            msg = f"A trajectory needs at least 2 snapshots, got {len(self.snapshots)}"
            raise ConfigError(msg)
        layout = self.snapshots[0].layout
        if any(s.layout != layout for s in self.snapshots[1:]):
            msg = "All snapshots of a trajectory must share one layout"
            raise ConfigError(msg)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, index: int) -> ParamVector:
        return self.snapshots[index]

    def to_records(self, fingerprint: str) -> dict[str, object]:
        records: dict[str, object] = {f"theta/{t}": s.values for t, s in enumerate(self.snapshots)}
        records["meta"] = {
            "spec": self.spec.to_dict(),
            "seed": self.seed,
            "stride": self.stride,
            "count": len(self.snapshots),
            "layout": self.snapshots[0].layout.to_dict(),
            "fingerprint": fingerprint,
        }
        return records

    @classmethod
    def from_records(cls, records: dict[str, object]) -> tuple[Trajectory, str]:
        meta = records.get("meta")
        if not isinstance(meta, dict):
            msg = "Expert file has no metadata record"
            raise DataFormatError(msg)
        layout = ParamLayout.from_dict(meta["layout"])
        snapshots = []
        for t in range(int(meta["count"])):
            array = records.get(f"theta/{t}")
            if not isinstance(array, np.ndarray):
                msg = f"Expert file is missing snapshot theta/{t}"
                raise DataFormatError(msg)
            snapshots.append(ParamVector(array, layout))
        trajectory = cls(
            snapshots=tuple(snapshots),
            spec=ModelSpec.from_dict(meta["spec"]),
            seed=int(meta["seed"]),
            stride=int(meta["stride"]),
        )
        return trajectory, str(meta["fingerprint"])


@dataclass(frozen=True)
class ExpertBank:
    """Expert trajectories trained on one dataset."""

    trajectories: tuple[Trajectory, ...]
    fingerprint: str

    def __post_init__(self) -> None:
        if not self.trajectories:
            msg = "An expert bank needs at least one trajectory"
            raise ConfigError(msg)
        spec = self.trajectories[0].spec
        if any(t.spec != spec for t in self.trajectories[1:]):
            msg = "All trajectories in a bank must use the same model spec"
            raise ConfigError(msg)

    @property
    def spec(self) -> ModelSpec:
        return self.trajectories[0].spec

    def __len__(self) -> int:
        return len(self.trajectories)

    def check_fingerprint(self, fingerprint: str) -> None:
        """Refuse to pair experts with data they were not trained on.

        Raises:
            FingerprintMismatchError: If the fingerprints differ
        """
        if fingerprint != self.fingerprint:
            msg = (
                f"Expert bank was built on dataset {self.fingerprint[:12]}..., "
                f"current dataset is {fingerprint[:12]}..."
            )
            raise FingerprintMismatchError(msg)

    def save(self, directory: str | Path) -> list[Path]:
        """Write one container per trajectory."""
        root = Path(directory)
        return [
            save_container(root / f"expert_{k:03d}.nsdt", t.to_records(self.fingerprint))
            for k, t in enumerate(self.trajectories)
        ]

    @classmethod
    def load(cls, directory: str | Path) -> ExpertBank:
        """Read every ``expert_*.nsdt`` in ``directory``.

        Raises:
            FileOperationError: If the directory holds no expert files
            FingerprintMismatchError: If the files disagree on the dataset
        """
        files = sorted(Path(directory).glob(EXPERT_GLOB))
        if not files:
            msg = f"No expert trajectories found in {directory}"
            raise FileOperationError(msg)
        loaded = [Trajectory.from_records(load_container(f)) for f in files]
        prints = {fp for _, fp in loaded}
        if len(prints) != 1:
            msg = f"Expert files in {directory} were trained on different datasets"
            raise FingerprintMismatchError(msg)
        return cls(tuple(t for t, _ in loaded), prints.pop())


def train_expert(
    data: LabeledImages,
    spec: ModelSpec,
    cfg: TrainConfig,
    snapshot_stride: int = 1,
    seed: int = 0,
) -> Trajectory:
    """Train one expert with momentum SGD and record snapshots.

    Snapshots are taken at epoch 0 and every ``snapshot_stride`` epochs.

    Raises:
        ConfigError: If the run would record fewer than two snapshots
    """
    if len(data) == 0:
        msg = "Cannot train an expert on an empty dataset"
        raise ConfigError(msg)
    if cfg.epochs < 1 or snapshot_stride < 1 or cfg.epochs < snapshot_stride:
        msg = f"epochs={cfg.epochs} with snapshot_stride={snapshot_stride} yields fewer than 2 snapshots"
        raise ConfigError(msg)
    rng = np.random.default_rng(seed)
    params, model = build_model(spec, rng)
    result = sgd_train(model, params, data, cfg, rng, snapshot_stride=snapshot_stride)
    logger.info(
        "Expert seed %d: %d snapshots, final loss %.4f, train accuracy %.3f",
        seed,
        len(result.snapshots),
        result.losses[-1],
        accuracy(model, result.params, data),
    )
    return Trajectory(tuple(result.snapshots), spec, seed, snapshot_stride)


def train_experts(
    data: LabeledImages,
    spec: ModelSpec,
    cfg: TrainConfig,
    *,
    count: int,
    snapshot_stride: int,
    streams: SeedStreams,
    fingerprint: str,
) -> ExpertBank:
    """Train ``count`` independently seeded experts (in parallel when allowed)."""
    if count < 1:
        msg = f"At least one expert trajectory is required, got {count}"
        raise ConfigError(msg)
    seeds = [streams.integer_seed("expert", k) for k in range(count)]
    trajectories = ordered_map(lambda s: train_expert(data, spec, cfg, snapshot_stride, s), seeds)
    return ExpertBank(tuple(trajectories), fingerprint)
