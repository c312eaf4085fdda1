"""Cartesian ablation grids: each cell is a full distill + evaluate run."""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from nsdlab.core.exceptions import ConfigError
from nsdlab.core.types import EvalReport, TransformKind
from nsdlab.utils.concurrency import ordered_map


if TYPE_CHECKING:
    from nsdlab.matching import ExpertBank
    from nsdlab.pipeline import RunContext


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationAxes:
    """Values to sweep; an empty axis keeps the base configuration's value.

    Attributes:
        decomposition: Spectral decomposition on/off
        guided_weight: Values of the guided-loss weight
        dims: ``(t1, t3)`` pairs ("auto" allowed)
        kinds: Transform kinds
    """

    decomposition: tuple[bool, ...] = ()
    guided_weight: tuple[float, ...] = ()
    dims: tuple[tuple[int | str, int | str], ...] = ()
    kinds: tuple[TransformKind, ...] = ()

    def cells(self) -> list[dict[str, Any]]:
        """Config overrides of every cell, in grid order."""
        axes: list[list[dict[str, Any]]] = []
        if self.decomposition:
            axes.append([{"decomposition.enabled": d} for d in self.decomposition])
        if self.guided_weight:
            axes.append([{"distill.guided_weight": g} for g in self.guided_weight])
        if self.dims:
            axes.append([{"decomposition.t1": t1, "decomposition.t3": t3} for t1, t3 in self.dims])
        if self.kinds:
            axes.append([{"transform.kind": TransformKind.parse(k).value} for k in self.kinds])
        return [
            {key: value for part in combo for key, value in part.items()} for combo in itertools.product(*axes)
        ]


@dataclass
class AblationCell:
    overrides: dict[str, Any]
    digest: str
    report: EvalReport | None = None
    infeasible: str | None = None

    @property
    def feasible(self) -> bool:
        return self.infeasible is None

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {"overrides": self.overrides, "config_digest": self.digest}
        if self.report is not None:
            record.update(mean=self.report.mean, std=self.report.std, accuracies=self.report.accuracies)
        else:
            record["infeasible"] = self.infeasible
        return record


@dataclass
class AblationTable:
    cells: list[AblationCell] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.cells)

    def by_digest(self) -> dict[str, AblationCell]:
        return {c.digest: c for c in self.cells}

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(c.to_dict(), sort_keys=True) for c in self.cells) + "\n"


def run_cell(ctx: RunContext, bank: ExpertBank | None, overrides: dict[str, Any]) -> AblationCell:
    """Distill and evaluate one cell in memory; budget violations mark it infeasible."""
    from nsdlab import pipeline  # noqa: PLC0415

    cell_ctx = ctx.with_config(ctx.cfg.with_values(overrides))
    digest = cell_ctx.cfg.digest()
    try:
        plan = pipeline.resolve_plan(cell_ctx)
    except ConfigError as e:
        logger.warning("Ablation cell %s infeasible: %s", overrides, e)
        return AblationCell(overrides, digest, infeasible=str(e))
    if not plan.report.ok:
        reason = f"stores {plan.report.stored} of {plan.report.allowed} allowed scalars"
        logger.warning("Ablation cell %s infeasible: %s", overrides, reason)
        return AblationCell(overrides, digest, infeasible=reason)
    result = pipeline.run_distill(cell_ctx, bank, persist=False)
    report = pipeline.run_eval(cell_ctx, result.state, label=json.dumps(overrides, sort_keys=True))
    return AblationCell(overrides, digest, report=report)


def ablation_grid(ctx: RunContext, axes: AblationAxes, bank: ExpertBank | None = None) -> AblationTable:
    """Run every cell of the grid.

    Cells are seeded from the base configuration only, so their results do
    not depend on grid order.
    """
    cells = axes.cells()
    logger.info("Ablation grid with %d cells", len(cells))
    return AblationTable(ordered_map(lambda overrides: run_cell(ctx, bank, overrides), cells))
