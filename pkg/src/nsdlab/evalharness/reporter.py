"""Rendering reports as rich tables and line-delimited JSON."""

from __future__ import annotations

import json
from collections.abc import Iterable
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.table import Table
from rich.text import Text

from nsdlab.core.types import BudgetReport, EvalReport
from nsdlab.decomposition import DecompositionPlan
from nsdlab.utils.io import append_line

from .ablation import AblationTable
from .similarity import SimilarityMatrix


def to_jsonl(records: Iterable[dict[str, Any]]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> Path:
    """Append one JSON line per record."""
    target = Path(path)
    for record in records:
        append_line(target, json.dumps(record, sort_keys=True))
    return target


class ReportFormatter:
    """Formats budget, evaluation, ablation and similarity results for display."""

    def __init__(self, console: Console | None = None) -> None:
        self.console = console or Console()

    def budget_table(self, plan: DecompositionPlan, ratio_percent: float | None = None) -> Table:
        report: BudgetReport = plan.report
        table = Table(title="Storage budget", show_header=False)
        table.add_column("Field", style="bold")
        table.add_column("Value")
        table.add_row("transform", plan.kind.value)
        table.add_row("tensor dims (t1..t4)", " x ".join(map(str, plan.tensor_dims)))
        table.add_row("output extents (u1..u4)", " x ".join(map(str, plan.out_extents)))
        table.add_row("tensors / kernels", f"{plan.n_tensors} / {plan.n_kernels}")
        table.add_row("images", str(plan.images))
        table.add_row("stored", str(report.stored))
        table.add_row("allowed", str(report.allowed))
        table.add_row("utilization", f"{report.utilization:.4f}")
        if ratio_percent is not None:
            table.add_row("ratio", f"{ratio_percent:.4f} %")
        status = Text("ok", style="green") if report.ok else Text("over budget", style="red")
        table.add_row("status", status)
        return table

    def eval_table(self, reports: Iterable[EvalReport], title: str = "Evaluation") -> Table:
        table = Table(title=title)
        table.add_column("Arm", style="cyan")
        table.add_column("Repeats", justify="right")
        table.add_column("Mean acc.", justify="right", style="bold")
        table.add_column("Std", justify="right")
        for report in reports:
            table.add_row(
                report.label or "-",
                str(report.repeats),
                f"{100 * report.mean:.2f}",
                f"{100 * report.std:.2f}",
            )
        return table

    def ablation_table(self, grid: AblationTable) -> Table:
        keys = sorted({k for cell in grid.cells for k in cell.overrides})
        table = Table(title="Ablation", show_lines=True)
        for key in keys:
            table.add_column(key, style="cyan")
        table.add_column("Accuracy", justify="right", style="bold")
        table.add_column("Digest")
        for cell in grid.cells:
            values = [str(cell.overrides.get(k, "-")) for k in keys]
            if cell.report is not None:
                result = Text(f"{100 * cell.report.mean:.2f} ± {100 * cell.report.std:.2f}")
            else:
                result = Text("infeasible", style="red")
            table.add_row(*values, result, cell.digest[:12])
        return table

    def similarity_table(self, results: Iterable[SimilarityMatrix]) -> Table:
        table = Table(title="Inter-dimensional similarity")
        table.add_column("Axis", style="cyan")
        table.add_column("Slices", justify="right")
        table.add_column("Mean off-diagonal", justify="right", style="bold")
        table.add_column("Zero slices", justify="right")
        for result in results:
            table.add_row(
                result.axis,
                str(result.size),
                f"{result.mean_off_diagonal():.4f}",
                str(len(result.zero_slices)),
            )
        return table

    def print(self, table: Table) -> None:
        self.console.print(table)
