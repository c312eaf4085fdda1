"""Command-line interface for nsdlab."""

from __future__ import annotations

import functools
import json
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar

import click
from rich.console import Console
from rich.logging import RichHandler

from nsdlab.core.config import RunConfig, load_config
from nsdlab.core.exceptions import NsdLabError


F = TypeVar("F", bound=Callable[..., Any])

console = Console()


def _setup_logging(verbose: bool) -> None:
    logger = logging.getLogger("nsdlab")
    logger.handlers.clear()
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False


def config_options(fn: F) -> F:
    """``--config``, ``--set`` and ``--verbose`` shared by every command."""
    fn = click.option("--verbose", "-v", is_flag=True, help="Debug logging")(fn)
    fn = click.option(
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a config key (repeatable)",
    )(fn)
    return click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False),
        help="TOML config with dotted keys",
    )(fn)  # type: ignore[return-value]


def handle_errors(fn: F) -> F:
    """Map library errors to their exit codes."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except NsdLabError as e:
            click.echo(f"✗ Error: {e}", err=True)
            sys.exit(e.exit_code)
        except Exception as e:
            click.echo(f"✗ Error: {e}", err=True)
            sys.exit(1)

    return wrapper  # type: ignore[return-value]


def _load(config_path: str | None, overrides: tuple[str, ...], verbose: bool) -> RunConfig:
    _setup_logging(verbose)
    return load_config(config_path, overrides)


@click.group()
@click.version_option(package_name="nsdlab")
def cli() -> None:
    """nsdlab - dataset distillation with neural spectral decomposition."""


@cli.command()
@config_options
@handle_errors
def budget(config_path: str | None, overrides: tuple[str, ...], verbose: bool) -> None:
    """Resolve decomposition extents and check them against the storage budget."""
    from nsdlab.evalharness.reporter import ReportFormatter
    from nsdlab.pipeline import resolve_plan_for_budget

    cfg = _load(config_path, overrides, verbose)
    plan = resolve_plan_for_budget(cfg)
    formatter = ReportFormatter(console)
    formatter.print(formatter.budget_table(plan, cfg.budget_spec().ratio_percent))
    if not plan.report.ok:
        click.echo(
            f"✗ Error: plan stores {plan.report.stored} scalars, budget allows {plan.report.allowed}",
            err=True,
        )
        sys.exit(2)


@cli.command()
@config_options
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Expert directory")
@handle_errors
def expert(config_path: str | None, overrides: tuple[str, ...], verbose: bool, out_dir: str | None) -> None:
    """Train expert trajectories on the real data and save them."""
    from nsdlab import pipeline

    ctx = pipeline.prepare(_load(config_path, overrides, verbose))
    directory = Path(out_dir) if out_dir else ctx.output_dir / pipeline.EXPERT_DIR
    bank = pipeline.run_experts(ctx, directory)
    click.echo(f"✓ Trained {len(bank)} trajectories → {directory}")
    click.echo(f"  Fingerprint: {bank.fingerprint}")


@cli.command()
@config_options
@click.option("--experts", "experts_dir", type=click.Path(file_okay=False), help="Expert directory")
@click.option("--fresh", is_flag=True, help="Ignore an existing checkpoint and start over")
@handle_errors
def distill(
    config_path: str | None,
    overrides: tuple[str, ...],
    verbose: bool,
    experts_dir: str | None,
    fresh: bool,
) -> None:
    """Learn spectrum tensors and kernels (resumes from the last checkpoint)."""
    from nsdlab import pipeline

    ctx = pipeline.prepare(_load(config_path, overrides, verbose))
    bank = None
    if pipeline.needs_bank(ctx.cfg):
        directory = Path(experts_dir) if experts_dir else ctx.output_dir / pipeline.EXPERT_DIR
        bank = pipeline.load_bank(ctx, directory)
    result = pipeline.run_distill(ctx, bank, resume=not fresh)
    click.echo(f"✓ Distilled to step {result.state.step} → {ctx.output_dir / pipeline.CHECKPOINT_FILE}")
    if result.metrics:
        last = result.metrics[-1]
        click.echo(f"  Final combined loss: {last.combined:.6f}")


@cli.command(name="eval")
@config_options
@click.option("--checkpoint", type=click.Path(dir_okay=False), help="Checkpoint to evaluate")
@click.option("--baseline", is_flag=True, help="Also evaluate a random real subset of equal budget")
@handle_errors
def eval_cmd(
    config_path: str | None,
    overrides: tuple[str, ...],
    verbose: bool,
    checkpoint: str | None,
    baseline: bool,
) -> None:
    """Train fresh networks on the synthesized images and test on real data."""
    from nsdlab import pipeline
    from nsdlab.evalharness.reporter import ReportFormatter, write_jsonl
    from nsdlab.matching import load_checkpoint

    ctx = pipeline.prepare(_load(config_path, overrides, verbose))
    path = Path(checkpoint) if checkpoint else ctx.output_dir / pipeline.CHECKPOINT_FILE
    state, _ = load_checkpoint(path)
    reports = [pipeline.run_eval(ctx, state)]
    if baseline:
        reports.append(pipeline.run_baseline(ctx))
    formatter = ReportFormatter(console)
    formatter.print(formatter.eval_table(reports))
    write_jsonl(ctx.output_dir / "eval.jsonl", [r.to_dict() for r in reports])


@cli.command()
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False), help="Checkpoint to export")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output .pgm/.ppm file")
@click.option("--cols", default=8, show_default=True, help="Images per grid row")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@handle_errors
def export(checkpoint: str, out: str, cols: int, verbose: bool) -> None:
    """Write the synthesized images as a PGM/PPM grid."""
    from nsdlab.evalharness import export_images
    from nsdlab.matching import load_checkpoint

    _setup_logging(verbose)
    state, _ = load_checkpoint(checkpoint)
    path = export_images(state, out, cols)
    click.echo(f"✓ Exported {state.n_pairs * state.images_per_pair} images → {path}")


def _parse_dims(values: tuple[str, ...]) -> tuple[tuple[int | str, int | str], ...]:
    def one(text: str) -> int | str:
        text = text.strip()
        return text if text == "auto" else int(text)

    dims = []
    for value in values:
        t1, _, t3 = value.partition(",")
        if not t3:
            msg = f"--dims expects 't1,t3', got '{value}'"
            raise click.BadParameter(msg)
        dims.append((one(t1), one(t3)))
    return tuple(dims)


@cli.command()
@config_options
@click.option("--decomposition", type=click.Choice(["on", "off"]), multiple=True, help="Decomposition arms")
@click.option("--gamma", type=float, multiple=True, help="Guided-loss weights")
@click.option("--dims", multiple=True, metavar="T1,T3", help="Extents to sweep")
@click.option("--kind", "kinds", multiple=True, help="Transform kinds")
@click.option("--experts", "experts_dir", type=click.Path(file_okay=False), help="Expert directory")
@handle_errors
def ablate(
    config_path: str | None,
    overrides: tuple[str, ...],
    verbose: bool,
    decomposition: tuple[str, ...],
    gamma: tuple[float, ...],
    dims: tuple[str, ...],
    kinds: tuple[str, ...],
    experts_dir: str | None,
) -> None:
    """Run an ablation grid and print a summary table."""
    from nsdlab import pipeline
    from nsdlab.core.types import TransformKind
    from nsdlab.evalharness.ablation import AblationAxes, ablation_grid
    from nsdlab.evalharness.reporter import ReportFormatter
    from nsdlab.utils.io import write_text

    ctx = pipeline.prepare(_load(config_path, overrides, verbose))
    axes = AblationAxes(
        decomposition=tuple(d == "on" for d in decomposition),
        guided_weight=gamma,
        dims=_parse_dims(dims),
        kinds=tuple(TransformKind.parse(k) for k in kinds),
    )
    bank = None
    if pipeline.needs_bank(ctx.cfg):
        directory = Path(experts_dir) if experts_dir else ctx.output_dir / pipeline.EXPERT_DIR
        bank = pipeline.load_bank(ctx, directory)
    grid = ablation_grid(ctx, axes, bank)
    formatter = ReportFormatter(console)
    formatter.print(formatter.ablation_table(grid))
    write_text(ctx.output_dir / "ablation.jsonl", grid.to_jsonl())


@cli.command()
@config_options
@click.option("--checkpoint", type=click.Path(dir_okay=False), help="Analyze a checkpoint instead of real data")
@click.option("--axis", "axes", type=click.Choice(["B", "H", "W"]), multiple=True, help="Axes (default all)")
@click.option("--json", "as_json", is_flag=True, help="Print JSON instead of a table")
@handle_errors
def similarity(
    config_path: str | None,
    overrides: tuple[str, ...],
    verbose: bool,
    checkpoint: str | None,
    axes: tuple[str, ...],
    as_json: bool,
) -> None:
    """Cosine similarity across the batch, height and width axes."""
    from nsdlab.datasets import load_dataset
    from nsdlab.evalharness import dimension_similarity
    from nsdlab.evalharness.reporter import ReportFormatter
    from nsdlab.matching import detached_images, load_checkpoint

    cfg = _load(config_path, overrides, verbose)
    if checkpoint:
        images = detached_images(load_checkpoint(checkpoint)[0]).images
    else:
        images = load_dataset(cfg).train.images
    results = [dimension_similarity(images, axis) for axis in (axes or ("B", "H", "W"))]
    if as_json:
        click.echo(json.dumps([r.to_dict() for r in results], indent=2))
    else:
        formatter = ReportFormatter(console)
        formatter.print(formatter.similarity_table(results))


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
