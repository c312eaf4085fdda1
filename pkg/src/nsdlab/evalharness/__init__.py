"""Evaluation protocol, ablation grids, similarity analysis and image export."""

from .ablation import AblationAxes, AblationCell, AblationTable, ablation_grid, run_cell
from .augment import flip_and_crop, random_crop, random_flip
from .evaluate import evaluate_images, evaluate_synthetic, random_subset_baseline, sample_subset, train_and_test
from .export import export_array, export_images, tile_grid, to_uint8
from .reporter import ReportFormatter, to_jsonl, write_jsonl
from .similarity import SimilarityMatrix, dimension_similarity, unfold


__all__ = [
    "AblationAxes",
    "AblationCell",
    "AblationTable",
    "ReportFormatter",
    "SimilarityMatrix",
    "ablation_grid",
    "dimension_similarity",
    "evaluate_images",
    "evaluate_synthetic",
    "export_array",
    "export_images",
    "flip_and_crop",
    "random_crop",
    "random_flip",
    "random_subset_baseline",
    "run_cell",
    "sample_subset",
    "tile_grid",
    "to_jsonl",
    "to_uint8",
    "train_and_test",
    "unfold",
    "write_jsonl",
]
