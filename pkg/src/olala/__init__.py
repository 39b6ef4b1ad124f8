"""Object-level active-learning annotation engine for document layouts."""

from .core import (
    BBox,
    CategoryDist,
    Dataset,
    LayoutObject,
    PageAnnotation,
    Source,
    best_match,
    iou,
    overlap_coefficient,
)

__all__ = [
    "BBox",
    "CategoryDist",
    "Dataset",
    "LayoutObject",
    "PageAnnotation",
    "Source",
    "best_match",
    "iou",
    "overlap_coefficient",
]

__version__ = "0.1.0"
