"""Semi-automatic prediction correction.

Duplication removal drops unselected predictions that overlap human labels
past a threshold; uncovered-region computation backs the UI's
false-negative highlighter; missing-annotation recovery re-adds oracle
objects the combined labels missed; merging concatenates the three label
streams with provenance intact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

from .core import BBox, LayoutObject, Source, iou, overlap_coefficient


@dataclass(frozen=True)
class CorrectionConfig:
    xi: float = 0.25  # duplicate-removal overlap threshold (inclusive)
    zeta: float = 0.05  # recovery max-IOU threshold (exclusive)

    def __post_init__(self):
        if not 0.0 < self.xi <= 1.0:
            raise ValueError("xi must be in (0, 1]")
        if not 0.0 <= self.zeta < 1.0:
            raise ValueError("zeta must be in [0, 1)")


def remove_duplicates(
    unselected: Sequence[LayoutObject], human_labels: Sequence[LayoutObject], xi: float = 0.25
) -> List[LayoutObject]:
    """Keep unselected predictions whose overlap coefficient with every
    human label stays below xi; order preserved."""
    kept = []
    for pred in unselected:
        if all(overlap_coefficient(pred.bbox, label.bbox) < xi for label in human_labels):
            kept.append(pred)
    return kept


def uncovered_regions(
    width: float,
    height: float,
    predictions: Sequence[LayoutObject],
    grid_step: float = 16.0,
) -> List[BBox]:
    """Maximal rectangles of grid cells untouched by any prediction.

    Cells are grid_step-sized; a cell counts as covered when a prediction
    box intersects it with positive area. Rectangles come from a greedy
    row-merge decomposition: runs of uncovered cells in consecutive rows
    merge when their column spans match exactly.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    n_cols = max(1, math.ceil(width / grid_step))
    n_rows = max(1, math.ceil(height / grid_step))
    covered = [[False] * n_cols for _ in range(n_rows)]
    for pred in predictions:
        b = pred.bbox
        c0 = max(0, int(b.x // grid_step))
        c1 = min(n_cols - 1, int(math.ceil(b.x2 / grid_step)) - 1)
        r0 = max(0, int(b.y // grid_step))
        r1 = min(n_rows - 1, int(math.ceil(b.y2 / grid_step)) - 1)
        for r in range(r0, r1 + 1):
            cell_y0, cell_y1 = r * grid_step, (r + 1) * grid_step
            if min(b.y2, cell_y1) - max(b.y, cell_y0) <= 0:
                continue
            for c in range(c0, c1 + 1):
                cell_x0, cell_x1 = c * grid_step, (c + 1) * grid_step
                if min(b.x2, cell_x1) - max(b.x, cell_x0) > 0:
                    covered[r][c] = True

    def runs(row):
        out = []
        start = None
        for c in range(n_cols):
            if not covered[row][c]:
                if start is None:
                    start = c
            elif start is not None:
                out.append((start, c))
                start = None
        if start is not None:
            out.append((start, n_cols))
        return out

    open_rects = {}  # (c0, c1) -> start row
    rects = []
    for r in range(n_rows + 1):
        current = set(runs(r)) if r < n_rows else set()
        for span in list(open_rects):
            if span not in current:
                r0 = open_rects.pop(span)
                c0, c1 = span
                # Full-cell extents, so the rectangle union equals the
                # uncovered cell set exactly; edge cells may overhang the
                # page by less than one grid step.
                rects.append(
                    BBox(
                        c0 * grid_step,
                        r0 * grid_step,
                        (c1 - c0) * grid_step,
                        (r - r0) * grid_step,
                    )
                )
        for span in current:
            open_rects.setdefault(span, r)
    return rects


def recover_missing(
    oracle: Sequence[LayoutObject], combined: Sequence[LayoutObject], zeta: float = 0.05
) -> List[LayoutObject]:
    """Oracle objects whose best IOU against the combined labels falls
    below zeta, retagged source=recovered."""
    recovered = []
    for gt in oracle:
        max_iou = max((iou(gt.bbox, obj.bbox) for obj in combined), default=0.0)
        if max_iou < zeta:
            recovered.append(gt.with_source(Source.RECOVERED))
    return recovered


def merge_labels(
    human: Sequence[LayoutObject],
    corrected_unselected: Sequence[LayoutObject],
    recovered: Sequence[LayoutObject],
) -> List[LayoutObject]:
    """Concatenate the three label streams, provenance untouched."""
    return list(human) + list(corrected_unselected) + list(recovered)
