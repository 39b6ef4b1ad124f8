"""Synthetic oracle dataset generation.

Pages are built as 1-3 column layouts of vertically stacked, non
overlapping rectangles with a skewed category frequency distribution,
mirroring real document layout datasets at desk scale. Output is plain
COCO, loadable by the ingest module. Fixed seeds reproduce byte-identical
files.
"""

from __future__ import annotations

import random
from typing import List, Optional, Sequence

from .core import BBox, CategoryDist, Dataset, LayoutObject, PageAnnotation, Source

DEFAULT_SKEW = (0.45, 0.25, 0.15, 0.10, 0.05)


def generate_oracle(
    n_pages: int = 200,
    mean_objects: float = 30.0,
    n_categories: int = 5,
    skew: Optional[Sequence[float]] = None,
    seed: int = 0,
    page_width: int = 800,
    page_height: int = 1000,
) -> Dataset:
    if skew is None:
        if n_categories == len(DEFAULT_SKEW):
            skew = DEFAULT_SKEW
        else:
            # geometric-ish falloff, normalized
            raw = [2.0 ** (-i) for i in range(n_categories)]
            total = sum(raw)
            skew = [v / total for v in raw]
    if len(skew) != n_categories:
        raise ValueError("skew length must equal n_categories")
    rng = random.Random((seed, "synth-oracle").__repr__())
    categories = tuple((i + 1, f"region-{i + 1}") for i in range(n_categories))

    pages: List[PageAnnotation] = []
    for page_idx in range(n_pages):
        target = max(1, round(rng.gauss(mean_objects, mean_objects * 0.15)))
        n_cols = rng.choice((1, 2, 3))
        margin = 20
        gutter = 16
        col_w = (page_width - 2 * margin - (n_cols - 1) * gutter) // n_cols
        objects: List[LayoutObject] = []
        per_col = [target // n_cols] * n_cols
        for i in range(target % n_cols):
            per_col[i] += 1
        for col in range(n_cols):
            x = margin + col * (col_w + gutter)
            y = margin
            for _ in range(per_col[col]):
                h = rng.randint(14, 60)
                if y + h > page_height - margin:
                    break
                w = rng.randint(int(col_w * 0.6), col_w)
                cat = rng.choices(range(n_categories), weights=skew, k=1)[0]
                objects.append(
                    LayoutObject(
                        bbox=BBox(float(x), float(y), float(w), float(h)),
                        category=CategoryDist.one_hot(cat, n_categories),
                        source=Source.GROUND_TRUTH,
                    )
                )
                y += h + rng.randint(6, 18)
        pages.append(
            PageAnnotation(
                image_id=page_idx + 1,
                width=float(page_width),
                height=float(page_height),
                objects=tuple(objects),
                file_name=f"page-{page_idx + 1:05d}.png",
            )
        )
    return Dataset(categories=categories, pages=tuple(pages))
