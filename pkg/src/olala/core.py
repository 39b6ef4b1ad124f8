"""Domain types and box geometry shared by every other module.

Boxes are axis-aligned rectangles stored as (x, y, w, h) in absolute pixel
coordinates, matching the COCO convention. All types are immutable value
objects; the operations below are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

PROB_SUM_TOL = 1e-9


class Source(str, Enum):
    """Provenance of a layout object in a created dataset."""

    GROUND_TRUTH = "ground-truth"
    MANUAL = "manual"
    MODEL_UNCHANGED = "model-unchanged"
    MODEL_AUTO = "model-auto"
    RECOVERED = "recovered"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: (left, top, width, height) in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for v in (self.x, self.y, self.w, self.h):
            if not math.isfinite(v):
                raise ValueError(f"non-finite bbox coordinate in {self!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"bbox must have positive width and height: {self!r}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def translated(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)

    def clamped(self, width: float, height: float) -> "BBox":
        """Fit this box inside [0,width]x[0,height].

        The box is translated into frame first; if it is larger than the
        page it is cropped to the page extent.
        """
        w = min(self.w, width)
        h = min(self.h, height)
        x = min(max(self.x, 0.0), width - w)
        y = min(max(self.y, 0.0), height - h)
        return BBox(x, y, w, h)


def intersection_area(a: BBox, b: BBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union, exact area arithmetic."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def overlap_coefficient(a: BBox, b: BBox) -> float:
    """Intersection area over the smaller box's area; 1 under containment."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / min(a.area, b.area)


@dataclass(frozen=True)
class CategoryDist:
    """Probability distribution over the dataset's category table."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if not probs:
            raise ValueError("empty category distribution")
        for p in probs:
            if not (0.0 <= p <= 1.0) or not math.isfinite(p):
                raise ValueError(f"probability out of range: {p}")
        if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {sum(probs)}, not 1")

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def argmax(self) -> int:
        return max(range(len(self.probs)), key=lambda i: self.probs[i])

    def is_one_hot(self) -> bool:
        return max(self.probs) == 1.0

    @classmethod
    def one_hot(cls, index: int, n: int) -> "CategoryDist":
        if not 0 <= index < n:
            raise ValueError(f"one-hot index {index} out of range for {n} categories")
        return cls(tuple(1.0 if i == index else 0.0 for i in range(n)))

    @classmethod
    def uniform(cls, n: int) -> "CategoryDist":
        return cls((1.0 / n,) * n)


@dataclass(frozen=True)
class LayoutObject:
    """A bounding box plus category distribution, provenance tag, and
    optional ambiguity score / detector confidence."""

    bbox: BBox
    category: CategoryDist
    source: Source = Source.GROUND_TRUTH
    score: Optional[float] = None
    confidence: Optional[float] = None

    def __post_init__(self):
        if self.score is not None and self.score < 0:
            raise ValueError("object score must be nonnegative")
        if self.source is Source.GROUND_TRUTH and not self.category.is_one_hot():
            raise ValueError("ground-truth objects must carry one-hot distributions")

    def with_score(self, score: float) -> "LayoutObject":
        return replace(self, score=score)

    def with_source(self, source: Source) -> "LayoutObject":
        return replace(self, source=source)


@dataclass(frozen=True)
class PageAnnotation:
    """One page: its dimensions and its (ordered) layout objects."""

    image_id: int
    width: float
    height: float
    objects: tuple
    file_name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"page {self.image_id} has non-positive dimensions")

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    def with_objects(self, objects: Sequence[LayoutObject]) -> "PageAnnotation":
        return replace(self, objects=tuple(objects))


@dataclass(frozen=True)
class Dataset:
    """Ordered category table plus ordered pages."""

    categories: tuple  # of (id, name)
    pages: tuple  # of PageAnnotation

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(tuple(c) for c in self.categories))
        object.__setattr__(self, "pages", tuple(self.pages))
        ids = [cid for cid, _ in self.categories]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate category ids")
        n = len(self.categories)
        for page in self.pages:
            for obj in page.objects:
                if len(obj.category) != n:
                    raise ValueError(
                        f"object on page {page.image_id} has a distribution of "
                        f"length {len(obj.category)}, expected {n}"
                    )

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def page_by_id(self, image_id: int) -> PageAnnotation:
        for page in self.pages:
            if page.image_id == image_id:
                return page
        raise KeyError(f"unknown page id {image_id}")

    @property
    def n_objects(self) -> int:
        return sum(p.n_objects for p in self.pages)

    def with_pages(self, pages: Sequence[PageAnnotation]) -> "Dataset":
        return replace(self, pages=tuple(pages))


def best_match(pred: BBox, gts: Sequence[LayoutObject]):
    """Index and IOU of the ground-truth object best matching `pred`.

    Returns None when `gts` is empty or no ground truth overlaps `pred`.
    Ties break toward the lowest index.
    """
    best_idx, best_iou = None, 0.0
    for i, gt in enumerate(gts):
        v = iou(pred, gt.bbox)
        if v > best_iou:
            best_idx, best_iou = i, v
    if best_idx is None:
        return None
    return best_idx, best_iou
