import random

import pytest

from olala.core import BBox, CategoryDist, Dataset, LayoutObject, PageAnnotation, Source


def rasterized_iou(a: BBox, b: BBox) -> float:
    """Grid-counting oracle for integer-coordinate boxes."""
    inter = _raster_intersection(a, b)
    union = int(a.area + b.area - inter)
    return inter / union if union else 0.0


def rasterized_overlap(a: BBox, b: BBox) -> float:
    inter = _raster_intersection(a, b)
    smaller = int(min(a.area, b.area))
    return inter / smaller if smaller else 0.0


def _raster_intersection(a: BBox, b: BBox) -> int:
    cells_a = {
        (x, y)
        for x in range(int(a.x), int(a.x2))
        for y in range(int(a.y), int(a.y2))
    }
    count = 0
    for x in range(int(b.x), int(b.x2)):
        for y in range(int(b.y), int(b.y2)):
            if (x, y) in cells_a:
                count += 1
    return count


def random_int_box(rng: random.Random, extent: int = 40) -> BBox:
    x = rng.randint(0, extent)
    y = rng.randint(0, extent)
    w = rng.randint(1, extent)
    h = rng.randint(1, extent)
    return BBox(float(x), float(y), float(w), float(h))


def make_object(x, y, w, h, cat=0, n_cats=2, source=Source.GROUND_TRUTH, **kw):
    return LayoutObject(
        bbox=BBox(x, y, w, h),
        category=CategoryDist.one_hot(cat, n_cats),
        source=source,
        **kw,
    )


@pytest.fixture
def tiny_dataset():
    objects = (
        make_object(10, 10, 100, 30, cat=0),
        make_object(10, 60, 100, 40, cat=1),
    )
    page = PageAnnotation(image_id=1, width=200, height=200, objects=objects,
                          file_name="page-1.png")
    return Dataset(categories=((1, "text"), (2, "figure")), pages=(page,))
