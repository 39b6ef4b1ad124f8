"""COCO object-detection annotation ingest and export.

Category distributions are one-hot on load. Boxes are clamped to page
bounds; degenerate boxes (w<=0 or h<=0) are a load error. Provenance is
carried in the per-annotation "olala_source" attribute.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .core import BBox, CategoryDist, Dataset, LayoutObject, PageAnnotation, Source


class CocoFormatError(ValueError):
    """Raised when a file does not parse as COCO detection annotations."""


def load_coco(path: Union[str, Path]) -> Dataset:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CocoFormatError(f"{path}: cannot parse as COCO JSON: {exc}") from exc

    for key in ("images", "annotations", "categories"):
        if key not in raw or not isinstance(raw[key], list):
            raise CocoFormatError(f"{path}: missing or invalid '{key}' array")

    categories = []
    for cat in raw["categories"]:
        try:
            categories.append((int(cat["id"]), str(cat["name"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise CocoFormatError(f"{path}: malformed category record {cat!r}") from exc
    cat_index = {cid: i for i, (cid, _) in enumerate(categories)}
    n_cats = len(categories)

    by_image = {}
    image_order = []
    for img in raw["images"]:
        try:
            image_id = int(img["id"])
            width = float(img["width"])
            height = float(img["height"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CocoFormatError(f"{path}: malformed image record {img!r}") from exc
        if image_id in by_image:
            raise CocoFormatError(f"{path}: duplicate image id {image_id}")
        by_image[image_id] = (width, height, img.get("file_name"), [])
        image_order.append(image_id)

    for ann in raw["annotations"]:
        ann_id = ann.get("id")
        try:
            image_id = int(ann["image_id"])
            category_id = int(ann["category_id"])
            x, y, w, h = (float(v) for v in ann["bbox"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CocoFormatError(f"{path}: malformed annotation id={ann_id}") from exc
        if image_id not in by_image:
            raise CocoFormatError(f"{path}: annotation id={ann_id} references unknown image {image_id}")
        if category_id not in cat_index:
            raise CocoFormatError(f"{path}: annotation id={ann_id} has unknown category id {category_id}")
        if w <= 0 or h <= 0:
            raise CocoFormatError(f"{path}: annotation id={ann_id} has degenerate bbox {ann['bbox']}")
        page_w, page_h, _, objects = by_image[image_id]
        bbox = BBox(x, y, w, h).clamped(page_w, page_h)
        source = Source(ann.get("olala_source", Source.GROUND_TRUTH.value))
        objects.append(
            LayoutObject(
                bbox=bbox,
                category=CategoryDist.one_hot(cat_index[category_id], n_cats),
                source=source,
            )
        )

    pages = []
    for image_id in image_order:
        width, height, file_name, objects = by_image[image_id]
        pages.append(
            PageAnnotation(
                image_id=image_id,
                width=width,
                height=height,
                objects=tuple(objects),
                file_name=file_name,
            )
        )
    return Dataset(categories=tuple(categories), pages=tuple(pages))


def export_coco(dataset: Dataset, path: Union[str, Path]) -> None:
    """Write a Dataset as COCO annotations; category argmax becomes the
    exported category id, source tags go to "olala_source"."""
    images = []
    annotations = []
    ann_id = 1
    for page in dataset.pages:
        img = {"id": page.image_id, "width": page.width, "height": page.height}
        if page.file_name is not None:
            img["file_name"] = page.file_name
        images.append(img)
        for obj in page.objects:
            cat_id = dataset.categories[obj.category.argmax][0]
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": page.image_id,
                    "category_id": cat_id,
                    "bbox": [obj.bbox.x, obj.bbox.y, obj.bbox.w, obj.bbox.h],
                    "area": obj.bbox.area,
                    "iscrowd": 0,
                    "olala_source": obj.source.value,
                }
            )
            ann_id += 1
    payload = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": cid, "name": name} for cid, name in dataset.categories],
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))
