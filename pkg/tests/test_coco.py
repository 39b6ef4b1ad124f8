import json

import pytest

from olala.coco import CocoFormatError, export_coco, load_coco
from olala.core import Source


def write_coco(tmp_path, annotations, name="data.json"):
    payload = {
        "images": [{"id": 1, "width": 200, "height": 200, "file_name": "p1.png"}],
        "annotations": annotations,
        "categories": [{"id": 1, "name": "text"}, {"id": 2, "name": "figure"}],
    }
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_minimal_load(tmp_path):
    path = write_coco(tmp_path, [
        {"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, 10, 10], "area": 100}
    ])
    ds = load_coco(path)
    assert len(ds.pages) == 1
    assert ds.pages[0].n_objects == 1
    obj = ds.pages[0].objects[0]
    assert obj.category.probs == (1.0, 0.0)
    assert obj.source is Source.GROUND_TRUTH


def test_degenerate_box_rejected_with_annotation_id(tmp_path):
    path = write_coco(tmp_path, [
        {"id": 77, "image_id": 1, "category_id": 1, "bbox": [0, 0, 0, 10], "area": 0}
    ])
    with pytest.raises(CocoFormatError, match="id=77"):
        load_coco(path)


def test_unknown_category_rejected(tmp_path):
    path = write_coco(tmp_path, [
        {"id": 3, "image_id": 1, "category_id": 9, "bbox": [0, 0, 10, 10], "area": 100}
    ])
    with pytest.raises(CocoFormatError, match="category"):
        load_coco(path)


def test_parse_error_names_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(CocoFormatError, match="bad.json"):
        load_coco(path)


def test_out_of_bounds_box_clamped(tmp_path):
    path = write_coco(tmp_path, [
        {"id": 1, "image_id": 1, "category_id": 1, "bbox": [195, 0, 10, 10], "area": 100}
    ])
    obj = load_coco(path).pages[0].objects[0]
    assert obj.bbox.x2 <= 200
    assert obj.bbox.w == 10


def test_source_tag_round_trips(tmp_path):
    path = write_coco(tmp_path, [
        {"id": 1, "image_id": 1, "category_id": 2, "bbox": [0, 0, 10, 10],
         "area": 100, "olala_source": "recovered"}
    ])
    ds = load_coco(path)
    assert ds.pages[0].objects[0].source is Source.RECOVERED
    out = tmp_path / "out.json"
    export_coco(ds, out)
    assert load_coco(out).pages[0].objects[0].source is Source.RECOVERED


def test_export_empty_dataset(tmp_path, tiny_dataset):
    empty = tiny_dataset.with_pages(())
    out = tmp_path / "empty.json"
    export_coco(empty, out)
    raw = json.loads(out.read_text())
    assert raw["images"] == [] and raw["annotations"] == []
    assert load_coco(out).pages == ()


def test_export_annotation_count(tmp_path, tiny_dataset):
    out = tmp_path / "one.json"
    export_coco(tiny_dataset, out)
    raw = json.loads(out.read_text())
    assert len(raw["annotations"]) == tiny_dataset.n_objects


def test_load_export_load_fixed_point(tmp_path):
    path = write_coco(tmp_path, [
        {"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, 10.5, 10], "area": 105},
        {"id": 2, "image_id": 1, "category_id": 2, "bbox": [50, 60, 20, 30], "area": 600,
         "olala_source": "manual"},
    ])
    first = load_coco(path)
    out = tmp_path / "roundtrip.json"
    export_coco(first, out)
    assert load_coco(out) == first
