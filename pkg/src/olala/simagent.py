"""Simulated labeling agent and dataset-accuracy metrics.

The agent answers labeling requests by consulting a hidden oracle: each
selected prediction is matched to its closest ground truth and either kept
(accurate enough, discounted charge) or substituted (full charge), with
each ground truth consumable at most once per image. False-negative
resolution re-adds missed oracle objects while budget remains.

Dataset accuracy compares a created dataset against the oracle in
COCO-style mean AP, treating created objects as unit-confidence
detections.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .core import Dataset, LayoutObject, Source, best_match, iou
from .correction import recover_missing

IOU_THRESHOLDS = tuple(0.5 + 0.05 * i for i in range(10))
RECALL_POINTS = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True)
class SimConfig:
    iou_keep_threshold: float = 0.925
    eta: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.iou_keep_threshold <= 1.0:
            raise ValueError("iou_keep_threshold must be in (0, 1]")


def simulate_label(
    selected: Sequence[LayoutObject],
    oracle_page: Sequence[LayoutObject],
    cfg: SimConfig = SimConfig(),
) -> Tuple[List[LayoutObject], List[str]]:
    """Label the selected predictions against the oracle page.

    Returns (labels, charge kinds). Kinds are "discounted" for accurate
    predictions kept unchanged and "full" otherwise; redundant or
    unmatched selections emit no label but still charge a full inspection.
    Each ground truth is consumed at most once.
    """
    labels: List[LayoutObject] = []
    charges: List[str] = []
    consumed = set()
    for pred in selected:
        match = best_match(pred.bbox, oracle_page)
        if match is None:
            charges.append("full")
            continue
        idx, match_iou = match
        if idx in consumed:
            charges.append("full")
            continue
        gt = oracle_page[idx]
        accurate = (
            match_iou > cfg.iou_keep_threshold
            and pred.category.argmax == gt.category.argmax
        )
        consumed.add(idx)
        if accurate:
            labels.append(pred.with_source(Source.MODEL_UNCHANGED))
            charges.append("discounted")
        else:
            labels.append(gt.with_source(Source.MANUAL))
            charges.append("full")
    return labels, charges


def resolve_false_negatives(
    oracle_page: Sequence[LayoutObject],
    combined: Sequence[LayoutObject],
    zeta: float,
    ledger,
) -> List[LayoutObject]:
    """Recover oracle objects missed by the combined labels, charging one
    full unit each while budget remains."""
    recovered = []
    for obj in recover_missing(oracle_page, combined, zeta):
        if ledger.remaining <= 0:
            break
        ledger.charge("recovered")
        recovered.append(obj)
    return recovered


def _average_precision(tp_flags: np.ndarray, n_gt: int) -> float:
    """101-point interpolated AP from ordered TP/FP flags."""
    if n_gt == 0:
        return float("nan")
    if tp_flags.size == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(~tp_flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)
    # precision envelope, then sample at the 101 recall points
    for i in range(precision.size - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = np.where(idx < precision.size, precision[np.minimum(idx, precision.size - 1)], 0.0)
    return float(sampled.mean())


def dataset_accuracy(created: Dataset, oracle: Dataset) -> Dict:
    """COCO-style mean AP of a created dataset against the oracle.

    Created objects are detections with confidence 1.0, ordered by page
    then object index; matching is greedy per image at each IOU threshold
    in 0.50:0.05:0.95.
    """
    created_ids = [p.image_id for p in created.pages]
    oracle_ids = [p.image_id for p in oracle.pages]
    if set(created_ids) != set(oracle_ids):
        raise ValueError("created and oracle datasets cover different page sets")

    created_by_id = {p.image_id: p for p in created.pages}
    n_cats = oracle.n_categories
    per_category = []
    for c in range(n_cats):
        n_gt = sum(
            1 for page in oracle.pages for o in page.objects if o.category.argmax == c
        )
        if n_gt == 0:
            per_category.append(float("nan"))
            continue
        aps = []
        for thr in IOU_THRESHOLDS:
            flags = []
            for page in oracle.pages:
                gts = [o for o in page.objects if o.category.argmax == c]
                dets = [
                    o
                    for o in created_by_id[page.image_id].objects
                    if o.category.argmax == c
                ]
                matched = [False] * len(gts)
                for det in dets:
                    best_i, best_v = -1, thr
                    for i, gt in enumerate(gts):
                        if matched[i]:
                            continue
                        v = iou(det.bbox, gt.bbox)
                        if v >= best_v:
                            best_i, best_v = i, v
                    if best_i >= 0:
                        matched[best_i] = True
                        flags.append(True)
                    else:
                        flags.append(False)
            aps.append(_average_precision(np.array(flags, dtype=bool), n_gt))
        per_category.append(float(np.mean(aps)))

    valid = [ap for ap in per_category if not np.isnan(ap)]
    mean_ap = float(np.mean(valid)) if valid else 0.0
    return {
        "mean_ap": mean_ap,
        "per_category": per_category,
    }


def source_breakdown(dataset: Dataset) -> Dict[str, float]:
    """Normalized histogram over object provenance tags."""
    counts = Counter(obj.source.value for page in dataset.pages for obj in page.objects)
    total = sum(counts.values())
    tags = [
        Source.MANUAL.value,
        Source.MODEL_AUTO.value,
        Source.MODEL_UNCHANGED.value,
        Source.RECOVERED.value,
        Source.GROUND_TRUTH.value,
    ]
    if total == 0:
        return {tag: 0.0 for tag in tags}
    return {tag: counts.get(tag, 0) / total for tag in tags}
