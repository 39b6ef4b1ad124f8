"""Object scoring functions.

The perturbation score translates a predicted box along the four
diagonals, feeds the shifted boxes back through the detector's proposal
refinement, and measures how much the refined boxes and category
distributions disagree with the original prediction. Random and marginal
baselines plus image-level mean aggregation live here too.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .core import BBox, CategoryDist, LayoutObject, iou
from .detector import Detector

LOG_FLOOR = 1e-12

DEFAULT_PAIRS = ((0.08, 0.04), (0.08, 0.16), (0.12, 0.04), (0.12, 0.16))

# top-left, top-right, bottom-left, bottom-right
DIRECTIONS = ((-1, -1), (1, -1), (-1, 1), (1, 1))

SCORER_NAMES = ("perturbation", "marginal", "random")


@dataclass(frozen=True)
class PerturbConfig:
    pairs: tuple = DEFAULT_PAIRS
    lam: float = 1.0
    divergence: str = "cross-entropy"  # or "kl"
    # Test-only switch: measure position disagreement against the raw
    # shifted boxes instead of the refined ones. Under it the position
    # term is a constant independent of the prediction.
    raw_position: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((float(a), float(b)) for a, b in self.pairs))
        if not self.pairs:
            raise ValueError("at least one (alpha, beta) pair required")
        if any(a < 0 or b < 0 for a, b in self.pairs):
            raise ValueError("alpha and beta must be nonnegative")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.divergence not in ("cross-entropy", "kl"):
            raise ValueError(f"unknown divergence {self.divergence!r}")

    @property
    def k(self) -> int:
        return len(self.pairs) * len(DIRECTIONS)


def perturb_boxes(b: BBox, cfg: PerturbConfig) -> List[BBox]:
    """K diagonal translations of `b`: width and height are unchanged,
    ordered by (pair index, direction index)."""
    out = []
    for alpha, beta in cfg.pairs:
        for sx, sy in DIRECTIONS:
            out.append(b.translated(sx * alpha * b.w, sy * beta * b.h))
    return out


def position_disagreement(b_hat: BBox, refined: Sequence[BBox]) -> float:
    if not refined:
        raise ValueError("position disagreement needs at least one box")
    return sum(1.0 - iou(b_hat, q) for q in refined) / len(refined)


def _cross_entropy(p: CategoryDist, q: CategoryDist) -> float:
    return -sum(pi * math.log(max(qi, LOG_FLOOR)) for pi, qi in zip(p.probs, q.probs))


def _kl(p: CategoryDist, q: CategoryDist) -> float:
    total = 0.0
    for pi, qi in zip(p.probs, q.probs):
        if pi > 0.0:
            total += pi * (math.log(pi) - math.log(max(qi, LOG_FLOOR)))
    return total


def category_disagreement(
    c_hat: CategoryDist, refined_dists: Sequence[CategoryDist], divergence: str = "cross-entropy"
) -> float:
    if not refined_dists:
        raise ValueError("category disagreement needs at least one distribution")
    if any(len(v) != len(c_hat) for v in refined_dists):
        raise ValueError("category table mismatch between distributions")
    div = _cross_entropy if divergence == "cross-entropy" else _kl
    return sum(div(c_hat, v) for v in refined_dists) / len(refined_dists)


def perturbation_score(
    obj: LayoutObject,
    detector: Detector,
    page_ref: int,
    cfg: Optional[PerturbConfig] = None,
    page_size: Optional[Tuple[float, float]] = None,
) -> float:
    """Overall disagreement of one prediction under box perturbation."""
    cfg = cfg or PerturbConfig()
    proposals = perturb_boxes(obj.bbox, cfg)
    if page_size is not None:
        width, height = page_size
        proposals = [p.clamped(width, height) for p in proposals]
    refined = detector.refine(page_ref, proposals)
    boxes = proposals if cfg.raw_position else [q for q, _ in refined]
    d_p = position_disagreement(obj.bbox, boxes)
    d_c = category_disagreement(obj.category, [v for _, v in refined], cfg.divergence)
    return d_p + cfg.lam * d_c


def marginal_score(c_hat: CategoryDist) -> float:
    """1 - (top prob - runner-up prob); higher means more ambiguous."""
    if len(c_hat) < 2:
        raise ValueError("marginal score needs at least two categories")
    top, second = sorted(c_hat.probs, reverse=True)[:2]
    return 1.0 - (top - second)


def random_score(rng: random.Random) -> float:
    return rng.random()


def image_score(objects: Sequence[LayoutObject]) -> float:
    """Mean object score; empty prediction lists score 0 (and are
    force-included by the loop)."""
    if not objects:
        return 0.0
    scores = [o.score for o in objects]
    if any(s is None for s in scores):
        raise ValueError("all objects must carry scores")
    return sum(scores) / len(scores)
