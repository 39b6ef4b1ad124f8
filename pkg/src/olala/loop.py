"""Round orchestration: pool state, selection scheduling, per-image
quotas, object selection, budget charging, and full multi-round runs.

Each round walks the unlabeled pool page by page: detect, score, select
the per-image quota of most ambiguous objects for the annotator, correct
the unselected predictions, resolve false negatives, merge, and move the
page to the labeled set. A round stops once less than one full charge of
budget remains; the in-flight page is allowed to finish.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .core import Dataset, LayoutObject, PageAnnotation, Source
from .correction import CorrectionConfig, merge_labels, remove_duplicates
from .detector import Detector
from .scoring import (
    PerturbConfig,
    image_score,
    marginal_score,
    perturbation_score,
    random_score,
)
from .simagent import (
    SimConfig,
    dataset_accuracy,
    resolve_false_negatives,
    simulate_label,
    source_breakdown,
)

OBJECT_MODES = ("olala", "olala-random", "olala-marginal", "olala-perturbation")
IMAGE_MODES = ("image-random", "image-marginal")
ALL_MODES = OBJECT_MODES + IMAGE_MODES


@dataclass
class PoolState:
    """Labeled set, unlabeled page ids, and the round index."""

    labeled: Dataset
    unlabeled: List[int]
    round: int = 0

    def __post_init__(self):
        labeled_ids = {p.image_id for p in self.labeled.pages}
        if labeled_ids & set(self.unlabeled):
            raise ValueError("labeled and unlabeled pools overlap")

    @property
    def n_labeled_objects(self) -> int:
        return self.labeled.n_objects

    def mark_labeled(self, page: PageAnnotation) -> None:
        if page.image_id not in self.unlabeled:
            raise ValueError(f"page {page.image_id} is not in the unlabeled pool")
        self.unlabeled.remove(page.image_id)
        self.labeled = self.labeled.with_pages(self.labeled.pages + (page,))


@dataclass(frozen=True)
class ScheduleConfig:
    r_initial: float = 0.9
    r_last: float = 0.4
    total_rounds: int = 10
    decay: str = "linear"  # or "exponential"
    budget_total: int = 0

    def __post_init__(self):
        if not 0.0 <= self.r_last <= self.r_initial <= 1.0:
            raise ValueError("require 0 <= r_last <= r_initial <= 1")
        if self.total_rounds < 1:
            raise ValueError("total_rounds must be >= 1")
        if self.decay not in ("linear", "exponential"):
            raise ValueError(f"unknown decay {self.decay!r}")

    def round_allowance(self, t: int) -> int:
        """Even split of the total budget, remainder to the final round."""
        per_round = self.budget_total // self.total_rounds
        if t == self.total_rounds - 1:
            return self.budget_total - per_round * (self.total_rounds - 1)
        return per_round


def selection_ratio(cfg: ScheduleConfig, t: int) -> float:
    if not 0 <= t < cfg.total_rounds:
        raise ValueError(f"round {t} out of range [0, {cfg.total_rounds})")
    if cfg.total_rounds == 1:
        return cfg.r_initial
    frac = t / (cfg.total_rounds - 1)
    if cfg.decay == "linear":
        return cfg.r_initial + (cfg.r_last - cfg.r_initial) * frac
    if cfg.r_initial == 0.0:
        return 0.0
    return cfg.r_initial * (cfg.r_last / cfg.r_initial) ** frac


def per_image_quota(r: float, n_predictions: int, remaining_budget: float) -> int:
    if remaining_budget < 1:
        return 0
    return min(math.ceil(r * n_predictions), math.floor(remaining_budget))


def select_objects(
    scored: Sequence[LayoutObject], m_i: int
) -> Tuple[List[LayoutObject], List[LayoutObject]]:
    """Partition by descending score; ties break by confidence descending
    then original index ascending."""
    if any(o.score is None for o in scored):
        raise ValueError("all objects must carry scores")
    order = sorted(
        range(len(scored)),
        key=lambda i: (-scored[i].score, -(scored[i].confidence or 0.0), i),
    )
    cut = min(max(m_i, 0), len(scored))
    chosen = set(order[:cut])
    selected = [scored[i] for i in order[:cut]]
    unselected = [scored[i] for i in range(len(scored)) if i not in chosen]
    return selected, unselected


@dataclass
class BudgetLedger:
    """Per-round charge accounting. Confirmations cost eta, everything
    else a full unit."""

    round_allowance: float
    eta: float = 0.2
    spent: float = 0.0
    charges: List[Tuple[int, str]] = field(default_factory=list)
    _page: int = -1

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1]")

    @property
    def remaining(self) -> float:
        return self.round_allowance - self.spent

    def begin_page(self, page_id: int) -> None:
        self._page = page_id

    def charge(self, kind: str) -> float:
        cost = self.eta if kind == "discounted" else 1.0
        self.spent += cost
        self.charges.append((self._page, kind))
        return cost

    def counts(self) -> Dict[str, int]:
        out = {"full": 0, "discounted": 0, "recovered": 0}
        for _, kind in self.charges:
            out[kind] += 1
        return out


@dataclass
class RoundReport:
    round: int
    mode: str
    ratio: float
    skill: float
    allowance: float
    spent: float
    pages_labeled: int
    charge_counts: Dict[str, int]
    source_histogram: Dict[str, float]
    dataset_ap: float
    failed_pages: List[int] = field(default_factory=list)


@dataclass
class FinalReport:
    mode: str
    rounds: List[RoundReport]
    final_ap: float
    labeled_images: int
    labeled_objects: int
    total_spent: float
    source_histogram: Dict[str, float]


@dataclass
class LoopConfig:
    """Everything one run needs besides the detector and oracle."""

    mode: str = "olala-perturbation"
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    correction: CorrectionConfig = field(default_factory=CorrectionConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    eta: float = 0.2
    seed: int = 0
    enable_dedup: bool = True
    enable_recovery: bool = True

    def __post_init__(self):
        if self.mode not in ALL_MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {ALL_MODES}")

    @property
    def scorer_name(self) -> str:
        if self.mode in IMAGE_MODES:
            return "marginal" if self.mode == "image-marginal" else "random"
        if self.mode in ("olala", "olala-perturbation"):
            return "perturbation"
        return self.mode.split("-", 1)[1]


def _score_objects(
    objects: Sequence[LayoutObject],
    scorer_name: str,
    detector: Detector,
    page: PageAnnotation,
    cfg: LoopConfig,
    rng: random.Random,
) -> List[LayoutObject]:
    scored = []
    for obj in objects:
        if scorer_name == "perturbation":
            s = perturbation_score(
                obj, detector, page.image_id, cfg.perturb, (page.width, page.height)
            )
        elif scorer_name == "marginal":
            s = marginal_score(obj.category)
        else:
            s = random_score(rng)
        scored.append(obj.with_score(s))
    return scored


def _image_mode_order(
    pool: PoolState,
    oracle: Dataset,
    detector: Detector,
    cfg: LoopConfig,
    rng: random.Random,
) -> List[int]:
    if cfg.mode == "image-random":
        order = list(pool.unlabeled)
        rng.shuffle(order)
        return order
    # image-marginal: detect every remaining page, rank by mean marginal
    # score descending; empty-prediction pages are force-included first.
    ranked = []
    for page_id in pool.unlabeled:
        page = oracle.page_by_id(page_id)
        prediction = detector.detect(page_id)
        scored = [o.with_score(marginal_score(o.category)) for o in prediction.objects]
        key = 2.0 if not scored else image_score(scored)
        ranked.append((key, page_id))
    ranked.sort(key=lambda kv: (-kv[0], kv[1]))
    return [page_id for _, page_id in ranked]


def run_round(
    pool: PoolState,
    oracle: Dataset,
    detector: Detector,
    cfg: LoopConfig,
    ledger: BudgetLedger,
    t: int,
) -> RoundReport:
    rng = random.Random((cfg.seed, "round", t).__repr__())
    ratio = 1.0 if cfg.mode in IMAGE_MODES else selection_ratio(cfg.schedule, t)
    if cfg.mode in IMAGE_MODES:
        page_order = _image_mode_order(pool, oracle, detector, cfg, rng)
    else:
        page_order = list(pool.unlabeled)

    pages_labeled = 0
    failed_pages: List[int] = []
    for page_id in page_order:
        if ledger.remaining < 1:
            break
        page = oracle.page_by_id(page_id)
        ledger.begin_page(page_id)
        try:
            if cfg.mode in IMAGE_MODES:
                # whole-image labeling: the page's full cost is known up
                # front, so only start it if it fits the round allowance
                if len(page.objects) > ledger.remaining:
                    break
                labels = []
                for gt in page.objects:
                    ledger.charge("full")
                    labels.append(gt.with_source(Source.MANUAL))
                merged = labels
            else:
                prediction = detector.detect(page_id)
                objects = list(prediction.objects)
                if objects:
                    scored = _score_objects(
                        objects, cfg.scorer_name, detector, page, cfg, rng
                    )
                    m_i = per_image_quota(ratio, len(scored), ledger.remaining)
                    selected, unselected = select_objects(scored, m_i)
                else:
                    # Force-include empty-prediction pages: straight to
                    # false-negative resolution.
                    selected, unselected = [], []
                labels, charges = simulate_label(selected, page.objects, cfg.sim)
                for kind in charges:
                    ledger.charge(kind)
                if cfg.enable_dedup:
                    kept = remove_duplicates(unselected, labels, cfg.correction.xi)
                else:
                    kept = unselected
                combined = labels + kept
                if cfg.enable_recovery:
                    recovered = resolve_false_negatives(
                        page.objects, combined, cfg.correction.zeta, ledger
                    )
                else:
                    recovered = []
                merged = merge_labels(labels, kept, recovered)
        except Exception:
            failed_pages.append(page_id)
            continue
        pool.mark_labeled(page.with_objects(merged))
        pages_labeled += 1

    created = _created_view(pool, oracle)
    return RoundReport(
        round=t,
        mode=cfg.mode,
        ratio=ratio,
        skill=detector.skill,
        allowance=ledger.round_allowance,
        spent=ledger.spent,
        pages_labeled=pages_labeled,
        charge_counts=ledger.counts(),
        source_histogram=source_breakdown(pool.labeled),
        dataset_ap=dataset_accuracy(created, oracle)["mean_ap"],
        failed_pages=failed_pages,
    )


def _created_view(pool: PoolState, oracle: Dataset) -> Dataset:
    """The created dataset over the full oracle page set: labeled pages
    carry their created objects, still-unlabeled pages are empty."""
    labeled = {p.image_id: p for p in pool.labeled.pages}
    pages = []
    for page in oracle.pages:
        if page.image_id in labeled:
            pages.append(labeled[page.image_id])
        else:
            pages.append(page.with_objects(()))
    return oracle.with_pages(pages)


def seed_pool(oracle: Dataset, n_seed_pages: int, seed: int) -> PoolState:
    """Split the oracle into an initial labeled set (ground truth kept)
    and the unlabeled remainder, deterministically."""
    rng = random.Random((seed, "seed-pool").__repr__())
    ids = [p.image_id for p in oracle.pages]
    seed_ids = set(rng.sample(ids, min(n_seed_pages, len(ids))))
    labeled_pages = tuple(p for p in oracle.pages if p.image_id in seed_ids)
    unlabeled = [i for i in ids if i not in seed_ids]
    return PoolState(
        labeled=Dataset(categories=oracle.categories, pages=labeled_pages),
        unlabeled=unlabeled,
    )


def run(
    pool: PoolState,
    oracle: Dataset,
    detector: Detector,
    cfg: LoopConfig,
) -> FinalReport:
    rounds = []
    total_spent = 0.0
    for t in range(cfg.schedule.total_rounds):
        detector.update_skill(pool.n_labeled_objects)
        ledger = BudgetLedger(
            round_allowance=cfg.schedule.round_allowance(t), eta=cfg.eta
        )
        pool.round = t
        report = run_round(pool, oracle, detector, cfg, ledger, t)
        total_spent += ledger.spent
        rounds.append(report)
    detector.update_skill(pool.n_labeled_objects)

    created = _created_view(pool, oracle)
    return FinalReport(
        mode=cfg.mode,
        rounds=rounds,
        final_ap=dataset_accuracy(created, oracle)["mean_ap"],
        labeled_images=sum(r.pages_labeled for r in rounds),
        labeled_objects=pool.n_labeled_objects,
        total_spent=total_spent,
        source_histogram=source_breakdown(pool.labeled),
    )
