"""End-to-end acceptance suite.

Each test covers one acceptance criterion and prints a single
``ACCEPTANCE <name>: PASS|FAIL`` line before asserting, so the pytest log
doubles as a checklist.
"""

import json
import math
import random
import statistics
import time

import numpy as np
import pytest
import yaml
from fastapi.testclient import TestClient

from olala.cli import EXIT_OK, main
from olala import coco
from olala.core import BBox, CategoryDist, LayoutObject, Source, iou, overlap_coefficient
from olala.correction import merge_labels, recover_missing, remove_duplicates
from olala.detector import SyntheticConfig, SyntheticDetector
from olala.loop import (
    BudgetLedger,
    LoopConfig,
    ScheduleConfig,
    run,
    run_round,
    seed_pool,
    selection_ratio,
)
from olala.scoring import (
    PerturbConfig,
    category_disagreement,
    marginal_score,
    perturb_boxes,
    perturbation_score,
    position_disagreement,
)
from olala.service import create_app
from olala.simagent import dataset_accuracy
from olala.synth import generate_oracle

from conftest import make_object


def report(name: str, passed: bool, detail: str = "") -> None:
    verdict = "PASS" if passed else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: {verdict}{suffix}")
    assert passed, f"{name}: {detail}"


def grid_iou_and_overlap(a: BBox, b: BBox) -> tuple:
    """Independent pixel-grid oracle for integer-coordinate boxes."""
    extent = int(max(a.x2, b.x2, a.y2, b.y2))
    ga = np.zeros((extent, extent), dtype=bool)
    gb = np.zeros((extent, extent), dtype=bool)
    ga[int(a.y):int(a.y2), int(a.x):int(a.x2)] = True
    gb[int(b.y):int(b.y2), int(b.x):int(b.x2)] = True
    inter = int(np.count_nonzero(ga & gb))
    union = int(np.count_nonzero(ga | gb))
    smaller = min(int(np.count_nonzero(ga)), int(np.count_nonzero(gb)))
    return inter / union, inter / smaller


def int_box(rng: random.Random) -> BBox:
    return BBox(float(rng.randint(0, 50)), float(rng.randint(0, 50)),
                float(rng.randint(1, 40)), float(rng.randint(1, 40)))


def test_geometry_oracle_equivalence():
    rng = random.Random(0)
    start = time.perf_counter()
    bad = 0
    for _ in range(10_000):
        a, b = int_box(rng), int_box(rng)
        ref_iou, ref_overlap = grid_iou_and_overlap(a, b)
        if iou(a, b) != ref_iou or overlap_coefficient(a, b) != ref_overlap:
            bad += 1
        if overlap_coefficient(a, b) < iou(a, b):
            bad += 1
    elapsed = time.perf_counter() - start
    report("geometry-oracle-equivalence", bad == 0 and elapsed < 5.0,
           f"mismatches={bad}, {elapsed:.2f}s")


def test_scoring_formula_suite():
    checks = []
    checks.append(len(perturb_boxes(BBox(0, 0, 10, 10), PerturbConfig())) == 16)
    checks.append(
        perturb_boxes(BBox(100, 100, 50, 20), PerturbConfig(pairs=((0.08, 0.04),)))[0]
        == BBox(96.0, 99.2, 50.0, 20.0))

    b = BBox(0, 0, 10, 10)
    shifted = BBox(5, 0, 10, 10)
    checks.append(abs(position_disagreement(b, [shifted, shifted]) - 2 / 3) < 1e-9)
    checks.append(position_disagreement(b, [b]) == 0.0)
    checks.append(position_disagreement(b, [BBox(50, 50, 5, 5)]) == 1.0)

    one_hot = CategoryDist.one_hot(0, 2)
    checks.append(abs(category_disagreement(one_hot, [CategoryDist((0.5, 0.5))])
                      + math.log(0.5)) < 1e-9)
    u4 = CategoryDist.uniform(4)
    checks.append(abs(category_disagreement(u4, [u4]) - math.log(4)) < 1e-9)
    two = CategoryDist.one_hot(2, 4)
    checks.append(category_disagreement(two, [two, two]) == 0.0)

    checks.append(marginal_score(CategoryDist.one_hot(0, 3)) == 0.0)
    checks.append(abs(marginal_score(CategoryDist.uniform(5)) - 1.0) < 1e-9)
    checks.append(abs(marginal_score(CategoryDist((0.5, 0.3, 0.2))) - 0.8) < 1e-9)

    # kl-mode fixed point: zero perturbation on a perfect-skill detector
    oracle = generate_oracle(n_pages=3, mean_objects=5, seed=1)
    det = SyntheticDetector(oracle, SyntheticConfig(seed=1))
    det.set_skill(1.0)
    page = oracle.pages[0]
    gt = page.objects[0]
    obj = LayoutObject(bbox=gt.bbox, category=gt.category, source=Source.MODEL_AUTO)
    cfg = PerturbConfig(pairs=((0.0, 0.0),) * 4, divergence="kl")
    score = perturbation_score(obj, det, page.image_id, cfg,
                               (page.width, page.height))
    checks.append(score == 0.0)

    report("scoring-formula-suite", all(checks),
           f"{sum(checks)}/{len(checks)} checks")


def test_ranking_power():
    oracle = generate_oracle(n_pages=200, mean_objects=8, n_categories=5, seed=17)
    det = SyntheticDetector(oracle, SyntheticConfig(seed=17))
    det.set_skill(0.9)
    cfg = PerturbConfig()
    start = time.perf_counter()
    hits = 0
    for page in oracle.pages:
        size = (page.width, page.height)
        scores = []
        for i, gt in enumerate(page.objects):
            bbox = gt.bbox
            if i == 0:  # corrupt exactly one object per page
                bbox = bbox.translated(0.3 * bbox.w, 0).clamped(*size)
            obj = LayoutObject(bbox=bbox, category=gt.category,
                               source=Source.MODEL_AUTO)
            scores.append(perturbation_score(obj, det, page.image_id, cfg, size))
        hits += scores[0] > statistics.median(scores)
    elapsed = time.perf_counter() - start
    rate = hits / len(oracle.pages)
    report("ranking-power", rate >= 0.9 and elapsed < 60.0,
           f"rate={rate:.3f}, {elapsed:.1f}s")


def test_correction_invariants():
    rng = random.Random(2)

    def rand_objects(n_max, source=Source.GROUND_TRUTH):
        return [
            make_object(rng.randint(0, 60), rng.randint(0, 60),
                        rng.randint(1, 40), rng.randint(1, 40), source=source)
            for _ in range(rng.randint(0, n_max))
        ]

    failures = 0
    for _ in range(1_000):
        human = rand_objects(6, Source.MANUAL)
        unselected = rand_objects(6, Source.MODEL_AUTO)
        kept = remove_duplicates(unselected, human, 0.25)
        if any(overlap_coefficient(p.bbox, h.bbox) >= 0.25
               for p in kept for h in human):
            failures += 1

        oracle = rand_objects(6)
        combined = rand_objects(6, Source.MODEL_AUTO)
        recovered = recover_missing(oracle, combined, 0.05)
        if recover_missing(oracle, combined + recovered, 0.05) != []:
            failures += 1

        extra = rand_objects(4, Source.RECOVERED)
        if len(merge_labels(human, combined, extra)) != (
                len(human) + len(combined) + len(extra)):
            failures += 1
    report("correction-invariants", failures == 0, f"failures={failures}/3000")


def test_budget_conservation():
    oracle = generate_oracle(n_pages=40, mean_objects=10, seed=23)
    ok = True
    details = []
    for mode in ("olala-perturbation", "olala-random", "image-marginal"):
        det = SyntheticDetector(oracle, SyntheticConfig(seed=23, tau=300.0))
        pool = seed_pool(oracle, 4, 23)
        cfg = LoopConfig(
            mode=mode,
            schedule=ScheduleConfig(total_rounds=3, budget_total=180),
            seed=23,
        )
        rep = run(pool, oracle, det, cfg)
        total = 0.0
        for r in rep.rounds:
            c = r.charge_counts
            expected = c["full"] + 0.2 * c["discounted"] + c["recovered"]
            ok &= abs(r.spent - expected) <= 1e-9
            ok &= r.spent <= r.allowance + 1.0
            total += r.spent
        ok &= abs(rep.total_spent - total) <= 1e-9
        details.append(f"{mode}={rep.total_spent:.1f}")
    report("budget-conservation", ok, ", ".join(details))


def test_perfect_repair():
    # jitter off so a kept (discounted) prediction is geometrically exact;
    # category flips, drops, and duplicates still occur and must all be repaired
    oracle = generate_oracle(n_pages=40, mean_objects=12, n_categories=5, seed=7)
    aps = {}
    for skill in (0.1, 0.5, 0.9):
        det = SyntheticDetector(oracle, SyntheticConfig(seed=5, sigma=0.0))
        det.set_skill(skill)
        pool = seed_pool(oracle, 0, 5)
        cfg = LoopConfig(
            mode="olala-perturbation",
            schedule=ScheduleConfig(r_initial=1.0, r_last=1.0, total_rounds=1,
                                    budget_total=10**9),
            seed=5,
        )
        ledger = BudgetLedger(round_allowance=10**9)
        run_round(pool, oracle, det, cfg, ledger, 0)
        aps[skill] = dataset_accuracy(pool.labeled, oracle)["mean_ap"]
    report("perfect-repair", all(ap == 1.0 for ap in aps.values()),
           ", ".join(f"skill {s}: AP={ap}" for s, ap in aps.items()))


def test_trend_reproduction():
    oracle = generate_oracle(n_pages=200, mean_objects=30, n_categories=5, seed=11)
    start = time.perf_counter()
    reports = {}
    for mode in ("olala-perturbation", "image-random"):
        det = SyntheticDetector(oracle, SyntheticConfig(seed=11, tau=500.0))
        pool = seed_pool(oracle, 10, 11)
        cfg = LoopConfig(
            mode=mode,
            schedule=ScheduleConfig(total_rounds=4, budget_total=1200),
            seed=11,
        )
        reports[mode] = run(pool, oracle, det, cfg)
    elapsed = time.perf_counter() - start
    olala, image = reports["olala-perturbation"], reports["image-random"]
    ratio = olala.labeled_images / image.labeled_images
    ok = (ratio >= 1.2 and olala.final_ap >= image.final_ap and elapsed < 300.0)
    report("trend-reproduction", ok,
           f"images {olala.labeled_images} vs {image.labeled_images} "
           f"(x{ratio:.2f}), AP {olala.final_ap:.3f} vs {image.final_ap:.3f}, "
           f"{elapsed:.0f}s")


def test_ablation_recovery():
    oracle = generate_oracle(n_pages=200, mean_objects=30, n_categories=5, seed=11)
    aps = {}
    for enable_recovery in (True, False):
        det = SyntheticDetector(oracle, SyntheticConfig(seed=3))
        det.set_skill(0.5)
        pool = seed_pool(oracle, 0, 3)
        cfg = LoopConfig(
            mode="olala-perturbation",
            schedule=ScheduleConfig(r_initial=0.9, r_last=0.9, total_rounds=1,
                                    budget_total=10**9),
            seed=3,
            enable_recovery=enable_recovery,
        )
        ledger = BudgetLedger(round_allowance=10**9)
        rep = run_round(pool, oracle, det, cfg, ledger, 0)
        aps[enable_recovery] = rep.dataset_ap
    drop = aps[True] - aps[False]
    report("ablation-recovery", drop >= 0.10,
           f"full={aps[True]:.3f}, no-recovery={aps[False]:.3f}, drop={drop:.3f}")


def test_schedule_suite():
    ok = True
    for r0, r1, T in ((0.9, 0.4, 10), (0.9, 0.5, 8), (0.9, 0.75, 4)):
        cfg = ScheduleConfig(r_initial=r0, r_last=r1, total_rounds=T)
        ratios = [selection_ratio(cfg, t) for t in range(T)]
        ok &= ratios[0] == r0 and ratios[-1] == r1
        ok &= all(a >= b for a, b in zip(ratios, ratios[1:]))
    report("schedule-suite", ok)


def test_determinism(tmp_path):
    oracle_path = tmp_path / "oracle.json"
    coco.export_coco(generate_oracle(n_pages=20, mean_objects=8, seed=2),
                     oracle_path)
    cfg_path = tmp_path / "run.yaml"
    cfg_path.write_text(yaml.safe_dump({
        "dataset": str(oracle_path),
        "modes": ["olala-perturbation", "image-random"],
        "budget": 60,
        "rounds": 2,
        "seed": 6,
        "seed_pages": 3,
        "detector": {"tau": 200.0},
    }))
    contents = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["simulate", "--config", str(cfg_path),
                     "--out-dir", str(out)]) == EXIT_OK
        contents.append({p.name: p.read_bytes() for p in out.glob("*.txt")})
    report("determinism", contents[0] == contents[1],
           f"{len(contents[0])} report files compared")


def test_service_replay(tmp_path):
    oracle_path = tmp_path / "oracle.json"
    coco.export_coco(generate_oracle(n_pages=15, mean_objects=8, seed=4),
                     oracle_path)
    state_dir = tmp_path / "state"
    client = TestClient(create_app(state_dir))
    resp = client.post("/sessions", json={
        "dataset": str(oracle_path),
        "modes": ["olala-marginal"],
        "budget": 40,
        "rounds": 2,
        "seed": 5,
        "seed_pages": 2,
        "detector": {"tau": 100.0},
    })
    sid = resp.json()["session_id"]
    for _ in range(3):  # a few submissions, then leave one task outstanding
        task = client.post(f"/sessions/{sid}/tasks/next").json()
        if task.get("round_complete"):
            break
        payload = {"confirmations": [p["index"] for p in task["predictions"]
                                     if p["selected"]],
                   "edits": [], "additions": []}
        client.post(f"/tasks/{task['task_id']}/labels", json=payload)
    outstanding = client.post(f"/sessions/{sid}/tasks/next").json()
    before = client.get(f"/sessions/{sid}").json()

    restarted = TestClient(create_app(state_dir))  # fresh process over same log
    after = restarted.get(f"/sessions/{sid}").json()
    replayed = restarted.post(f"/sessions/{sid}/tasks/next").json()
    ok = (after == before and replayed == outstanding)
    report("service-replay", ok,
           f"spent={after.get('total_spent')}, "
           f"labeled={after.get('labeled_images')}")
