"""Session-based annotation service.

Exposes the annotation loop to human annotators over HTTP: per-image
tasks carry the scored predictions, the selected flags, and the
uncovered-region highlights; submissions charge the ledger and grow the
labeled set. Every session mutation is appended to an event log so a
restarted server reconstructs identical state by replay.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import coco
from .config import ConfigError, RunConfig
from .core import BBox, CategoryDist, Dataset, LayoutObject, Source
from .correction import remove_duplicates, uncovered_regions
from .detector import SyntheticDetector
from .loop import (
    BudgetLedger,
    PoolState,
    per_image_quota,
    seed_pool,
    select_objects,
    selection_ratio,
)
from .loop import _score_objects  # shared scoring path with the batch loop
from .simagent import dataset_accuracy, source_breakdown
import random


def _obj_to_json(obj: LayoutObject) -> dict:
    return {
        "bbox": [obj.bbox.x, obj.bbox.y, obj.bbox.w, obj.bbox.h],
        "probs": list(obj.category.probs),
        "source": obj.source.value,
        "score": obj.score,
        "confidence": obj.confidence,
    }


def _obj_from_json(rec: dict) -> LayoutObject:
    return LayoutObject(
        bbox=BBox(*rec["bbox"]),
        category=CategoryDist(tuple(rec["probs"])),
        source=Source(rec["source"]),
        score=rec.get("score"),
        confidence=rec.get("confidence"),
    )


def _quartiles(scores: List[float]) -> List[float]:
    if not scores:
        return [0.0, 0.0, 0.0]
    s = sorted(scores)
    def q(p):
        idx = p * (len(s) - 1)
        lo = int(idx)
        hi = min(lo + 1, len(s) - 1)
        return s[lo] + (s[hi] - s[lo]) * (idx - lo)
    return [q(0.25), q(0.5), q(0.75)]


class Session:
    """One annotation session: pool, ledger, detector, and phase."""

    def __init__(self, session_id: str, config: RunConfig, log_path: Path):
        self.id = session_id
        self.config = config
        self.log_path = log_path
        self.lock = threading.Lock()

        self.oracle: Dataset = coco.load_coco(config.dataset)
        self.detector = SyntheticDetector(self.oracle, config.synthetic_config())
        mode = config.modes[0]
        self.loop_cfg = config.loop_config(mode)
        self.pool: PoolState = seed_pool(self.oracle, config.seed_pages, config.seed)
        self.round = 0
        self.detector.update_skill(self.pool.n_labeled_objects)
        self.ledger = BudgetLedger(
            round_allowance=self.loop_cfg.schedule.round_allowance(0),
            eta=config.eta,
        )
        self.total_spent = 0.0
        self.phase = "idle"
        self.outstanding_task: Optional[dict] = None
        self._rng = random.Random((config.seed, "service").__repr__())

    # ---- event log -------------------------------------------------

    def _append_event(self, event: dict) -> None:
        with self.log_path.open("a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def apply_event(self, event: dict) -> None:
        """Replay one logged mutation onto in-memory state."""
        kind = event["type"]
        if kind == "created":
            return
        if kind == "task-issued":
            self.phase = "serving-round"
            self.outstanding_task = event["task"]
        elif kind == "labels-submitted":
            page = self.oracle.page_by_id(event["page_id"])
            merged = [_obj_from_json(rec) for rec in event["objects"]]
            self.pool.mark_labeled(page.with_objects(merged))
            self.ledger.begin_page(event["page_id"])
            for charge in event["charges"]:
                self.ledger.charge(charge)
            self.total_spent = event["total_spent"]
            self.outstanding_task = None
        elif kind == "round-advanced":
            self.round = event["round"]
            self.detector.update_skill(self.pool.n_labeled_objects)
            if self.round >= self.loop_cfg.schedule.total_rounds:
                self.phase = "finished"
            else:
                self.ledger = BudgetLedger(
                    round_allowance=self.loop_cfg.schedule.round_allowance(self.round),
                    eta=self.config.eta,
                )
                self.phase = "serving-round"
        else:
            raise ValueError(f"unknown event type {kind!r}")

    # ---- operations ------------------------------------------------

    def status(self) -> dict:
        return {
            "session_id": self.id,
            "phase": self.phase,
            "round": self.round,
            "total_rounds": self.loop_cfg.schedule.total_rounds,
            "remaining_budget": self.ledger.remaining,
            "total_spent": self.total_spent,
            "labeled_images": len(self.pool.labeled.pages),
            "unlabeled_images": len(self.pool.unlabeled),
            "detector_skill": self.detector.skill,
            "outstanding_task": (self.outstanding_task or {}).get("task_id"),
        }

    def next_task(self) -> dict:
        if self.phase == "finished":
            raise HTTPException(409, detail={"error": "session-finished"})
        if self.phase == "idle":
            self.phase = "serving-round"
        if self.outstanding_task is not None:
            return self.outstanding_task
        if self.ledger.remaining < 1 or not self.pool.unlabeled:
            return {"round_complete": True, "round": self.round}

        page_id = self.pool.unlabeled[0]
        page = self.oracle.page_by_id(page_id)
        prediction = self.detector.detect(page_id)
        objects = list(prediction.objects)
        ratio = selection_ratio(self.loop_cfg.schedule, self.round)
        if objects:
            scored = _score_objects(
                objects, self.loop_cfg.scorer_name, self.detector, page,
                self.loop_cfg, self._rng,
            )
            quota = per_image_quota(ratio, len(scored), self.ledger.remaining)
            selected, _ = select_objects(scored, quota)
            selected_set = {id(o) for o in selected}
        else:
            scored, quota, selected_set = [], 0, set()

        task = {
            "task_id": uuid.uuid4().hex,
            "page_id": page_id,
            "image": {
                "file_name": page.file_name,
                "width": page.width,
                "height": page.height,
            },
            "quota": quota,
            "ratio": ratio,
            "eta": self.config.eta,
            "remaining_budget": self.ledger.remaining,
            "quartiles": _quartiles([o.score for o in scored]),
            "predictions": [
                dict(_obj_to_json(o), index=i, selected=id(o) in selected_set)
                for i, o in enumerate(scored)
            ],
            "uncovered_regions": [
                [b.x, b.y, b.w, b.h]
                for b in uncovered_regions(
                    page.width, page.height, scored, self.config.grid_step
                )
            ],
        }
        self.outstanding_task = task
        self._append_event({"type": "task-issued", "task": task})
        return task

    def submit_labels(self, task_id: str, payload: dict) -> dict:
        task = self.outstanding_task
        if task is None or task["task_id"] != task_id:
            raise HTTPException(404, detail={"error": "unknown-task"})
        page = self.oracle.page_by_id(task["page_id"])
        confirmations = payload.get("confirmations", [])
        edits = payload.get("edits", [])
        additions = payload.get("additions", [])

        predictions = task["predictions"]
        selected_idx = {p["index"] for p in predictions if p["selected"]}
        touched = set(confirmations) | {e.get("index") for e in edits}
        if not all(isinstance(i, int) and i in selected_idx for i in touched):
            raise HTTPException(
                400, detail={"error": "malformed-payload",
                             "message": "confirmations/edits must reference selected prediction indices"}
            )
        if touched != selected_idx:
            raise HTTPException(
                400, detail={"error": "malformed-payload",
                             "message": "every selected prediction needs a confirmation or an edit"}
            )

        charge = len(confirmations) * self.config.eta + len(edits) + len(additions)
        if charge > self.ledger.remaining:
            raise HTTPException(
                409, detail={"error": "over-budget",
                             "remaining_budget": self.ledger.remaining,
                             "projected_charge": charge}
            )

        n_cats = self.oracle.n_categories
        by_index = {p["index"]: p for p in predictions}

        def check_box(bbox) -> BBox:
            try:
                x, y, w, h = (float(v) for v in bbox)
                box = BBox(x, y, w, h)
            except (TypeError, ValueError) as exc:
                raise HTTPException(400, detail={"error": "malformed-geometry",
                                                 "message": str(exc)})
            if box.x < 0 or box.y < 0 or box.x2 > page.width or box.y2 > page.height:
                raise HTTPException(400, detail={"error": "malformed-geometry",
                                                 "message": "box outside page bounds"})
            return box

        human: List[LayoutObject] = []
        charges: List[str] = []
        for i in confirmations:
            rec = by_index[i]
            human.append(
                LayoutObject(
                    bbox=BBox(*rec["bbox"]),
                    category=CategoryDist(tuple(rec["probs"])),
                    source=Source.MODEL_UNCHANGED,
                    confidence=rec.get("confidence"),
                )
            )
            charges.append("discounted")
        for edit in edits:
            box = check_box(edit["bbox"])
            cat = int(edit["category"])
            if not 0 <= cat < n_cats:
                raise HTTPException(400, detail={"error": "malformed-payload",
                                                 "message": f"category {cat} out of range"})
            human.append(
                LayoutObject(bbox=box, category=CategoryDist.one_hot(cat, n_cats),
                             source=Source.MANUAL)
            )
            charges.append("full")
        recovered: List[LayoutObject] = []
        for add in additions:
            box = check_box(add["bbox"])
            cat = int(add["category"])
            if not 0 <= cat < n_cats:
                raise HTTPException(400, detail={"error": "malformed-payload",
                                                 "message": f"category {cat} out of range"})
            recovered.append(
                LayoutObject(bbox=box, category=CategoryDist.one_hot(cat, n_cats),
                             source=Source.RECOVERED)
            )
            charges.append("recovered")

        unselected = [
            _obj_from_json(p) for p in predictions if not p["selected"]
        ]
        kept = remove_duplicates(unselected, human, self.config.xi) \
            if self.loop_cfg.enable_dedup else unselected
        merged = human + kept + recovered

        self.pool.mark_labeled(page.with_objects(merged))
        self.ledger.begin_page(task["page_id"])
        for kind in charges:
            self.ledger.charge(kind)
        self.total_spent += charge
        self.outstanding_task = None
        self._append_event(
            {
                "type": "labels-submitted",
                "task_id": task_id,
                "page_id": task["page_id"],
                "objects": [_obj_to_json(o) for o in merged],
                "charges": charges,
                "total_spent": self.total_spent,
            }
        )
        return {
            "task_id": task_id,
            "accepted": True,
            "charge": charge,
            "objects_labeled": len(merged),
            "remaining_budget": self.ledger.remaining,
        }

    def advance_round(self) -> dict:
        if self.phase == "finished":
            raise HTTPException(409, detail={"error": "session-finished"})
        if self.outstanding_task is not None:
            raise HTTPException(409, detail={"error": "task-outstanding"})
        if self.ledger.remaining >= 1 and self.pool.unlabeled:
            raise HTTPException(409, detail={"error": "round-not-complete",
                                             "remaining_budget": self.ledger.remaining})
        new_round = self.round + 1
        event = {"type": "round-advanced", "round": new_round}
        self.apply_event(event)
        self._append_event(event)
        return {"round": self.round, "phase": self.phase}

    def export(self) -> dict:
        dataset = self.pool.labeled
        images, annotations = [], []
        ann_id = 1
        for page in dataset.pages:
            images.append({"id": page.image_id, "width": page.width,
                           "height": page.height, "file_name": page.file_name})
            for obj in page.objects:
                annotations.append(
                    {
                        "id": ann_id,
                        "image_id": page.image_id,
                        "category_id": dataset.categories[obj.category.argmax][0],
                        "bbox": [obj.bbox.x, obj.bbox.y, obj.bbox.w, obj.bbox.h],
                        "area": obj.bbox.area,
                        "iscrowd": 0,
                        "olala_source": obj.source.value,
                    }
                )
                ann_id += 1
        return {
            "images": images,
            "annotations": annotations,
            "categories": [{"id": cid, "name": name} for cid, name in dataset.categories],
        }

    def metrics(self) -> dict:
        labeled = {p.image_id: p for p in self.pool.labeled.pages}
        created = self.oracle.with_pages(
            tuple(
                labeled.get(p.image_id, p.with_objects(()))
                for p in self.oracle.pages
            )
        )
        return {
            "round": self.round,
            "detector_skill": self.detector.skill,
            "labeled_images": len(self.pool.labeled.pages),
            "labeled_objects": self.pool.n_labeled_objects,
            "total_spent": self.total_spent,
            "charge_counts": self.ledger.counts(),
            "source_histogram": source_breakdown(self.pool.labeled),
            "dataset_ap": dataset_accuracy(created, self.oracle)["mean_ap"],
        }


class SessionStore:
    """All sessions, persisted as one event log per session."""

    def __init__(self, state_dir):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: Dict[str, Session] = {}
        self._recover()

    def _log_path(self, session_id: str) -> Path:
        return self.state_dir / f"session-{session_id}.log"

    def _recover(self) -> None:
        for log_path in sorted(self.state_dir.glob("session-*.log")):
            session_id = log_path.stem.removeprefix("session-")
            events = [
                json.loads(line)
                for line in log_path.read_text().splitlines()
                if line.strip()
            ]
            if not events or events[0]["type"] != "created":
                continue
            config = RunConfig.from_dict(events[0]["config"])
            session = Session(session_id, config, log_path)
            for event in events:
                session.apply_event(event)
            self.sessions[session_id] = session

    def create(self, raw_config: dict) -> Session:
        try:
            config = RunConfig.from_dict(raw_config)
            if not Path(config.dataset).is_file():
                raise ConfigError(f"dataset not readable: {config.dataset}")
            session_id = uuid.uuid4().hex
            session = Session(session_id, config, self._log_path(session_id))
        except (ConfigError, coco.CocoFormatError, ValueError) as exc:
            raise HTTPException(400, detail={"error": "invalid-config", "message": str(exc)})
        session._append_event({"type": "created", "config": raw_config})
        self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(404, detail={"error": "unknown-session"})
        return session

    def by_task(self, task_id: str) -> Session:
        for session in self.sessions.values():
            task = session.outstanding_task
            if task is not None and task["task_id"] == task_id:
                return session
        raise HTTPException(404, detail={"error": "unknown-task"})


def create_app(state_dir, image_root=None) -> FastAPI:
    app = FastAPI(title="olala annotation service")
    store = SessionStore(state_dir)
    app.state.store = store

    @app.get("/health")
    def health():
        return {"ok": True}

    @app.post("/sessions")
    def create_session(config: dict):
        session = store.create(config)
        return {"session_id": session.id}

    @app.get("/sessions/{session_id}")
    def session_status(session_id: str):
        return store.get(session_id).status()

    @app.post("/sessions/{session_id}/tasks/next")
    def next_task(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.next_task()

    @app.post("/tasks/{task_id}/labels")
    def submit_labels(task_id: str, payload: dict):
        session = store.by_task(task_id)
        with session.lock:
            return session.submit_labels(task_id, payload)

    @app.post("/sessions/{session_id}/rounds/advance")
    def advance_round(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.advance_round()

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        return JSONResponse(store.get(session_id).export())

    @app.get("/sessions/{session_id}/metrics")
    def session_metrics(session_id: str):
        return store.get(session_id).metrics()

    if image_root is not None and Path(image_root).is_dir():
        app.mount("/images", StaticFiles(directory=str(image_root)), name="images")

    return app
