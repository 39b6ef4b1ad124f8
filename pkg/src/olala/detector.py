"""Detector contract and its two implementations.

The synthetic detector is a noisy oracle for desk-scale simulation: it
reads hidden ground truth and corrupts it according to a saturating skill
parameter, producing the four classic error types (wrong category, wrong
box, duplicate, false negative). The external detector is a thin
line-delimited JSON client for a real model served out of process.

Randomness is counter-based: every draw is keyed by
(seed, purpose, page, state, object index) so results do not depend on
call or iteration order.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import socket
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple

from .core import BBox, CategoryDist, Dataset, LayoutObject, Source, best_match, iou


class DetectorError(Exception):
    """Detector-side failure (unknown page, transport, retrain)."""


@dataclass(frozen=True)
class Prediction:
    """Model output for one page: objects tagged source=model-auto."""

    objects: tuple

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))


class Detector(Protocol):
    skill: float

    def detect(self, page_ref: int) -> Prediction: ...

    def refine(self, page_ref: int, proposals: Sequence[BBox]) -> List[Tuple[BBox, CategoryDist]]: ...

    def update_skill(self, n_labeled_objects: int) -> None: ...


@dataclass
class SyntheticConfig:
    """Noise knobs for the synthetic detector.

    tau: labeled-object count at which skill reaches 1-1/e.
    sigma: box-edge jitter as a fraction of the box dimension.
    rho / delta / phi: base probabilities of category flip, object drop,
    and duplicate emission, all scaled by (1 - skill).
    """

    tau: float = 2000.0
    sigma: float = 0.08
    rho: float = 0.10
    delta: float = 0.15
    phi: float = 0.08
    seed: int = 0
    confidence_threshold: float = 0.5

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        for name in ("sigma", "rho", "delta", "phi"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def _rng_for(seed: int, *keys) -> random.Random:
    digest = hashlib.sha256(repr((seed,) + keys).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


def _trunc_gauss(rng: random.Random, sigma: float) -> float:
    if sigma == 0.0:
        return 0.0
    return max(-2.0 * sigma, min(2.0 * sigma, rng.gauss(0.0, sigma)))


class SyntheticDetector:
    """Noisy oracle standing in for a trained two-stage detector."""

    def __init__(self, oracle: Dataset, config: Optional[SyntheticConfig] = None):
        self.oracle = oracle
        self.config = config or SyntheticConfig()
        self.skill = 0.0
        self._n_labeled = 0

    def update_skill(self, n_labeled_objects: int) -> None:
        if n_labeled_objects < 0:
            raise ValueError("labeled-object count must be nonnegative")
        self._n_labeled = n_labeled_objects
        self.skill = 1.0 - math.exp(-n_labeled_objects / self.config.tau)

    def set_skill(self, skill: float) -> None:
        """Pin skill directly (test and sweep hook)."""
        if not 0.0 <= skill <= 1.0:
            raise ValueError("skill must be in [0, 1]")
        self.skill = skill

    def _page(self, page_ref: int):
        try:
            return self.oracle.page_by_id(page_ref)
        except KeyError as exc:
            raise DetectorError(f"unknown page {page_ref}") from exc

    def _jitter_box(self, bbox: BBox, rng: random.Random, page_w: float, page_h: float) -> BBox:
        s = self.skill
        sx = (1.0 - s) * self.config.sigma * bbox.w
        sy = (1.0 - s) * self.config.sigma * bbox.h
        x1 = bbox.x + _trunc_gauss(rng, sx)
        y1 = bbox.y + _trunc_gauss(rng, sy)
        x2 = bbox.x2 + _trunc_gauss(rng, sx)
        y2 = bbox.y2 + _trunc_gauss(rng, sy)
        w = max(x2 - x1, 1e-3)
        h = max(y2 - y1, 1e-3)
        return BBox(x1, y1, w, h).clamped(page_w, page_h)

    def _noisy_dist(self, category: int, rng: random.Random) -> CategoryDist:
        n = self.oracle.n_categories
        s = self.skill
        if s == 1.0:
            return CategoryDist.one_hot(category, n)
        noise = [rng.random() for _ in range(n)]
        total = sum(noise)
        probs = tuple(
            s * (1.0 if i == category else 0.0) + (1.0 - s) * noise[i] / total
            for i in range(n)
        )
        return CategoryDist(probs)

    def detect(self, page_ref: int) -> Prediction:
        page = self._page(page_ref)
        cfg = self.config
        s = self.skill
        out = []
        for j, gt in enumerate(page.objects):
            rng = _rng_for(cfg.seed, "detect", page_ref, self._n_labeled, j)
            if rng.random() < (1.0 - s) * cfg.delta:
                continue
            box = self._jitter_box(gt.bbox, rng, page.width, page.height)
            category = gt.category.argmax
            if rng.random() < (1.0 - s) * cfg.rho and self.oracle.n_categories > 1:
                others = [c for c in range(self.oracle.n_categories) if c != category]
                category = others[rng.randrange(len(others))]
            dist = self._noisy_dist(category, rng)
            confidence = s * iou(box, gt.bbox) + (1.0 - s) * rng.random()
            if confidence >= cfg.confidence_threshold:
                out.append(
                    LayoutObject(
                        bbox=box,
                        category=dist,
                        source=Source.MODEL_AUTO,
                        confidence=confidence,
                    )
                )
                if rng.random() < (1.0 - s) * cfg.phi:
                    dup_box = self._jitter_box(gt.bbox, rng, page.width, page.height)
                    dup_conf = confidence * rng.uniform(0.5, 0.95)
                    if dup_conf >= cfg.confidence_threshold:
                        out.append(
                            LayoutObject(
                                bbox=dup_box,
                                category=self._noisy_dist(category, rng),
                                source=Source.MODEL_AUTO,
                                confidence=dup_conf,
                            )
                        )
        return Prediction(objects=tuple(out))

    def refine(self, page_ref: int, proposals: Sequence[BBox]) -> List[Tuple[BBox, CategoryDist]]:
        if not proposals:
            raise DetectorError("refine requires a non-empty proposal list")
        page = self._page(page_ref)
        n = self.oracle.n_categories
        s = self.skill
        out = []
        for proposal in proposals:
            key = (round(proposal.x, 6), round(proposal.y, 6), round(proposal.w, 6), round(proposal.h, 6))
            rng = _rng_for(self.config.seed, "refine", page_ref, self._n_labeled, key)
            match = best_match(proposal, page.objects)
            if match is None:
                box = self._jitter_box(proposal, rng, page.width, page.height)
                out.append((box, CategoryDist.uniform(n)))
                continue
            idx, match_iou = match
            gt = page.objects[idx]
            blended = BBox(
                s * gt.bbox.x + (1.0 - s) * proposal.x,
                s * gt.bbox.y + (1.0 - s) * proposal.y,
                s * gt.bbox.w + (1.0 - s) * proposal.w,
                s * gt.bbox.h + (1.0 - s) * proposal.h,
            )
            box = self._jitter_box(blended, rng, page.width, page.height)
            weight = s * match_iou
            cat = gt.category.argmax
            probs = tuple(
                weight * (1.0 if i == cat else 0.0) + (1.0 - weight) / n for i in range(n)
            )
            out.append((box, CategoryDist(probs)))
        return out


class ExternalDetector:
    """Wire-protocol client for a detector served over a local socket.

    One JSON message per line; requests carry an "op" field and responses
    either an "objects" array or {"ok": true}.
    """

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self.skill = 0.0

    def _roundtrip(self, request: dict) -> dict:
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout) as conn:
                conn.sendall((json.dumps(request) + "\n").encode())
                buf = b""
                while not buf.endswith(b"\n"):
                    chunk = conn.recv(65536)
                    if not chunk:
                        break
                    buf += chunk
        except OSError as exc:
            raise DetectorError(f"detector transport failure: {exc}") from exc
        try:
            return json.loads(buf.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DetectorError(f"malformed detector response: {exc}") from exc

    @staticmethod
    def _parse_objects(response: dict) -> List[LayoutObject]:
        try:
            objects = []
            for rec in response["objects"]:
                x, y, w, h = (float(v) for v in rec["bbox"])
                scores = [float(v) for v in rec["scores"]]
                total = sum(scores)
                objects.append(
                    LayoutObject(
                        bbox=BBox(x, y, w, h),
                        category=CategoryDist(tuple(v / total for v in scores)),
                        source=Source.MODEL_AUTO,
                        confidence=float(rec.get("confidence", 1.0)),
                    )
                )
            return objects
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise DetectorError(f"malformed detector response: {exc}") from exc

    def detect(self, page_ref: int) -> Prediction:
        response = self._roundtrip({"op": "detect", "image_id": page_ref})
        return Prediction(objects=tuple(self._parse_objects(response)))

    def refine(self, page_ref: int, proposals: Sequence[BBox]) -> List[Tuple[BBox, CategoryDist]]:
        if not proposals:
            raise DetectorError("refine requires a non-empty proposal list")
        response = self._roundtrip(
            {
                "op": "refine",
                "image_id": page_ref,
                "proposals": [[b.x, b.y, b.w, b.h] for b in proposals],
            }
        )
        objects = self._parse_objects(response)
        if len(objects) != len(proposals):
            raise DetectorError(
                f"refine returned {len(objects)} objects for {len(proposals)} proposals"
            )
        return [(o.bbox, o.category) for o in objects]

    def update_skill(self, n_labeled_objects: int, dataset_path: Optional[str] = None) -> None:
        response = self._roundtrip({"op": "train", "dataset_path": dataset_path})
        if not response.get("ok"):
            raise DetectorError(f"retrain request rejected: {response!r}")
