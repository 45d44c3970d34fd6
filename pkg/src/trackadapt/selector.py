"""Mask selection from the segmenter's candidates.

Each candidate is scored ``alpha * S_IoU + S_g + gamma * S_m`` where
``S_g`` compares its shape with the motion prediction and ``S_m`` is its
overlap with it. Without a prediction only ``alpha * S_IoU`` counts, which
is the segmenter's own choice.
"""

import dataclasses
import math

import numpy as np

from trackadapt.config import SelectorWeights
from trackadapt.exceptions import DomainError, EmptyCandidatesError
from trackadapt.geometry import BinaryMask, BoundingBox, iou, is_present, sim_ratio


@dataclasses.dataclass(frozen=True, eq=False)
class Candidate:
    """One decoder proposal. ``box`` is ``None`` when the mask is empty."""

    box: BoundingBox | None
    s_iou: float
    s_obj: float
    embedding: np.ndarray | None = None
    mask: BinaryMask | None = None

    def __post_init__(self):
        if not 0.0 <= self.s_iou <= 1.0:
            raise DomainError(f"s_iou must lie in [0, 1], got {self.s_iou}.")
        if not math.isfinite(self.s_obj):
            raise DomainError(f"s_obj must be finite, got {self.s_obj}.")
        if not is_present(self.box):
            object.__setattr__(self, "box", None)

    @property
    def is_empty(self) -> bool:
        return self.box is None

    def to_json(self) -> dict:
        return {
            "box": self.box,
            "s_iou": self.s_iou,
            "s_obj": self.s_obj,
        }


@dataclasses.dataclass(frozen=True)
class SelectionResult:
    index: int
    scores: tuple[float, ...]


def geometric_score(
    pred: BoundingBox, cand: BoundingBox | None, w: SelectorWeights
) -> float:
    """``beta_ar * Sim(AR) + beta_area * Sim(area)``; 0 for an empty candidate."""
    if not is_present(cand):
        return 0.0
    s_ar = sim_ratio(pred.aspect_ratio, cand.aspect_ratio)
    s_area = sim_ratio(pred.area, cand.area)
    return w.beta_ar * s_ar + w.beta_area * s_area


def motion_score(pred: BoundingBox | None, cand: BoundingBox | None) -> float:
    return iou(pred, cand)


def select_mask(
    candidates: list[Candidate],
    pred: BoundingBox | None,
    w: SelectorWeights,
    use_geometry: bool = True,
    use_motion: bool = True,
) -> SelectionResult:
    """Index of the best-scoring candidate, lowest index on ties.

    Raises:
        EmptyCandidatesError: If ``candidates`` is empty.
    """
    if not candidates:
        raise EmptyCandidatesError("select_mask needs at least one candidate.")
    guided = is_present(pred)
    scores = []
    for cand in candidates:
        score = w.alpha * cand.s_iou
        if guided:
            if use_geometry:
                score += geometric_score(pred, cand.box, w)
            if use_motion:
                score += w.gamma * motion_score(pred, cand.box)
        scores.append(score)
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    return SelectionResult(index=best, scores=tuple(scores))
