"""Error detection and recovery around a rolling target prototype.

In Detect mode every selected output is compared with the prototype (the
mean box and mean masked embedding of the last ``T`` reliable outputs). A
drop in aspect-ratio, area or semantic similarity below its ``sigma``
threshold flags an error: the prototype freezes and the machine enters
Recover mode. In Recover mode each frame's candidates are compared with the
frozen prototype; the first one above every ``tau`` threshold overrides the
selection, re-enters the prototype and returns the machine to Detect.
"""

import collections
import dataclasses
import enum
import logging

import numpy as np

from trackadapt.config import CueSwitches, EdrmConfig
from trackadapt.exceptions import DomainError
from trackadapt.geometry import BinaryMask, BoundingBox, cosine_similarity, is_present, sim_ratio
from trackadapt.selector import Candidate

logger = logging.getLogger(__name__)


class EdrmMode(str, enum.Enum):
    DETECT = "detect"
    RECOVER = "recover"


class TargetPrototype:
    """Windowed means of the last ``window`` reliable boxes and embeddings."""

    def __init__(self, window: int):
        if window < 1:
            raise DomainError(f"Prototype window must be >= 1, got {window}.")
        self.window = window
        self._boxes: collections.deque[BoundingBox] = collections.deque(maxlen=window)
        self._embeddings: collections.deque[np.ndarray] = collections.deque(maxlen=window)
        self.frozen = False

    def __len__(self) -> int:
        return len(self._boxes)

    @property
    def ready(self) -> bool:
        return len(self._boxes) == self.window

    def push(self, box: BoundingBox, embedding: np.ndarray) -> None:
        """Advance the window. Ignored while frozen."""
        if self.frozen:
            return
        self._boxes.append(box)
        self._embeddings.append(np.asarray(embedding, dtype=np.float64))

    @property
    def mean_box(self) -> BoundingBox | None:
        if not self._boxes:
            return None
        arr = np.array([b.as_tuple() for b in self._boxes])
        return BoundingBox(*(float(v) for v in arr.mean(axis=0)))

    @property
    def mean_embedding(self) -> np.ndarray | None:
        if not self._embeddings:
            return None
        return np.mean(np.stack(self._embeddings), axis=0)

    def to_json(self) -> dict:
        return {"size": len(self), "frozen": self.frozen, "box": self.mean_box}


@dataclasses.dataclass
class EdrmState:
    mode: EdrmMode
    prototype: TargetPrototype

    @classmethod
    def new(cls, cfg: EdrmConfig) -> "EdrmState":
        return cls(EdrmMode.DETECT, TargetPrototype(cfg.window))


@dataclasses.dataclass(frozen=True)
class SimilarityScores:
    s_ar: float
    s_a: float
    s_s: float

    @property
    def total(self) -> float:
        return self.s_ar + self.s_a + self.s_s


@dataclasses.dataclass(frozen=True)
class DetectOutcome:
    flagged: bool
    scores: SimilarityScores | None


def masked_embedding(features: np.ndarray, mask: BinaryMask) -> np.ndarray | None:
    """Mean feature vector over the mask's cells of an ``(h, w, d)`` grid.

    A mask larger than the grid is pooled down first (a cell counts when any
    of its pixels is set). Returns ``None`` for an empty mask.

    Raises:
        DomainError: If the grid is not 3-D or the mask is smaller than it.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3:
        raise DomainError(f"Feature grid must be (h, w, d), got shape {features.shape}.")
    grid_h, grid_w, _ = features.shape
    if (mask.height, mask.width) == (grid_h, grid_w):
        cells = mask.bits
    else:
        cells = mask.downsample_any(grid_h, grid_w)
    if not cells.any():
        return None
    return features[cells].mean(axis=0)


def similarity_scores(
    box: BoundingBox, embedding: np.ndarray | None, prototype: TargetPrototype
) -> SimilarityScores:
    ref = prototype.mean_box
    return SimilarityScores(
        s_ar=sim_ratio(box.aspect_ratio, ref.aspect_ratio),
        s_a=sim_ratio(box.area, ref.area),
        s_s=cosine_similarity(embedding, prototype.mean_embedding),
    )


def _below(scores: SimilarityScores, cfg: EdrmConfig, cues: CueSwitches) -> bool:
    if cues.edrm_geometry and (scores.s_ar < cfg.sigma_ar or scores.s_a < cfg.sigma_a):
        return True
    return cues.edrm_semantic and scores.s_s < cfg.sigma_s


def _above(scores: SimilarityScores, cfg: EdrmConfig, cues: CueSwitches) -> bool:
    if cues.edrm_geometry and not (scores.s_ar > cfg.tau_ar and scores.s_a > cfg.tau_a):
        return False
    return not cues.edrm_semantic or scores.s_s > cfg.tau_s


def _ranking_score(scores: SimilarityScores, cues: CueSwitches) -> float:
    total = 0.0
    if cues.edrm_geometry:
        total += scores.s_ar + scores.s_a
    if cues.edrm_semantic:
        total += scores.s_s
    return total


def _flag(state: EdrmState) -> None:
    state.prototype.frozen = True
    state.mode = EdrmMode.RECOVER


def detect(
    state: EdrmState,
    box: BoundingBox | None,
    embedding: np.ndarray | None,
    cfg: EdrmConfig,
    cues: CueSwitches | None = None,
) -> DetectOutcome:
    """Check one selected output against the prototype, updating ``state``.

    Before the prototype holds ``T`` outputs nothing is flagged and the
    output just enters the window. After that an empty output is flagged
    as a lost target.
    """
    if state.mode != EdrmMode.DETECT:
        raise ValueError("detect() called in Recover mode; use try_recover().")
    cues = cues or CueSwitches()
    proto = state.prototype
    if not is_present(box):
        if proto.ready:
            _flag(state)
            return DetectOutcome(True, None)
        return DetectOutcome(False, None)
    if not proto.ready:
        if embedding is not None:
            proto.push(box, embedding)
        return DetectOutcome(False, None)
    scores = similarity_scores(box, embedding, proto)
    if _below(scores, cfg, cues):
        _flag(state)
        return DetectOutcome(True, scores)
    if embedding is not None:
        proto.push(box, embedding)
    return DetectOutcome(False, scores)


def try_recover(
    state: EdrmState,
    candidates: list[Candidate],
    cfg: EdrmConfig,
    cues: CueSwitches | None = None,
) -> int | None:
    """Index of the candidate that re-matches the frozen prototype, if any.

    Among candidates above all ``tau`` thresholds the highest summed
    similarity wins (lowest index on ties). On success the prototype thaws,
    takes the candidate in, and the mode returns to Detect.
    """
    if state.mode != EdrmMode.RECOVER:
        raise ValueError("try_recover() called in Detect mode; use detect().")
    cues = cues or CueSwitches()
    proto = state.prototype
    best, best_score = None, -np.inf
    for i, cand in enumerate(candidates):
        if cand.box is None or cand.embedding is None:
            continue
        scores = similarity_scores(cand.box, cand.embedding, proto)
        if not _above(scores, cfg, cues):
            continue
        score = _ranking_score(scores, cues)
        if score > best_score:
            best, best_score = i, score
    if best is None:
        return None
    proto.frozen = False
    state.mode = EdrmMode.DETECT
    proto.push(candidates[best].box, candidates[best].embedding)
    return best
