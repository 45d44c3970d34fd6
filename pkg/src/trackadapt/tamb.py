"""Target-aware memory selection.

The memory set of a frame always holds the prompted frame and the most
recent frame. The rest is chosen by walking back from the most recent frame,
admitting entries whose scores pass the ``mu`` thresholds until ``M`` are
collected, and keeping the ``N_m - 1`` of them with the highest weighted
score. :func:`baseline_fifo` is the plain first-in-first-out policy.
"""

import dataclasses
from collections.abc import Sequence

from scipy.special import expit

from trackadapt.config import TambConfig
from trackadapt.exceptions import DomainError, MissingPromptError
from trackadapt.geometry import BoundingBox, is_present


@dataclasses.dataclass(frozen=True, slots=True)
class MemoryEntry:
    frame_index: int
    box: BoundingBox | None
    s_iou: float
    s_obj: float
    s_m: float
    prompted: bool = False

    def __post_init__(self):
        if not 0.0 <= self.s_iou <= 1.0:
            raise DomainError(f"s_iou must lie in [0, 1], got {self.s_iou}.")
        if not 0.0 <= self.s_m <= 1.0:
            raise DomainError(f"s_m must lie in [0, 1], got {self.s_m}.")


def tamb_score(e: MemoryEntry, cfg: TambConfig, use_motion: bool = True) -> float:
    """``delta * s_iou + epsilon * sigmoid(s_obj) + zeta * s_m``."""
    score = cfg.delta * e.s_iou + cfg.epsilon * float(expit(e.s_obj))
    if use_motion:
        score += cfg.zeta * e.s_m
    return score


def admissible(e: MemoryEntry, cfg: TambConfig, use_motion: bool = True) -> bool:
    """Non-empty box and every score at or above its threshold."""
    if not is_present(e.box):
        return False
    if e.s_iou < cfg.mu_iou or float(expit(e.s_obj)) < cfg.mu_obj:
        return False
    return not use_motion or e.s_m >= cfg.mu_m


def _prompted(history: Sequence[MemoryEntry]) -> MemoryEntry:
    prompted = [e for e in history if e.prompted]
    if len(prompted) != 1:
        raise MissingPromptError(
            f"Memory history needs exactly one prompted entry, found {len(prompted)}."
        )
    return prompted[0]


def select_memories(
    history: Sequence[MemoryEntry], cfg: TambConfig, use_motion: bool = True
) -> list[int]:
    """Frame indices of the memory set, ascending.

    ``use_motion=False`` drops the motion score from both admission and
    ranking.

    Raises:
        MissingPromptError: If the history is empty or lacks the prompt.
    """
    if not history:
        raise MissingPromptError("Memory history is empty.")
    prompt = _prompted(history)
    recent = history[-1]
    pool: list[MemoryEntry] = []
    for e in reversed(history[:-1]):
        if len(pool) >= cfg.pool_size:
            break
        if admissible(e, cfg, use_motion):
            pool.append(e)
    ranked = sorted(
        pool, key=lambda e: (-tamb_score(e, cfg, use_motion), -e.frame_index)
    )[: cfg.slots - 1]
    chosen = {prompt.frame_index, recent.frame_index}
    chosen.update(e.frame_index for e in ranked)
    return sorted(chosen)


def baseline_fifo(history: Sequence[MemoryEntry], slots: int) -> list[int]:
    """The prompted frame plus the ``slots`` most recent frames, ascending."""
    if not history:
        raise MissingPromptError("Memory history is empty.")
    prompt = _prompted(history)
    chosen = {prompt.frame_index}
    chosen.update(e.frame_index for e in history[-slots:])
    return sorted(chosen)
