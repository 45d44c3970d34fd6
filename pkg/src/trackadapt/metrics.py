"""Tracking metrics: success AUC, precision, normalized precision and Acc.

Per-sequence scores are percentages; aggregates are the mean of the
per-sequence scores, so they do not depend on sequence order or length.

* AUC: success rate ``S(tau)`` (visible frames with IoU > tau) on the grid
  ``tau = 0, 0.01, ..., 1``, integrated as ``0.01 * sum(S(tau_i))`` over
  ``i = 0..99``.
* P / P_norm: visible frames whose center error is within 20 px, or within
  0.2 after dividing each axis by the ground-truth size.
* Acc: mean over all frames of the IoU on visible frames, and of 1 for an
  empty prediction (0 otherwise) on invisible frames.

A missing prediction on a visible frame counts as IoU 0 and infinite
center error.
"""

import dataclasses
import math
from collections.abc import Sequence

import numpy as np

from trackadapt.exceptions import DomainError
from trackadapt.geometry import BoundingBox, iou, is_present

THRESHOLDS = np.linspace(0.0, 1.0, 101)


@dataclasses.dataclass(frozen=True)
class SequenceResult:
    seq_id: str
    pred: tuple[BoundingBox | None, ...]
    gt: tuple[BoundingBox | None, ...]

    def __post_init__(self):
        if len(self.pred) != len(self.gt):
            raise DomainError(
                f"{self.seq_id}: {len(self.pred)} predictions for {len(self.gt)} frames."
            )
        object.__setattr__(self, "pred", tuple(b if is_present(b) else None for b in self.pred))
        object.__setattr__(self, "gt", tuple(b if is_present(b) else None for b in self.gt))

    @property
    def visible(self) -> list[bool]:
        return [g is not None for g in self.gt]

    @property
    def num_frames(self) -> int:
        return len(self.gt)

    @property
    def num_visible(self) -> int:
        return sum(self.visible)


def frame_ious(r: SequenceResult) -> np.ndarray:
    """IoU on each visible frame."""
    return np.array([iou(p, g) for p, g in zip(r.pred, r.gt) if g is not None])


def _center_errors(r: SequenceResult) -> tuple[np.ndarray, np.ndarray]:
    raw, norm = [], []
    for p, g in zip(r.pred, r.gt):
        if g is None:
            continue
        if p is None:
            raw.append(math.inf)
            norm.append(math.inf)
            continue
        dx, dy = p.cx - g.cx, p.cy - g.cy
        raw.append(math.hypot(dx, dy))
        norm.append(math.hypot(dx / g.w, dy / g.h))
    return np.array(raw), np.array(norm)


def _require_visible(r: SequenceResult) -> None:
    if r.num_visible == 0:
        raise DomainError(f"{r.seq_id}: no visible frame to score.")


def success_curve(r: SequenceResult) -> np.ndarray:
    """Success rate at each of the 101 thresholds."""
    _require_visible(r)
    ious = frame_ious(r)
    return (ious[None, :] > THRESHOLDS[:, None]).mean(axis=1)


def sequence_auc(r: SequenceResult) -> float:
    return float(success_curve(r)[:-1].sum() * 0.01 * 100.0)


def sequence_precision(r: SequenceResult, pixel_thresh: float = 20.0) -> float:
    _require_visible(r)
    raw, _ = _center_errors(r)
    return float((raw <= pixel_thresh).mean() * 100.0)


def sequence_norm_precision(r: SequenceResult, thresh: float = 0.2) -> float:
    _require_visible(r)
    _, norm = _center_errors(r)
    return float((norm <= thresh).mean() * 100.0)


def sequence_acc(r: SequenceResult) -> float:
    if r.num_frames == 0:
        raise DomainError(f"{r.seq_id}: empty sequence.")
    per_frame = [
        iou(p, g) if g is not None else (1.0 if p is None else 0.0)
        for p, g in zip(r.pred, r.gt)
    ]
    return float(np.mean(per_frame) * 100.0)


def _mean(values: list[float]) -> float:
    if not values:
        raise DomainError("No sequences to average.")
    return float(np.mean(values))


def success_auc(results: Sequence[SequenceResult]) -> float:
    return _mean([sequence_auc(r) for r in results])


def precision(results: Sequence[SequenceResult], pixel_thresh: float = 20.0) -> float:
    return _mean([sequence_precision(r, pixel_thresh) for r in results])


def norm_precision(results: Sequence[SequenceResult], thresh: float = 0.2) -> float:
    return _mean([sequence_norm_precision(r, thresh) for r in results])


def acc(results: Sequence[SequenceResult]) -> float:
    return _mean([sequence_acc(r) for r in results])


def success_plot(results: Sequence[SequenceResult]) -> list[tuple[float, float]]:
    """``(tau, mean success rate)`` points for plotting."""
    curves = np.stack([success_curve(r) for r in results])
    mean = curves.mean(axis=0)
    return [(round(float(t), 2), float(v)) for t, v in zip(THRESHOLDS, mean)]


# ---------------------------------------------------------------------------
# Result tables
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class SequenceMetrics:
    seq_id: str
    acc: float
    precision: float
    norm_precision: float
    auc: float
    frames: int


def evaluate_sequence(r: SequenceResult) -> SequenceMetrics:
    return SequenceMetrics(
        seq_id=r.seq_id,
        acc=sequence_acc(r),
        precision=sequence_precision(r),
        norm_precision=sequence_norm_precision(r),
        auc=sequence_auc(r),
        frames=r.num_frames,
    )


def aggregate(rows: Sequence[SequenceMetrics], seq_id: str = "ALL") -> SequenceMetrics:
    return SequenceMetrics(
        seq_id=seq_id,
        acc=_mean([m.acc for m in rows]),
        precision=_mean([m.precision for m in rows]),
        norm_precision=_mean([m.norm_precision for m in rows]),
        auc=_mean([m.auc for m in rows]),
        frames=sum(m.frames for m in rows),
    )


TABLE_COLUMNS = ("id", "Acc", "P", "P_norm", "AUC", "frames")


def format_results_table(rows: Sequence[SequenceMetrics]) -> str:
    """Tab-separated table, one row per sequence plus an ``ALL`` row."""
    lines = ["\t".join(TABLE_COLUMNS)]
    body = list(rows)
    if body:
        body.append(aggregate(body))
    for m in body:
        lines.append(
            f"{m.seq_id}\t{m.acc:.4f}\t{m.precision:.4f}\t{m.norm_precision:.4f}"
            f"\t{m.auc:.4f}\t{m.frames}"
        )
    return "\n".join(lines) + "\n"


def format_success_plot(points: Sequence[tuple[float, float]]) -> str:
    lines = ["tau\tsuccess"]
    lines.extend(f"{t:.2f}\t{v:.6f}" for t, v in points)
    return "\n".join(lines) + "\n"
