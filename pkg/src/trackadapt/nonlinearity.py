"""Motion nonlinearity of annotated trajectories.

A frame is labeled from the box centers of itself and its two
predecessors, which must be visible. With ``a_t`` the second difference of
the centers, the indicators are ``|a_t|``, the change in direction of ``a``
between consecutive frames (in ``[0, pi]``, 0 when either acceleration is
below 1e-6) and the jerk ``|a_t - a_{t-1}|``. Angle and jerk need
``a_{t-1}`` and so a visible third predecessor; without it both are 0. A
frame is nonlinear when any indicator is strictly above its threshold; a
video is nonlinear when more than ``video_frac_thresh`` of its labeled
frames are.
"""

import dataclasses
import enum
import logging
import math
import pathlib
from collections.abc import Sequence

import numpy as np

from trackadapt.annotations import TrajectoryAnnotation
from trackadapt.config import NonlinConfig
from trackadapt.exceptions import DomainError
from trackadapt.helpers import write_text_atomic

logger = logging.getLogger(__name__)

MIN_LABELED_FRAMES = 4
_TINY = 1e-6


class MotionLabel(str, enum.Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


@dataclasses.dataclass(frozen=True)
class FrameNonlinearity:
    nonlinear: bool
    accel: float
    angle: float
    jerk: float


@dataclasses.dataclass(frozen=True)
class VideoNonlinearity:
    seq_id: str
    label: MotionLabel
    fraction: float
    labeled_frames: int


def _center(traj: TrajectoryAnnotation, t: int) -> np.ndarray:
    b = traj.boxes[t]
    return np.array([b.cx, b.cy])


def frame_nonlinearity(
    traj: TrajectoryAnnotation, t: int, cfg: NonlinConfig | None = None
) -> FrameNonlinearity | None:
    """Indicators at frame ``t``; ``None`` when the frame is unlabeled."""
    cfg = cfg or NonlinConfig()
    if t < 2 or t >= traj.num_frames:
        return None
    if any(traj.boxes[i] is None for i in range(t - 2, t + 1)):
        return None
    c = [_center(traj, i) for i in range(t - 2, t + 1)]
    a_t = c[2] - 2 * c[1] + c[0]
    accel = float(np.linalg.norm(a_t))
    angle = jerk = 0.0
    if t >= 3 and traj.boxes[t - 3] is not None:
        a_prev = c[1] - 2 * c[0] + _center(traj, t - 3)
        jerk = float(np.linalg.norm(a_t - a_prev))
        if accel >= _TINY and float(np.linalg.norm(a_prev)) >= _TINY:
            diff = math.atan2(a_t[1], a_t[0]) - math.atan2(a_prev[1], a_prev[0])
            angle = abs(math.atan2(math.sin(diff), math.cos(diff)))
    nonlinear = (
        accel > cfg.accel_mag_thresh
        or angle > cfg.angle_dev_thresh
        or jerk > cfg.jerk_thresh
    )
    return FrameNonlinearity(nonlinear, accel, angle, jerk)


def frame_labels(
    traj: TrajectoryAnnotation, cfg: NonlinConfig | None = None
) -> list[FrameNonlinearity | None]:
    return [frame_nonlinearity(traj, t, cfg) for t in range(traj.num_frames)]


def classify_video(
    traj: TrajectoryAnnotation, cfg: NonlinConfig | None = None
) -> VideoNonlinearity:
    """Linear/Nonlinear label and the nonlinear fraction of labeled frames.

    Raises:
        DomainError: If fewer than four frames can be labeled.
    """
    cfg = cfg or NonlinConfig()
    labels = [lab for lab in frame_labels(traj, cfg) if lab is not None]
    if len(labels) < MIN_LABELED_FRAMES:
        raise DomainError(
            f"Sequence {traj.seq_id!r} has {len(labels)} labeled frames; "
            f"at least {MIN_LABELED_FRAMES} are needed."
        )
    fraction = sum(lab.nonlinear for lab in labels) / len(labels)
    label = MotionLabel.NONLINEAR if fraction > cfg.video_frac_thresh else MotionLabel.LINEAR
    return VideoNonlinearity(traj.seq_id, label, fraction, len(labels))


def split_dataset(
    trajs: Sequence[TrajectoryAnnotation], cfg: NonlinConfig | None = None
) -> tuple[list[str], list[str]]:
    """Partition sequence ids into (linear, nonlinear), keeping input order.

    Sequences too short to classify carry no evidence of nonlinear motion
    and go to the linear subset with a warning.
    """
    linear, nonlinear = [], []
    for traj in trajs:
        try:
            result = classify_video(traj, cfg)
        except DomainError as e:
            logger.warning("%s; counted as linear.", e)
            linear.append(traj.seq_id)
            continue
        (nonlinear if result.label == MotionLabel.NONLINEAR else linear).append(traj.seq_id)
    return linear, nonlinear


def write_split(path: str | pathlib.Path, ids: Sequence[str]) -> pathlib.Path:
    return write_text_atomic(path, "".join(f"{i}\n" for i in ids))


def read_split(path: str | pathlib.Path) -> list[str]:
    """Sequence ids, one per line; blank lines and ``#`` comments are skipped."""
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Split file not found: {path}")
    ids = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            ids.append(line)
    return ids
