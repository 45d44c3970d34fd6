"""State vectors, box normalization and the FIFO history bank."""

import collections
import dataclasses
from collections.abc import Sequence

import numpy as np

from trackadapt.exceptions import DomainError, HistoryOrderError
from trackadapt.geometry import BoundingBox, is_present

STATE_DIM = 8


@dataclasses.dataclass(frozen=True, slots=True)
class StateVector:
    """``[x, y, w, h, dx, dy, dw, dh]``: a box and its per-frame derivatives."""

    x: float
    y: float
    w: float
    h: float
    dx: float = 0.0
    dy: float = 0.0
    dw: float = 0.0
    dh: float = 0.0

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "StateVector":
        arr = np.asarray(values, dtype=np.float64).reshape(-1)
        if arr.size != STATE_DIM:
            raise DomainError(f"A state vector has {STATE_DIM} entries, got {arr.size}.")
        if not np.isfinite(arr).all():
            raise DomainError("State vector entries must be finite.")
        return cls(*(float(v) for v in arr))

    @classmethod
    def from_box(cls, box: BoundingBox) -> "StateVector":
        return cls(box.cx, box.cy, box.w, box.h)

    def as_array(self) -> np.ndarray:
        return np.array(dataclasses.astuple(self), dtype=np.float64)

    @property
    def box(self) -> BoundingBox:
        """Box part with the size projected to be non-negative."""
        return BoundingBox(self.x, self.y, max(self.w, 0.0), max(self.h, 0.0))


def normalize_box(box: BoundingBox, image_size: tuple[int, int]) -> np.ndarray:
    """``(cx, cy, w, h)`` divided by ``(W, H, W, H)``."""
    width, height = image_size
    return np.array(
        [box.cx / width, box.cy / height, box.w / width, box.h / height],
        dtype=np.float64,
    )


def denormalize_box(values: np.ndarray, image_size: tuple[int, int]) -> BoundingBox:
    """Inverse of :func:`normalize_box`; negative sizes are clamped to 0."""
    width, height = image_size
    cx, cy, w, h = (float(v) for v in values)
    return BoundingBox(cx * width, cy * height, max(w, 0.0) * width, max(h, 0.0) * height)


def state_features(
    frames: Sequence[int], boxes: Sequence[BoundingBox], image_size: tuple[int, int]
) -> np.ndarray:
    """Normalized ``(n, 8)`` state rows for a run of observed boxes.

    Velocities are box differences divided by the frame gap. The oldest
    row has zero velocity.
    """
    if len(frames) != len(boxes):
        raise DomainError("frames and boxes must have the same length.")
    pos = np.stack([normalize_box(b, image_size) for b in boxes]) if boxes else np.zeros((0, 4))
    vel = np.zeros_like(pos)
    if len(boxes) > 1:
        gaps = np.diff(np.asarray(frames, dtype=np.float64))[:, None]
        vel[1:] = np.diff(pos, axis=0) / gaps
    return np.concatenate([pos, vel], axis=1)


class HistoryBank:
    """The last ``capacity`` observed boxes of one sequence, newest last.

    Only frames with a present box are stored; pushing an absent frame leaves
    the bank unchanged, and ordering is checked against the last stored frame.
    """

    def __init__(self, capacity: int, image_size: tuple[int, int]):
        if capacity < 1:
            raise DomainError(f"History capacity must be >= 1, got {capacity}.")
        if image_size[0] <= 0 or image_size[1] <= 0:
            raise DomainError(f"Image size must be positive, got {image_size}.")
        self.capacity = capacity
        self.image_size = (int(image_size[0]), int(image_size[1]))
        self._frames: collections.deque[int] = collections.deque(maxlen=capacity)
        self._boxes: collections.deque[BoundingBox] = collections.deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._boxes)

    def push(self, frame_index: int, box: BoundingBox | None) -> "HistoryBank":
        """Append ``box`` observed at ``frame_index``.

        Raises:
            HistoryOrderError: If ``box`` is present and ``frame_index`` is not
                past the last stored frame.
        """
        if not is_present(box):
            return self
        last = self.last_frame
        if last is not None and frame_index <= last:
            raise HistoryOrderError(
                f"Frame {frame_index} pushed after frame {last}; "
                "history indices must strictly increase."
            )
        self._frames.append(frame_index)
        self._boxes.append(box)
        return self

    @property
    def frames(self) -> list[int]:
        return list(self._frames)

    @property
    def boxes(self) -> list[BoundingBox]:
        return list(self._boxes)

    @property
    def last_box(self) -> BoundingBox | None:
        return self._boxes[-1] if self._boxes else None

    @property
    def last_frame(self) -> int | None:
        return self._frames[-1] if self._frames else None

    def features(self, length: int | None = None) -> np.ndarray:
        """State rows for the stored boxes, left-padded to ``length``.

        Padding repeats the oldest row, so padded rows carry zero velocity.
        """
        rows = state_features(self.frames, self.boxes, self.image_size)
        if length is not None and 0 < len(rows) < length:
            pad = np.repeat(rows[:1], length - len(rows), axis=0)
            rows = np.concatenate([pad, rows], axis=0)
        return rows


def push_history(bank: HistoryBank, frame_index: int, box: BoundingBox | None) -> HistoryBank:
    return bank.push(frame_index, box)
