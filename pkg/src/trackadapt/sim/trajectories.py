"""Scripted target motions and synthetic trajectory corpora.

A :class:`MotionSpec` describes a center path in closed form (linear,
sinusoid, ramp) or as accumulated per-frame steps (reversal, turn, zigzag).
Box size is constant unless ``growth`` is set.
"""

import enum
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from trackadapt.annotations import TrajectoryAnnotation
from trackadapt.exceptions import DomainError
from trackadapt.geometry import BoundingBox


class MotionKind(str, enum.Enum):
    LINEAR = "linear"
    SINUSOID = "sinusoid"
    REVERSAL = "reversal"
    RAMP = "ramp"
    TURN = "turn"
    ZIGZAG = "zigzag"


class MotionSpec(BaseModel):
    """Center path of one object, in pixels and frames.

    ``period`` is the sinusoid period, or the number of frames between
    direction flips for ``reversal`` and ``zigzag``. ``lateral`` is the
    sideways speed of a zigzag; ``turn_rate`` the heading change per frame
    (radians) of a turn.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: MotionKind = MotionKind.LINEAR
    start: tuple[float, float] = (320.0, 240.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    size: tuple[float, float] = (60.0, 40.0)
    amplitude: tuple[float, float] = (0.0, 0.0)
    period: float = Field(20.0, gt=0.0)
    phase: float = 0.0
    accel: tuple[float, float] = (0.0, 0.0)
    turn_rate: float = 0.0
    lateral: float = 0.0
    growth: float = Field(0.0, gt=-1.0)

    @model_validator(mode="after")
    def _check(self):
        if self.size[0] <= 0 or self.size[1] <= 0:
            raise ValueError(f"size must be positive, got {self.size}.")
        return self


def _flip_signs(steps: int, period: float) -> np.ndarray:
    """+1/-1 per step, flipping every ``period`` steps."""
    i = np.arange(steps, dtype=np.float64)
    return np.where((i // period) % 2 == 0, 1.0, -1.0)


def _accumulate(start: np.ndarray, steps: np.ndarray) -> np.ndarray:
    return start + np.concatenate([np.zeros((1, 2)), np.cumsum(steps, axis=0)], axis=0)


def centers(spec: MotionSpec, frames: int) -> np.ndarray:
    """``(frames, 2)`` array of box centers."""
    if frames < 1:
        raise DomainError(f"frames must be >= 1, got {frames}.")
    t = np.arange(frames, dtype=np.float64)[:, None]
    start = np.asarray(spec.start, dtype=np.float64)
    v = np.asarray(spec.velocity, dtype=np.float64)
    kind = spec.kind
    if kind == MotionKind.LINEAR:
        return start + t * v
    if kind == MotionKind.SINUSOID:
        ang = 2.0 * math.pi * t[:, 0] / spec.period
        offset = np.stack(
            [spec.amplitude[0] * np.sin(ang), spec.amplitude[1] * np.sin(ang + spec.phase)],
            axis=1,
        )
        return start + t * v + offset
    if kind == MotionKind.RAMP:
        return start + t * v + 0.5 * t**2 * np.asarray(spec.accel, dtype=np.float64)
    n_steps = frames - 1
    if kind == MotionKind.REVERSAL:
        steps = _flip_signs(n_steps, spec.period)[:, None] * v
        return _accumulate(start, steps)
    if kind == MotionKind.TURN:
        speed = float(np.hypot(*v))
        heading = math.atan2(v[1], v[0]) + spec.turn_rate * np.arange(n_steps)
        steps = speed * np.stack([np.cos(heading), np.sin(heading)], axis=1)
        return _accumulate(start, steps)
    # zigzag
    speed = float(np.hypot(*v))
    normal = np.array([-v[1], v[0]]) / speed if speed > 0 else np.array([0.0, 1.0])
    side = _flip_signs(n_steps, spec.period)[:, None] * spec.lateral * normal
    return _accumulate(start, v + side)


def trajectory_boxes(spec: MotionSpec, frames: int) -> list[BoundingBox]:
    scale = (1.0 + spec.growth) ** np.arange(frames)
    return [
        BoundingBox(float(cx), float(cy), spec.size[0] * float(s), spec.size[1] * float(s))
        for (cx, cy), s in zip(centers(spec, frames), scale)
    ]


def trajectory(
    seq_id: str,
    spec: MotionSpec,
    frames: int,
    image_size: tuple[int, int] | None = None,
) -> TrajectoryAnnotation:
    return TrajectoryAnnotation.from_boxes(seq_id, trajectory_boxes(spec, frames), image_size)


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------


def _random_spec(kind: MotionKind, rng: np.random.Generator, frames: int) -> MotionSpec:
    heading = rng.uniform(0.0, 2.0 * math.pi)
    direction = np.array([math.cos(heading), math.sin(heading)])
    normal = np.array([-direction[1], direction[0]])
    cruise = rng.uniform(0.5, 1.0) * 180.0 / frames
    base = {
        "kind": kind,
        "start": (rng.uniform(200.0, 440.0), rng.uniform(160.0, 320.0)),
        "size": (rng.uniform(30.0, 80.0), rng.uniform(30.0, 80.0)),
    }
    if kind == MotionKind.LINEAR:
        extra = {"velocity": tuple(cruise * direction)}
    elif kind == MotionKind.SINUSOID:
        amp = rng.uniform(30.0, 60.0)
        extra = {
            "velocity": tuple(0.5 * cruise * direction),
            "amplitude": tuple(amp * normal),
            "period": rng.uniform(8.0, 16.0),
        }
    elif kind == MotionKind.REVERSAL:
        extra = {
            "velocity": tuple(rng.uniform(6.0, 12.0) * direction),
            "period": float(rng.integers(4, 11)),
        }
    elif kind == MotionKind.RAMP:
        extra = {
            "velocity": tuple(direction),
            "accel": tuple(rng.uniform(0.05, 0.15) * direction),
        }
    elif kind == MotionKind.TURN:
        extra = {
            "velocity": tuple(rng.uniform(4.0, 8.0) * direction),
            "turn_rate": float(rng.uniform(0.05, 0.15) * rng.choice([-1.0, 1.0])),
        }
    else:
        extra = {
            "velocity": tuple(rng.uniform(2.0, 4.0) * direction),
            "lateral": rng.uniform(5.0, 10.0),
            "period": float(rng.integers(3, 9)),
        }
    return MotionSpec(**base, **extra)


def synthetic_corpus(
    kind: MotionKind | str, count: int, frames: int = 60, seed: int = 0
) -> list[TrajectoryAnnotation]:
    """``count`` random trajectories of one motion kind, ids ``<kind>_000`` on.

    The same ``(kind, count, frames, seed)`` always gives the same corpus,
    and a larger ``count`` extends a smaller one.
    """
    kind = MotionKind(kind)
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}.")
    if frames < 2:
        raise DomainError(f"frames must be >= 2, got {frames}.")
    rng = np.random.default_rng([seed, list(MotionKind).index(kind)])
    return [
        trajectory(f"{kind.value}_{i:03d}", _random_spec(kind, rng, frames), frames)
        for i in range(count)
    ]
