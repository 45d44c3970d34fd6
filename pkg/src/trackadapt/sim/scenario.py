"""Declarative scenario files for the segmenter simulator.

A scenario is one YAML mapping::

    name: distractor_swap
    frames: 80
    seed: 3
    motion: {kind: linear, start: [100, 160], velocity: [4, 2]}
    distractors:
      - offset: [120, 0]
    corruptions:
      - {kind: swap_bias, start: 30, stop: 38, magnitude: 0.1}

Corruption ranges cover frames ``start`` to ``stop - 1``. During an
``occlusion`` the target is invisible in the ground truth as well.
"""

import enum
import pathlib

from pydantic import BaseModel, ConfigDict, Field, model_validator

from trackadapt.annotations import TrajectoryAnnotation
from trackadapt.geometry import BoundingBox
from trackadapt.helpers import dump_yaml_model, load_yaml_model
from trackadapt.sim.trajectories import MotionSpec, trajectory_boxes


class CorruptionKind(str, enum.Enum):
    OCCLUSION = "occlusion"
    SCORE_NOISE = "score_noise"
    JITTER = "jitter"
    SWAP_BIAS = "swap_bias"


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Corruption(_Block):
    kind: CorruptionKind
    start: int = Field(ge=0)
    stop: int = Field(ge=1)
    magnitude: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _check(self):
        if self.stop <= self.start:
            raise ValueError(f"Corruption range [{self.start}, {self.stop}) is empty.")
        return self

    def active(self, t: int) -> bool:
        return self.start <= t < self.stop


class DistractorSpec(_Block):
    """A second object moving parallel to the target, or on its own path.

    ``similarity`` is the cosine between its appearance vector and the
    target's.
    """

    offset: tuple[float, float] = (120.0, 0.0)
    motion: MotionSpec | None = None
    size_scale: float = Field(1.0, gt=0.0)
    similarity: float = Field(0.0, ge=-1.0, le=1.0)


class EmbeddingSpec(_Block):
    dim: int = Field(32, ge=2)
    grid: int = Field(16, ge=1)
    noise: float = Field(0.05, ge=0.0)


class Scenario(_Block):
    name: str
    frames: int = Field(80, ge=2)
    image_size: tuple[int, int] = (640, 480)
    seed: int = 0
    motion: MotionSpec = MotionSpec()
    distractors: list[DistractorSpec] = []
    corruptions: list[Corruption] = []
    embedding: EmbeddingSpec = EmbeddingSpec()
    score_noise: float = Field(0.02, ge=0.0)
    jitter: float = Field(0.02, ge=0.0, lt=0.5)

    @model_validator(mode="after")
    def _check(self):
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise ValueError(f"image_size must be positive, got {self.image_size}.")
        for c in self.corruptions:
            if c.stop > self.frames:
                raise ValueError(
                    f"{c.kind.value} range [{c.start}, {c.stop}) exceeds {self.frames} frames."
                )
            if c.kind == CorruptionKind.OCCLUSION and c.start == 0:
                raise ValueError("The prompted frame 0 cannot be occluded.")
        return self

    def magnitude(self, kind: CorruptionKind, t: int) -> float:
        """Summed magnitude of the ``kind`` corruptions active at frame ``t``."""
        return sum(c.magnitude for c in self.corruptions if c.kind == kind and c.active(t))

    def occluded(self, t: int) -> bool:
        return any(
            c.kind == CorruptionKind.OCCLUSION and c.active(t) for c in self.corruptions
        )

    def target_boxes(self) -> list[BoundingBox]:
        """Target path ignoring occlusion."""
        return trajectory_boxes(self.motion, self.frames)

    def distractor_boxes(self, d: DistractorSpec) -> list[BoundingBox]:
        if d.motion is not None:
            return trajectory_boxes(d.motion, self.frames)
        dx, dy = d.offset
        return [
            BoundingBox(b.cx + dx, b.cy + dy, b.w * d.size_scale, b.h * d.size_scale)
            for b in self.target_boxes()
        ]

    def ground_truth(self) -> TrajectoryAnnotation:
        boxes = [None if self.occluded(t) else b for t, b in enumerate(self.target_boxes())]
        return TrajectoryAnnotation.from_boxes(self.name, boxes, self.image_size)


def load_scenario(path: str | pathlib.Path) -> Scenario:
    return load_yaml_model(path, Scenario)


def load_scenarios(path: str | pathlib.Path) -> list[Scenario]:
    """One scenario file, or every ``*.yaml``/``*.yml`` in a directory by name."""
    path = pathlib.Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix in (".yaml", ".yml"))
        return [load_scenario(p) for p in files]
    if not path.is_file():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    return [load_scenario(path)]


def dump_scenario(sc: Scenario) -> str:
    return dump_yaml_model(sc)
