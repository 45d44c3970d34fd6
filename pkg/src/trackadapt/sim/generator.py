"""Deterministic stand-in for a promptable segmenter's decoder.

Each frame yields three candidates in a fixed slot order:

0. the target: its ground-truth box under bounded uniform jitter, with
   ``s_iou`` equal to the jittered box's true IoU plus bounded noise. While
   occluded it is empty with a strongly negative ``s_obj``.
1. and 2. the visible distractors, then a part-of-target fragment, then
   background clutter, whichever come first.

Candidates carry masks at feature-grid resolution; a cell is set when the
candidate box overlaps it. The feature grid holds one appearance vector per
object plus per-frame noise, and a cell takes the vector of the object
overlapping it most (background when none does).

``memory_purity`` below 1 models a contaminated memory bank: the target's
``s_iou`` drops and the others' rise by ``CONTAMINATION * (1 - purity)``.
"""

import dataclasses
import functools
import math

import numpy as np

from trackadapt.exceptions import DomainError
from trackadapt.geometry import BinaryMask, BoundingBox, iou
from trackadapt.selector import Candidate
from trackadapt.sim.scenario import CorruptionKind, Scenario

NUM_CANDIDATES = 3
CONTAMINATION = 0.5

TARGET_OBJ = 3.0
OCCLUDED_OBJ = -4.0
DISTRACTOR_QUALITY = 0.55
DISTRACTOR_OBJ = 1.0
FRAGMENT_QUALITY = 0.35
FRAGMENT_OBJ = 1.5
BACKGROUND_QUALITY = 0.20
BACKGROUND_OBJ = -1.5

# Entropy tags keeping world and per-frame streams apart.
_WORLD_STREAM = 1
_FRAME_STREAM = 0


@dataclasses.dataclass(frozen=True, eq=False)
class FrameObservation:
    frame_index: int
    candidates: tuple[Candidate, ...]
    features: np.ndarray

    def to_json(self) -> dict:
        return {"frame": self.frame_index, "candidates": list(self.candidates)}


@dataclasses.dataclass(frozen=True, eq=False)
class _World:
    """Per-scenario constants: object paths and appearance vectors."""

    target: list[BoundingBox]
    distractors: list[list[BoundingBox]]
    target_vec: np.ndarray
    distractor_vecs: list[np.ndarray]
    background_vec: np.ndarray


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _orthogonal(rng: np.random.Generator, basis: list[np.ndarray], dim: int) -> np.ndarray:
    """Random unit vector orthogonal to the (orthonormal) ``basis``."""
    v = rng.standard_normal(dim)
    for b in basis:
        v = v - np.dot(v, b) * b
    return _unit(v)


@functools.lru_cache(maxsize=32)
def _world(key: str) -> _World:
    sc = Scenario.model_validate_json(key)
    dim = sc.embedding.dim
    rng = np.random.default_rng([sc.seed, _WORLD_STREAM])
    target_vec = _unit(rng.standard_normal(dim))
    background_vec = _orthogonal(rng, [target_vec], dim)
    distractor_vecs = []
    for d in sc.distractors:
        side = _orthogonal(rng, [target_vec, background_vec], dim)
        s = d.similarity
        distractor_vecs.append(s * target_vec + math.sqrt(max(0.0, 1.0 - s * s)) * side)
    return _World(
        target=sc.target_boxes(),
        distractors=[sc.distractor_boxes(d) for d in sc.distractors],
        target_vec=target_vec,
        distractor_vecs=distractor_vecs,
        background_vec=background_vec,
    )


def world_for(sc: Scenario) -> _World:
    return _world(sc.model_dump_json())


def _jitter(box: BoundingBox, amount: float, rng: np.random.Generator) -> BoundingBox:
    a, b, c, d = rng.uniform(-amount, amount, size=4)
    return BoundingBox(
        box.cx + a * box.w, box.cy + b * box.h, box.w * (1.0 + c), box.h * (1.0 + d)
    )


def _cell_edges(sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    g = sc.embedding.grid
    width, height = sc.image_size
    return np.linspace(0.0, width, g + 1), np.linspace(0.0, height, g + 1)


def _overlap_grid(box: BoundingBox | None, sc: Scenario) -> np.ndarray:
    """Per-cell overlap area of ``box`` with the ``grid x grid`` cells."""
    xs, ys = _cell_edges(sc)
    g = sc.embedding.grid
    if box is None:
        return np.zeros((g, g))
    ox = np.clip(np.minimum(xs[1:], box.x2) - np.maximum(xs[:-1], box.x1), 0.0, None)
    oy = np.clip(np.minimum(ys[1:], box.y2) - np.maximum(ys[:-1], box.y1), 0.0, None)
    return np.outer(oy, ox)


def grid_mask(box: BoundingBox | None, sc: Scenario) -> BinaryMask:
    return BinaryMask(_overlap_grid(box, sc) > 0.0)


def _features(
    sc: Scenario,
    world: _World,
    objects: list[tuple[BoundingBox | None, np.ndarray]],
    rng: np.random.Generator,
) -> np.ndarray:
    g, dim = sc.embedding.grid, sc.embedding.dim
    owner = np.full((g, g), -1)
    best = np.zeros((g, g))
    for i, (box, _) in enumerate(objects):
        area = _overlap_grid(box, sc)
        wins = area > best
        owner[wins] = i
        best[wins] = area[wins]
    vecs = np.stack([world.background_vec] + [v for _, v in objects])
    grid = vecs[owner + 1]
    return grid + sc.embedding.noise * rng.standard_normal((g, g, dim))


def _background_box(target: BoundingBox, sc: Scenario, rng: np.random.Generator) -> BoundingBox:
    """Clutter in the image quadrant farthest from the target."""
    width, height = sc.image_size
    quadrants = [(width * fx, height * fy) for fx in (0.25, 0.75) for fy in (0.25, 0.75)]
    qx, qy = max(quadrants, key=lambda q: (q[0] - target.cx) ** 2 + (q[1] - target.cy) ** 2)
    s = rng.uniform(0.5, 1.5)
    return BoundingBox(
        qx + rng.uniform(-0.05, 0.05) * width,
        qy + rng.uniform(-0.05, 0.05) * height,
        target.w * s,
        target.h * s,
    )


def _fragment_box(target: BoundingBox) -> BoundingBox:
    """Top-left quarter of the target, as a part mask would cover."""
    return BoundingBox(target.cx - target.w / 4, target.cy - target.h / 4, target.w / 2, target.h / 2)


def _score(value: float, noise: float, rng: np.random.Generator) -> float:
    return float(np.clip(value + rng.uniform(-noise, noise), 0.0, 1.0))


def generate_frame(sc: Scenario, t: int, memory_purity: float = 1.0) -> FrameObservation:
    """The decoder output of frame ``t``.

    Raises:
        DomainError: If ``t`` is outside the sequence or the purity is
            outside ``[0, 1]``.
    """
    if not 0 <= t < sc.frames:
        raise DomainError(f"Frame {t} outside scenario {sc.name!r} of {sc.frames} frames.")
    if not 0.0 <= memory_purity <= 1.0:
        raise DomainError(f"memory_purity must lie in [0, 1], got {memory_purity}.")
    world = world_for(sc)
    rng = np.random.default_rng([sc.seed, _FRAME_STREAM, t])
    noise = sc.score_noise + sc.magnitude(CorruptionKind.SCORE_NOISE, t)
    jitter = min(0.49, sc.jitter + sc.magnitude(CorruptionKind.JITTER, t))
    drift = CONTAMINATION * (1.0 - memory_purity)
    truth = world.target[t]
    occluded = sc.occluded(t)

    # (box, s_iou, s_obj) per slot
    slots: list[tuple[BoundingBox | None, float, float]] = []
    if occluded:
        target_box = None
        slots.append((None, float(rng.uniform(0.0, 0.1)), OCCLUDED_OBJ + rng.uniform(-0.5, 0.5)))
    else:
        target_box = _jitter(truth, jitter, rng)
        slots.append(
            (target_box, _score(iou(target_box, truth) - drift, noise, rng),
             TARGET_OBJ + rng.uniform(-0.5, 0.5))
        )
    distractor_boxes = []
    for path in world.distractors:
        box = _jitter(path[t], jitter, rng)
        distractor_boxes.append(box)
        slots.append(
            (box, _score(DISTRACTOR_QUALITY + drift, noise, rng),
             DISTRACTOR_OBJ + rng.uniform(-0.3, 0.3))
        )
    if not occluded:
        slots.append(
            (_fragment_box(target_box), _score(FRAGMENT_QUALITY + drift, noise, rng),
             FRAGMENT_OBJ + rng.uniform(-0.3, 0.3))
        )
    while len(slots) < NUM_CANDIDATES:
        slots.append(
            (_background_box(truth, sc, rng), _score(BACKGROUND_QUALITY + drift, noise, rng),
             BACKGROUND_OBJ + rng.uniform(-0.3, 0.3))
        )
    slots = slots[:NUM_CANDIDATES]

    bias = sc.magnitude(CorruptionKind.SWAP_BIAS, t)
    if bias > 0:
        box, _, s_obj = slots[1]
        slots[1] = (box, float(np.clip(slots[0][1] + bias, 0.0, 1.0)), s_obj)

    objects = [(target_box, world.target_vec)]
    objects += list(zip(distractor_boxes, world.distractor_vecs))
    features = _features(sc, world, objects, rng)
    candidates = tuple(
        Candidate(box=box, s_iou=s_iou, s_obj=float(s_obj), mask=grid_mask(box, sc))
        for box, s_iou, s_obj in slots
    )
    return FrameObservation(frame_index=t, candidates=candidates, features=features)


def observation_stream(sc: Scenario) -> list[FrameObservation]:
    """Every frame at full memory purity."""
    return [generate_frame(sc, t) for t in range(sc.frames)]
