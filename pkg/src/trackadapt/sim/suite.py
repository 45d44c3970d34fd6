"""The standard scenario suite.

Thirteen 80-frame scenarios on a 640x480 canvas: eight clean motion
patterns, two with a parallel distractor (one of them with a stretch where
the distractor outscores the target), two occlusions and one with heavy
score noise.
"""

import math
import pathlib

from trackadapt.helpers import write_text_atomic
from trackadapt.sim.scenario import Corruption, CorruptionKind, DistractorSpec, Scenario, dump_scenario
from trackadapt.sim.trajectories import MotionKind, MotionSpec

STANDARD_FRAMES = 80

CLEAN_SCENARIOS = (
    "linear_slow",
    "linear_fast",
    "sinusoid_x",
    "sinusoid_xy",
    "reversal",
    "speed_ramp",
    "turn",
    "zigzag",
    "distractor_parallel",
)


def _linear(start, velocity) -> MotionSpec:
    return MotionSpec(kind=MotionKind.LINEAR, start=start, velocity=velocity)


def standard_suite(seed: int = 0) -> list[Scenario]:
    """The suite, each scenario seeded from ``seed`` and its position."""
    occlusion = Corruption(kind=CorruptionKind.OCCLUSION, start=30, stop=40)
    specs = [
        ("linear_slow", _linear((100.0, 240.0), (2.0, 0.0)), {}),
        ("linear_fast", _linear((60.0, 100.0), (6.0, 4.0)), {}),
        (
            "sinusoid_x",
            MotionSpec(
                kind=MotionKind.SINUSOID, start=(320.0, 60.0), velocity=(0.0, 4.5),
                amplitude=(120.0, 0.0), period=24.0,
            ),
            {},
        ),
        (
            "sinusoid_xy",
            MotionSpec(
                kind=MotionKind.SINUSOID, start=(320.0, 240.0), amplitude=(150.0, 100.0),
                period=40.0, phase=math.pi / 2,
            ),
            {},
        ),
        (
            "reversal",
            MotionSpec(kind=MotionKind.REVERSAL, start=(280.0, 240.0), velocity=(8.0, 0.0), period=10.0),
            {},
        ),
        (
            "speed_ramp",
            MotionSpec(
                kind=MotionKind.RAMP, start=(80.0, 200.0), velocity=(1.0, 0.5), accel=(0.12, 0.03)
            ),
            {},
        ),
        (
            "turn",
            MotionSpec(kind=MotionKind.TURN, start=(200.0, 160.0), velocity=(5.0, 0.0), turn_rate=0.06),
            {},
        ),
        (
            "zigzag",
            MotionSpec(
                kind=MotionKind.ZIGZAG, start=(80.0, 240.0), velocity=(5.0, 0.0), lateral=6.0, period=6.0
            ),
            {},
        ),
        (
            "distractor_parallel",
            _linear((100.0, 160.0), (4.0, 2.0)),
            {"distractors": [DistractorSpec(offset=(120.0, 0.0))]},
        ),
        (
            "distractor_swap",
            _linear((100.0, 160.0), (4.0, 2.0)),
            {
                "distractors": [DistractorSpec(offset=(120.0, 0.0))],
                "corruptions": [
                    Corruption(kind=CorruptionKind.SWAP_BIAS, start=30, stop=38, magnitude=0.1)
                ],
            },
        ),
        (
            "occlusion_reappear",
            _linear((100.0, 240.0), (4.0, 0.0)),
            {"corruptions": [occlusion]},
        ),
        (
            "occlusion_with_distractor",
            _linear((100.0, 200.0), (4.0, 0.0)),
            {"distractors": [DistractorSpec(offset=(0.0, 100.0))], "corruptions": [occlusion]},
        ),
        (
            "noisy_scores",
            MotionSpec(
                kind=MotionKind.SINUSOID, start=(120.0, 240.0), velocity=(4.0, 0.0),
                amplitude=(0.0, 60.0), period=20.0,
            ),
            {
                "distractors": [DistractorSpec(offset=(0.0, -120.0))],
                "corruptions": [
                    Corruption(kind=CorruptionKind.SCORE_NOISE, start=1, stop=80, magnitude=0.15),
                    Corruption(kind=CorruptionKind.JITTER, start=50, stop=60, magnitude=0.02),
                ],
            },
        ),
    ]
    return [
        Scenario(name=name, frames=STANDARD_FRAMES, seed=seed * 100 + i, motion=motion, **extra)
        for i, (name, motion, extra) in enumerate(specs)
    ]


def write_suite(out_dir: str | pathlib.Path, seed: int = 0) -> list[pathlib.Path]:
    """One ``<name>.yaml`` per standard scenario; returns the written paths."""
    out_dir = pathlib.Path(out_dir)
    return [
        write_text_atomic(out_dir / f"{sc.name}.yaml", dump_scenario(sc))
        for sc in standard_suite(seed)
    ]
