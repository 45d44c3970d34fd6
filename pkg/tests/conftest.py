"""Shared fixtures for trackadapt tests."""

import pytest

from tests.factories import linear_scenario, linear_track, reversal_track
from trackadapt.annotations import AnnotationFormat, write_annotation
from trackadapt.sim.scenario import Corruption, CorruptionKind, DistractorSpec


@pytest.fixture
def dataset_dir(tmp_path):
    """Two linear and one nonlinear sequence in LaSOT layout."""
    root = tmp_path / "dataset"
    write_annotation(linear_track("seq_a"), root, AnnotationFormat.LASOT)
    write_annotation(
        linear_track("seq_b", start=(400.0, 60.0), velocity=(-2.0, 2.5)), root, AnnotationFormat.LASOT
    )
    write_annotation(reversal_track("seq_c"), root, AnnotationFormat.LASOT)
    return root


@pytest.fixture
def occlusion_scenario():
    return linear_scenario(
        "occluded",
        frames=50,
        corruptions=[Corruption(kind=CorruptionKind.OCCLUSION, start=30, stop=40)],
    )


@pytest.fixture
def distractor_scenario():
    return linear_scenario("distracted", distractors=[DistractorSpec(offset=(120.0, 0.0))])
