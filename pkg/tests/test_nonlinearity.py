"""Tests for per-frame and per-video motion nonlinearity."""

import logging
import math

import pytest

from tests.factories import linear_track, reversal_track
from trackadapt.annotations import AnnotationFormat, TrajectoryAnnotation, load_annotation_dir
from trackadapt.config import NonlinConfig
from trackadapt.exceptions import DomainError
from trackadapt.geometry import BoundingBox
from trackadapt.nonlinearity import (
    MotionLabel,
    classify_video,
    frame_labels,
    frame_nonlinearity,
    read_split,
    split_dataset,
    write_split,
)


def _bumped_track(bumps, frames=22, jump=100.0):
    """Constant velocity along x with single-frame jumps in y at ``bumps``.

    Each jump makes the four frames starting at it nonlinear (fewer near
    the end of the sequence).
    """
    boxes = [
        BoundingBox(100.0 + 3.0 * t, 200.0 + (jump if t in bumps else 0.0), 20.0, 20.0)
        for t in range(frames)
    ]
    return TrajectoryAnnotation.from_boxes("bumped", boxes, (640, 480))


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


def test_constant_velocity_frames_are_linear():
    labels = frame_labels(linear_track(frames=10))
    assert labels[:2] == [None, None]
    for lab in labels[2:]:
        assert not lab.nonlinear
        assert lab.accel == pytest.approx(0.0, abs=1e-9)
        assert lab.angle == 0.0
        assert lab.jerk == pytest.approx(0.0, abs=1e-9)


def test_reversal_frames_are_nonlinear():
    lab = frame_nonlinearity(reversal_track(), 5)
    assert lab.nonlinear
    assert lab.accel == pytest.approx(80.0)
    assert lab.jerk == pytest.approx(160.0)
    assert lab.angle == pytest.approx(math.pi)


def test_third_frame_labeled_on_acceleration_only():
    boxes = [BoundingBox(300.0 + dx, 200.0, 30.0, 20.0) for dx in (0.0, 15.0, 0.0, -15.0, -30.0)]
    traj = TrajectoryAnnotation.from_boxes("turn", boxes, (640, 480))
    lab = frame_nonlinearity(traj, 2)
    assert lab.nonlinear
    assert lab.accel == pytest.approx(30.0)
    assert (lab.angle, lab.jerk) == (0.0, 0.0)
    assert frame_nonlinearity(traj, 3).jerk == pytest.approx(30.0)


def test_frame_after_gap_skips_jerk():
    track = linear_track(frames=10)
    boxes = list(track.boxes)
    boxes[3] = None
    lab = frame_nonlinearity(TrajectoryAnnotation.from_boxes("gap", boxes, track.image_size), 6)
    assert lab is not None
    assert (lab.angle, lab.jerk) == (0.0, 0.0)


def test_frame_with_invisible_predecessor_is_unlabeled():
    track = linear_track(frames=10)
    boxes = list(track.boxes)
    boxes[4] = None
    track = TrajectoryAnnotation.from_boxes("gap", boxes, track.image_size)
    labels = frame_labels(track)
    assert [t for t, lab in enumerate(labels) if lab is not None] == [2, 3, 7, 8, 9]


def test_frame_out_of_range_is_unlabeled():
    assert frame_nonlinearity(linear_track(frames=10), 10) is None


def test_bump_marks_four_frames():
    labels = frame_labels(_bumped_track({10}))
    flagged = [t for t, lab in enumerate(labels) if lab is not None and lab.nonlinear]
    assert flagged == [10, 11, 12, 13]


def test_thresholds_are_strict():
    # A single jump of exactly the threshold gives accel == threshold on its first frame.
    labels = frame_labels(_bumped_track({10}, jump=20.0), NonlinConfig(jerk_thresh=100.0))
    assert labels[10].accel == pytest.approx(20.0)
    assert not labels[10].nonlinear
    assert labels[11].nonlinear


# ---------------------------------------------------------------------------
# Videos
# ---------------------------------------------------------------------------


def test_linear_video():
    result = classify_video(linear_track())
    assert result.label == MotionLabel.LINEAR
    assert result.fraction == 0.0
    assert result.labeled_frames == 18


def test_reversal_video_is_nonlinear():
    result = classify_video(reversal_track())
    assert result.label == MotionLabel.NONLINEAR
    assert result.fraction == 1.0


def test_video_fraction_at_threshold_is_linear():
    result = classify_video(_bumped_track({3, 10, 21}))
    assert result.labeled_frames == 20
    assert result.fraction == pytest.approx(0.45)
    assert result.label == MotionLabel.LINEAR


def test_video_fraction_above_threshold_is_nonlinear():
    result = classify_video(_bumped_track({3, 10, 20}))
    assert result.fraction == pytest.approx(0.5)
    assert result.label == MotionLabel.NONLINEAR


def test_short_video_raises():
    with pytest.raises(DomainError, match="3 labeled frames"):
        classify_video(linear_track(frames=5))


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


def test_split_dataset_keeps_order(dataset_dir):
    trajs = load_annotation_dir(dataset_dir, AnnotationFormat.LASOT)
    assert split_dataset(trajs) == (["seq_a", "seq_b"], ["seq_c"])


def test_split_dataset_short_video_counts_as_linear(caplog):
    trajs = [reversal_track("r1"), linear_track("tiny", frames=5), reversal_track("r2")]
    with caplog.at_level(logging.WARNING, logger="trackadapt.nonlinearity"):
        linear, nonlinear = split_dataset(trajs)
    assert linear == ["tiny"]
    assert nonlinear == ["r1", "r2"]
    assert "counted as linear" in caplog.text


def test_split_file_round_trip(tmp_path):
    path = write_split(tmp_path / "splits" / "nonlinear.txt", ["b", "a"])
    assert path.read_text() == "b\na\n"
    assert read_split(path) == ["b", "a"]


def test_read_split_skips_comments_and_blanks(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("# header\nseq_a\n\n  seq_b  # trailing\n")
    assert read_split(path) == ["seq_a", "seq_b"]


def test_write_split_empty(tmp_path):
    assert write_split(tmp_path / "empty.txt", []).read_text() == ""


def test_read_split_missing(tmp_path):
    with pytest.raises(FileNotFoundError, match="Split file not found"):
        read_split(tmp_path / "nope.txt")
