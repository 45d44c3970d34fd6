"""Tests for annotation and prediction file parsing."""

import json

import pytest

from tests.factories import linear_track
from trackadapt.annotations import (
    AnnotationFormat,
    TrajectoryAnnotation,
    discover_sequences,
    format_predictions,
    load_annotation_dir,
    parse_annotations,
    parse_predictions,
    tight_image_size,
    write_annotation,
    write_predictions,
)
from trackadapt.exceptions import AnnotationParseError, DomainError
from trackadapt.geometry import BoundingBox


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# LaSOT layout
# ---------------------------------------------------------------------------


def test_lasot_line_is_top_left_xywh(tmp_path):
    _write(tmp_path / "seq" / "groundtruth.txt", "10,20,30,40\n")
    traj = parse_annotations(tmp_path / "seq", AnnotationFormat.LASOT)
    assert traj.seq_id == "seq"
    assert traj.boxes == (BoundingBox(25, 40, 30, 40),)


def test_lasot_accepts_whitespace_separators_and_file_path(tmp_path):
    gt = _write(tmp_path / "seq" / "groundtruth.txt", "10 20 30 40\n12\t20\t30\t40\n\n")
    traj = parse_annotations(gt, "lasot")
    assert traj.num_frames == 2
    assert traj.boxes[1].cx == pytest.approx(27.0)


def test_lasot_flags_hide_frames(tmp_path):
    seq = tmp_path / "seq"
    _write(seq / "groundtruth.txt", "0,0,4,4\n1,0,4,4\n2,0,4,4\n")
    _write(seq / "full_occlusion.txt", "0,1,0\n")
    _write(seq / "out_of_view.txt", "0,0,1\n")
    traj = parse_annotations(seq, AnnotationFormat.LASOT)
    assert traj.visible == [True, False, False]


def test_lasot_zero_or_nan_box_is_invisible(tmp_path):
    _write(tmp_path / "seq" / "groundtruth.txt", "0,0,4,4\n0,0,0,0\nnan,nan,nan,nan\n")
    traj = parse_annotations(tmp_path / "seq", AnnotationFormat.LASOT)
    assert traj.visible == [True, False, False]


def test_lasot_bad_line_reports_line_number(tmp_path):
    _write(tmp_path / "seq" / "groundtruth.txt", "0,0,4,4\n1,2,3\n")
    with pytest.raises(AnnotationParseError, match=r"groundtruth.txt:2: expected 4 values") as exc:
        parse_annotations(tmp_path / "seq", AnnotationFormat.LASOT)
    assert exc.value.line == 2


def test_lasot_non_numeric_value(tmp_path):
    _write(tmp_path / "seq" / "groundtruth.txt", "0,0,4,x\n")
    with pytest.raises(AnnotationParseError, match="non-numeric"):
        parse_annotations(tmp_path / "seq", AnnotationFormat.LASOT)


def test_lasot_negative_size(tmp_path):
    _write(tmp_path / "seq" / "groundtruth.txt", "0,0,-4,4\n")
    with pytest.raises(AnnotationParseError, match="negative box size"):
        parse_annotations(tmp_path / "seq", AnnotationFormat.LASOT)


def test_lasot_blank_line_inside_file(tmp_path):
    _write(tmp_path / "seq" / "groundtruth.txt", "0,0,4,4\n\n0,0,4,4\n")
    with pytest.raises(AnnotationParseError, match="blank line"):
        parse_annotations(tmp_path / "seq", AnnotationFormat.LASOT)


def test_lasot_flag_count_mismatch(tmp_path):
    seq = tmp_path / "seq"
    _write(seq / "groundtruth.txt", "0,0,4,4\n1,0,4,4\n")
    _write(seq / "full_occlusion.txt", "0\n")
    with pytest.raises(AnnotationParseError, match="1 flags for 2 boxes"):
        parse_annotations(seq, AnnotationFormat.LASOT)


def test_lasot_invalid_flag_value(tmp_path):
    seq = tmp_path / "seq"
    _write(seq / "groundtruth.txt", "0,0,4,4\n")
    _write(seq / "out_of_view.txt", "2\n")
    with pytest.raises(AnnotationParseError, match="flag must be 0 or 1"):
        parse_annotations(seq, AnnotationFormat.LASOT)


def test_lasot_all_invisible_is_an_error(tmp_path):
    _write(tmp_path / "seq" / "groundtruth.txt", "0,0,0,0\n")
    with pytest.raises(AnnotationParseError, match="no visible frame"):
        parse_annotations(tmp_path / "seq", AnnotationFormat.LASOT)


def test_missing_annotation_file(tmp_path):
    (tmp_path / "seq").mkdir()
    with pytest.raises(FileNotFoundError, match="No lasot annotation"):
        parse_annotations(tmp_path / "seq", AnnotationFormat.LASOT)


# ---------------------------------------------------------------------------
# Anti-UAV layout
# ---------------------------------------------------------------------------


def test_antiuav_exist_flags(tmp_path):
    label = {"exist": [1, 0, 1], "gt_rect": [[10, 20, 30, 40], [], [12, 20, 30, 40]]}
    _write(tmp_path / "uav" / "IR_label.json", json.dumps(label))
    traj = parse_annotations(tmp_path / "uav", AnnotationFormat.ANTIUAV)
    assert traj.visible == [True, False, True]
    assert traj.boxes[0] == BoundingBox(25, 40, 30, 40)


def test_antiuav_length_mismatch(tmp_path):
    _write(tmp_path / "uav" / "IR_label.json", json.dumps({"exist": [1, 1], "gt_rect": [[0, 0, 4, 4]]}))
    with pytest.raises(AnnotationParseError, match="2 exist flags for 1 gt_rect"):
        parse_annotations(tmp_path / "uav", AnnotationFormat.ANTIUAV)


def test_antiuav_missing_keys(tmp_path):
    _write(tmp_path / "uav" / "IR_label.json", json.dumps({"exist": [1]}))
    with pytest.raises(AnnotationParseError, match="'exist' and 'gt_rect'"):
        parse_annotations(tmp_path / "uav", AnnotationFormat.ANTIUAV)


def test_antiuav_invalid_json_reports_line(tmp_path):
    _write(tmp_path / "uav" / "IR_label.json", '{\n"exist": [1,\n')
    with pytest.raises(AnnotationParseError, match="invalid JSON") as exc:
        parse_annotations(tmp_path / "uav", AnnotationFormat.ANTIUAV)
    assert exc.value.line is not None


def test_antiuav_bad_rect(tmp_path):
    _write(tmp_path / "uav" / "IR_label.json", json.dumps({"exist": [1], "gt_rect": [[1, 2, 3]]}))
    with pytest.raises(AnnotationParseError, match=r"gt_rect\[0\]: expected 4 values"):
        parse_annotations(tmp_path / "uav", AnnotationFormat.ANTIUAV)


# ---------------------------------------------------------------------------
# Directories and writing
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("fmt", list(AnnotationFormat))
def test_write_then_parse_preserves_visibility(tmp_path, fmt):
    traj = linear_track("seq", frames=6)
    boxes = list(traj.boxes)
    boxes[2] = None
    traj = TrajectoryAnnotation.from_boxes("seq", boxes, traj.image_size)
    write_annotation(traj, tmp_path, fmt)
    back = parse_annotations(tmp_path / "seq", fmt)
    assert back.visible == traj.visible
    for a, b in zip(back.boxes, traj.boxes):
        if b is not None:
            assert a.as_tuple() == pytest.approx(b.as_tuple())


def test_discover_sequences_sorted_by_id(dataset_dir):
    assert [d.name for d in discover_sequences(dataset_dir, AnnotationFormat.LASOT)] == [
        "seq_a",
        "seq_b",
        "seq_c",
    ]


def test_discover_missing_root(tmp_path):
    with pytest.raises(FileNotFoundError, match="Annotation directory not found"):
        discover_sequences(tmp_path / "nope", AnnotationFormat.LASOT)


def test_load_annotation_dir(dataset_dir):
    trajs = load_annotation_dir(dataset_dir, AnnotationFormat.LASOT)
    assert [t.seq_id for t in trajs] == ["seq_a", "seq_b", "seq_c"]
    assert all(t.num_frames == 20 for t in trajs)


def test_trajectory_translate_keeps_invisible():
    traj = TrajectoryAnnotation.from_boxes("t", [BoundingBox(10, 10, 4, 4), None], (100, 100))
    moved = traj.translate(5, -2)
    assert moved.boxes == (BoundingBox(15, 8, 4, 4), None)


def test_trajectory_rejects_bad_image_size():
    with pytest.raises(DomainError, match="Image size"):
        TrajectoryAnnotation("t", (BoundingBox(10, 10, 4, 4),), (0, 10))


def test_tight_image_size():
    assert tight_image_size([BoundingBox.from_xywh(10, 20, 30.5, 40), None]) == (41, 60)
    assert tight_image_size([None]) == (1, 1)


# ---------------------------------------------------------------------------
# Prediction files
# ---------------------------------------------------------------------------


def test_format_predictions_keeps_line_count():
    text = format_predictions([BoundingBox.from_xywh(1, 2, 3, 4), None, BoundingBox(5, 5, 0, 2)])
    assert text == "1,2,3,4\n0,0,0,0\n0,0,0,0\n"


def test_parse_predictions_absent_lines(tmp_path):
    path = _write(tmp_path / "p.txt", "1,2,3,4\n\nnan,nan,nan,nan\n0,0,0,0\n")
    boxes = parse_predictions(path)
    assert boxes == [BoundingBox.from_xywh(1, 2, 3, 4), None, None, None]


def test_parse_predictions_single_nan_token(tmp_path):
    path = _write(tmp_path / "p.txt", "10,20,30,40\nnan\n20,20,30,40\nNaN\n")
    boxes = parse_predictions(path)
    assert boxes == [
        BoundingBox.from_xywh(10, 20, 30, 40),
        None,
        BoundingBox.from_xywh(20, 20, 30, 40),
        None,
    ]


def test_parse_predictions_keeps_trailing_absent_frames(tmp_path):
    path = _write(tmp_path / "p.txt", "10,20,30,40\n\n\n")
    assert parse_predictions(path) == [BoundingBox.from_xywh(10, 20, 30, 40), None, None]


def test_parse_predictions_single_non_numeric_token(tmp_path):
    path = _write(tmp_path / "p.txt", "10,20,30,40\nlost\n")
    with pytest.raises(AnnotationParseError, match=r"p\.txt:2: expected 4 values"):
        parse_predictions(path)


def test_format_predictions_empty():
    assert format_predictions([]) == ""


def test_write_predictions_round_trip(tmp_path):
    boxes = [BoundingBox.from_xywh(1.5, 2.25, 3, 4), None]
    path = write_predictions(tmp_path / "out" / "seq.txt", boxes)
    assert parse_predictions(path) == boxes


def test_parse_predictions_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="Prediction file not found"):
        parse_predictions(tmp_path / "missing.txt")
