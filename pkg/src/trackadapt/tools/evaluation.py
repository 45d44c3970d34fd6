"""Evaluation and dataset-split tools."""

from trackadapt.annotations import parse_annotations
from trackadapt.app import mcp
from trackadapt.config import NonlinConfig
from trackadapt.helpers import (
    _parse_annotation_format,
    handle_tracking_error,
    load_yaml_model_str,
    safe_json_serialize,
)
from trackadapt.nonlinearity import classify_video, frame_labels
from trackadapt.workflows import evaluate_directories, split_directory


def _nonlin_config(text: str | None) -> NonlinConfig:
    if not text:
        return NonlinConfig()
    return load_yaml_model_str(text, NonlinConfig, origin="nonlin_config")


@mcp.tool(
    name="trackadapt_eval",
    description=(
        "Score tracker outputs (<seq_id>.txt files in predictions_dir) "
        "against the annotations in annotations_dir. format is lasot or "
        "antiuav. split_file optionally restricts scoring to the listed "
        "sequence ids. Returns per-sequence and aggregate Acc, P, P_norm and "
        "AUC (percentages) plus the success-plot points."
    ),
    tags={"evaluation"},
    annotations={"readOnlyHint": True},
)
@handle_tracking_error
def trackadapt_eval(
    predictions_dir: str,
    annotations_dir: str,
    format: str = "lasot",
    split_file: str | None = None,
) -> str:
    """Evaluate predictions."""
    report = evaluate_directories(
        predictions_dir, annotations_dir, _parse_annotation_format(format), split_file=split_file
    )
    return safe_json_serialize({**report.to_json(), "success_plot": report.plot})


@mcp.tool(
    name="trackadapt_split",
    description=(
        "Classify every sequence under annotations_dir as linear or "
        "nonlinear motion and write the two id lists to linear_out and "
        "nonlinear_out. nonlin_config is an optional YAML mapping "
        "(accel_mag_thresh, angle_dev_thresh, jerk_thresh, video_frac_thresh)."
    ),
    tags={"evaluation"},
    annotations={"readOnlyHint": False, "destructiveHint": False, "idempotentHint": True},
)
@handle_tracking_error
def trackadapt_split(
    annotations_dir: str,
    linear_out: str,
    nonlinear_out: str,
    format: str = "lasot",
    nonlin_config: str | None = None,
) -> str:
    """Split a dataset by motion nonlinearity."""
    report = split_directory(
        annotations_dir,
        _parse_annotation_format(format),
        _nonlin_config(nonlin_config),
        linear_out,
        nonlinear_out,
    )
    return safe_json_serialize(report)


@mcp.tool(
    name="trackadapt_classify_trajectory",
    description=(
        "Classify one annotated sequence (its directory or annotation file) "
        "as linear or nonlinear motion. Returns the label, the fraction of "
        "nonlinear frames and the indicators of every labeled frame."
    ),
    tags={"evaluation"},
    annotations={"readOnlyHint": True},
)
@handle_tracking_error
def trackadapt_classify_trajectory(
    path: str,
    format: str = "lasot",
    nonlin_config: str | None = None,
) -> str:
    """Classify one trajectory."""
    cfg = _nonlin_config(nonlin_config)
    traj = parse_annotations(path, _parse_annotation_format(format))
    result = classify_video(traj, cfg)
    frames = {t: lab for t, lab in enumerate(frame_labels(traj, cfg)) if lab is not None}
    return safe_json_serialize({**vars(result), "frames": frames})
