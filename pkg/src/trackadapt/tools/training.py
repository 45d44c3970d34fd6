"""Motion-predictor training tools."""

from trackadapt.app import mcp
from trackadapt.config import TrainingConfig
from trackadapt.helpers import (
    _parse_annotation_format,
    handle_tracking_error,
    load_yaml_model_str,
    safe_json_serialize,
)
from trackadapt.workflows import train_from_directory


@mcp.tool(
    name="trackadapt_train_mp",
    description=(
        "Train a learned motion predictor (mlp or lstm) on every annotated "
        "sequence under dataset_dir and write its weights to out_path. The "
        "per-epoch loss goes to <out_path stem>.loss.tsv. training_config is "
        "an optional YAML mapping (arch, context, epochs, learning_rate, "
        "batch_size, box_loss, lambda1, lambda2, seed, hidden_size, "
        "num_layers). Returns the loss curve and the mean one-step IoU on "
        "the training sequences."
    ),
    tags={"training"},
    annotations={"readOnlyHint": False, "destructiveHint": False, "idempotentHint": True},
)
@handle_tracking_error
def trackadapt_train_mp(
    dataset_dir: str,
    out_path: str,
    format: str = "lasot",
    training_config: str | None = None,
    epochs: int | None = None,
    seed: int | None = None,
) -> str:
    """Train a motion predictor."""
    cfg = (
        load_yaml_model_str(training_config, TrainingConfig, origin="training_config")
        if training_config
        else TrainingConfig()
    )
    updates = {k: v for k, v in {"epochs": epochs, "seed": seed}.items() if v is not None}
    if updates:
        cfg = TrainingConfig.model_validate({**cfg.model_dump(), **updates})
    report = train_from_directory(dataset_dir, _parse_annotation_format(format), cfg, out_path)
    return safe_json_serialize(report)
