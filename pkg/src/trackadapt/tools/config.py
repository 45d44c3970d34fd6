"""Configuration tools."""

import json

from trackadapt.app import mcp
from trackadapt.config import NonlinConfig, TrainingConfig, default_tracker_config, dump_config
from trackadapt.helpers import handle_tracking_error

_DEFAULTS = {
    "tracker": default_tracker_config,
    "training": TrainingConfig,
    "nonlinearity": NonlinConfig,
}


@mcp.tool(
    name="trackadapt_default_config",
    description=(
        "Return a default configuration document as YAML. section is "
        "tracker (default), training or nonlinearity. Edit the result and "
        "pass it back as tracker_config, training_config or nonlin_config."
    ),
    tags={"config"},
    annotations={"readOnlyHint": True},
)
@handle_tracking_error
def trackadapt_default_config(section: str = "tracker") -> str:
    """Default configuration YAML."""
    if section not in _DEFAULTS:
        valid = ", ".join(_DEFAULTS)
        raise ValueError(f"Invalid section: {section!r}. Must be one of: {valid}.")
    return json.dumps({"section": section, "yaml": dump_config(_DEFAULTS[section]())})
