"""Scenario simulation tools."""

from trackadapt.app import mcp
from trackadapt.config import default_tracker_config, parse_tracker_config
from trackadapt.helpers import handle_tracking_error, safe_json_serialize
from trackadapt.workflows import simulate_paths


@mcp.tool(
    name="trackadapt_simulate",
    description=(
        "Run the tracker on a scenario YAML file or a directory of them and "
        "write traces, predictions, ground truth and a metrics table under "
        "out_dir. tracker_config is an optional YAML mapping (see the server "
        "instructions). no_mp, no_edrm and no_tamb switch modules off for "
        "ablations. seed replaces every scenario's seed. Returns per-scenario "
        "mean IoU, Acc, error flags, recoveries and mean added latency."
    ),
    tags={"simulation"},
    annotations={"readOnlyHint": False, "destructiveHint": False, "idempotentHint": True},
)
@handle_tracking_error
def trackadapt_simulate(
    scenarios: str,
    out_dir: str,
    tracker_config: str | None = None,
    no_mp: bool = False,
    no_edrm: bool = False,
    no_tamb: bool = False,
    seed: int | None = None,
    jobs: int = 1,
) -> str:
    """Simulate scenarios."""
    cfg = parse_tracker_config(tracker_config) if tracker_config else default_tracker_config()
    cfg = cfg.with_ablation(no_mp=no_mp, no_edrm=no_edrm, no_tamb=no_tamb)
    report = simulate_paths(scenarios, cfg, out_dir, jobs=jobs, seed=seed)
    return safe_json_serialize(report)
