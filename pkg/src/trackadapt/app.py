"""FastMCP application instance.

Separated from server.py so tool modules can import `mcp` without
creating a circular dependency (server.py imports tools, tools import mcp).
"""

from fastmcp import FastMCP
from fastmcp.server.lifespan import lifespan

from trackadapt.helpers import configure_logging


@lifespan
async def trackadapt_lifespan(server):
    """Route library logging to stderr so the stdio transport stays clean."""
    configure_logging()
    yield {}


_CONFIG_REFERENCE = """\

## Tracker config reference

Tools that accept a `tracker_config` parameter expect a YAML mapping. Every
section is optional; unknown keys are rejected.

```yaml
predictor:
  kind: kf              # kf | ekf | mlp | lstm
  weights: null         # required for mlp/lstm; optional filter container for kf/ekf
selector:               # alpha*S_IoU + beta_ar*Sim(AR) + beta_area*Sim(area) + gamma*S_m
  alpha: 0.85
  beta_ar: 0.15
  beta_area: 0.10
  gamma: 0.15
edrm:                   # detect below sigma, recover above tau
  sigma_ar: 0.40
  sigma_a: 0.40
  sigma_s: 0.10
  tau_ar: 0.40
  tau_a: 0.40
  tau_s: 0.60
  window: 5             # prototype window T
tamb:
  pool_size: 30         # M admitted candidates
  slots: 6              # N_m memory slots
  mu_iou: 0.5
  mu_obj: 0.5
  mu_m: 0.0
modules: {mp: true, edrm: true, tamb: true}
cues: {geometry: true, motion: true, edrm_geometry: true, edrm_semantic: true, tamb_motion: true}
```

Use `trackadapt_default_config` to get the full default document.

## Files

- Annotations: one directory per sequence. `lasot`: `groundtruth.txt` with
  top-left `x,y,w,h` lines plus optional `full_occlusion.txt` and
  `out_of_view.txt`. `antiuav`: `IR_label.json` with `exist` and `gt_rect`.
- Predictions: `<seq_id>.txt`, one `x,y,w,h` line per frame; `0,0,0,0`,
  `nan` or an empty line means the target was declared absent.
- Scenarios: YAML files; `trackadapt_simulate` accepts one file or a
  directory of them.
"""

mcp = FastMCP(
    "trackadapt",
    instructions=(
        "trackadapt server for motion-aware tracking experiments: train motion "
        "predictors on box trajectories, simulate the tracker on scripted "
        "scenarios, score predictions against annotations, and split datasets "
        "into linear and nonlinear motion subsets. All paths are local files."
        + _CONFIG_REFERENCE
    ),
    lifespan=trackadapt_lifespan,
)
