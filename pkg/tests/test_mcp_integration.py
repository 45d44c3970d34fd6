"""MCP protocol integration tests.

These tests use the real FastMCP Client to call tools through the MCP
protocol, verifying tool registration, schema correctness, JSON responses,
and error handling.
"""

import json

import pytest
from fastmcp import Client
from fastmcp.exceptions import ToolError

# Trigger tool registration by importing the server module.
import trackadapt.server  # noqa: F401

from tests.factories import linear_scenario
from trackadapt.app import mcp as mcp_app
from trackadapt.sim.scenario import dump_scenario

# Every tool the server is supposed to expose.
EXPECTED_TOOLS = {
    # Motion prediction
    "trackadapt_train_mp",
    # Simulation
    "trackadapt_simulate",
    # Evaluation
    "trackadapt_eval",
    "trackadapt_split",
    "trackadapt_classify_trajectory",
    # Config
    "trackadapt_default_config",
}


@pytest.fixture
async def client():
    """Create a FastMCP client connected to the real MCP app."""
    async with Client(mcp_app) as c:
        yield c


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "linear.yaml"
    path.write_text(dump_scenario(linear_scenario(frames=12)))
    return path


# -- Tool discovery --------------------------------------------------------


async def test_all_tools_registered(client):
    """Every expected tool should be discoverable via the MCP protocol."""
    tools = await client.list_tools()
    registered = {t.name for t in tools}
    missing = EXPECTED_TOOLS - registered
    assert not missing, f"Tools not registered: {missing}"


async def test_no_unexpected_tools(client):
    """No tools beyond the expected set should be registered."""
    tools = await client.list_tools()
    registered = {t.name for t in tools}
    extra = registered - EXPECTED_TOOLS
    assert not extra, f"Unexpected tools registered: {extra}"


async def test_tools_have_descriptions(client):
    """Every tool should have a non-empty description."""
    tools = await client.list_tools()
    for tool in tools:
        assert tool.description, f"Tool {tool.name} has no description"


# -- Tool invocation via MCP protocol -------------------------------------


async def test_call_default_config(client):
    result = await client.call_tool("trackadapt_default_config", {})
    parsed = json.loads(result.content[0].text)
    assert parsed["section"] == "tracker"
    assert "predictor:" in parsed["yaml"]
    assert "alpha: 0.85" in parsed["yaml"]


async def test_call_default_config_training(client):
    result = await client.call_tool("trackadapt_default_config", {"section": "training"})
    parsed = json.loads(result.content[0].text)
    assert "arch: lstm" in parsed["yaml"]


async def test_call_default_config_invalid_section(client):
    """Validation errors should propagate as ToolError through MCP."""
    with pytest.raises(ToolError, match="Invalid section"):
        await client.call_tool("trackadapt_default_config", {"section": "gpu"})


async def test_call_classify_trajectory(client, dataset_dir):
    result = await client.call_tool(
        "trackadapt_classify_trajectory", {"path": str(dataset_dir / "seq_c")}
    )
    parsed = json.loads(result.content[0].text)
    assert parsed["seq_id"] == "seq_c"
    assert parsed["label"] == "nonlinear"
    assert parsed["fraction"] == 1.0
    assert set(parsed["frames"]) == {str(t) for t in range(2, 20)}


async def test_call_classify_trajectory_bad_format(client, dataset_dir):
    with pytest.raises(ToolError, match="Invalid annotation format"):
        await client.call_tool(
            "trackadapt_classify_trajectory",
            {"path": str(dataset_dir / "seq_c"), "format": "vot"},
        )


async def test_call_split(client, dataset_dir, tmp_path):
    result = await client.call_tool(
        "trackadapt_split",
        {
            "annotations_dir": str(dataset_dir),
            "linear_out": str(tmp_path / "linear.txt"),
            "nonlinear_out": str(tmp_path / "nonlinear.txt"),
        },
    )
    parsed = json.loads(result.content[0].text)
    assert parsed["linear"] == ["seq_a", "seq_b"]
    assert parsed["nonlinear"] == ["seq_c"]
    assert (tmp_path / "nonlinear.txt").read_text() == "seq_c\n"


async def test_call_split_invalid_config(client, dataset_dir, tmp_path):
    with pytest.raises(ToolError, match="Invalid configuration"):
        await client.call_tool(
            "trackadapt_split",
            {
                "annotations_dir": str(dataset_dir),
                "linear_out": str(tmp_path / "l.txt"),
                "nonlinear_out": str(tmp_path / "n.txt"),
                "nonlin_config": "jerk_tresh: 3",
            },
        )


async def test_call_simulate_then_eval(client, scenario_file, tmp_path):
    out = tmp_path / "run"
    result = await client.call_tool(
        "trackadapt_simulate", {"scenarios": str(scenario_file), "out_dir": str(out)}
    )
    parsed = json.loads(result.content[0].text)
    assert [r["scenario"] for r in parsed["runs"]] == ["linear"]
    assert parsed["runs"][0]["frames"] == 12
    assert "mean_latency_ms" in parsed["runs"][0]

    result = await client.call_tool(
        "trackadapt_eval",
        {"predictions_dir": str(out / "predictions"), "annotations_dir": str(out / "annotations")},
    )
    parsed = json.loads(result.content[0].text)
    assert [row["seq_id"] for row in parsed["sequences"]] == ["linear"]
    assert parsed["aggregate"]["seq_id"] == "ALL"
    assert parsed["aggregate"]["acc"] > 80.0
    assert len(parsed["success_plot"]) == 101


async def test_call_simulate_ablation_config_error(client, scenario_file, tmp_path):
    with pytest.raises(ToolError, match="needs a weights file"):
        await client.call_tool(
            "trackadapt_simulate",
            {
                "scenarios": str(scenario_file),
                "out_dir": str(tmp_path / "run"),
                "tracker_config": "predictor: {kind: lstm}",
            },
        )


async def test_call_eval_missing_directory(client, tmp_path):
    with pytest.raises(ToolError, match="File not found"):
        await client.call_tool(
            "trackadapt_eval",
            {"predictions_dir": str(tmp_path / "p"), "annotations_dir": str(tmp_path / "a")},
        )


async def test_call_train_mp(client, dataset_dir, tmp_path):
    out = tmp_path / "mlp.bin"
    result = await client.call_tool(
        "trackadapt_train_mp",
        {
            "dataset_dir": str(dataset_dir),
            "out_path": str(out),
            "training_config": "arch: mlp\ncontext: 3\nbatch_size: 16\n",
            "epochs": 2,
        },
    )
    parsed = json.loads(result.content[0].text)
    assert len(parsed["losses"]) == 2
    assert parsed["num_sequences"] == 3
    assert out.is_file()
    assert (tmp_path / "mlp.loss.tsv").is_file()


async def test_call_train_mp_empty_dataset(client, tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(ToolError, match="Empty dataset"):
        await client.call_tool(
            "trackadapt_train_mp",
            {"dataset_dir": str(tmp_path / "empty"), "out_path": str(tmp_path / "w.bin")},
        )


# -- Tool annotations / tags ----------------------------------------------


async def test_read_only_tools_annotated(client):
    """Read-only tools should be annotated with readOnlyHint=True."""
    tools = await client.list_tools()
    tools_by_name = {t.name: t for t in tools}

    read_only_tools = [
        "trackadapt_eval",
        "trackadapt_classify_trajectory",
        "trackadapt_default_config",
    ]
    for name in read_only_tools:
        tool = tools_by_name[name]
        annotations = tool.annotations
        assert annotations is not None, f"{name} missing annotations"
        assert annotations.readOnlyHint is True, f"{name} should be readOnlyHint=True"


async def test_writing_tools_not_destructive(client):
    """Tools that write files should say so, without being destructive."""
    tools = await client.list_tools()
    tools_by_name = {t.name: t for t in tools}

    writing_tools = ["trackadapt_train_mp", "trackadapt_simulate", "trackadapt_split"]
    for name in writing_tools:
        annotations = tools_by_name[name].annotations
        assert annotations is not None, f"{name} missing annotations"
        assert annotations.readOnlyHint is False, f"{name} should be readOnlyHint=False"
        assert annotations.destructiveHint is False, f"{name} should be destructiveHint=False"
