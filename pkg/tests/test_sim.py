"""Tests for the scenario simulator and the adaptive tracking loop."""

import json

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.special import expit

from tests.factories import linear_scenario
from trackadapt.config import default_tracker_config
from trackadapt.edrm import EdrmMode
from trackadapt.exceptions import DomainError
from trackadapt.geometry import BoundingBox, iou
from trackadapt.selector import select_mask
from trackadapt.sim.generator import NUM_CANDIDATES, generate_frame, grid_mask, observation_stream
from trackadapt.sim.scenario import Corruption, CorruptionKind, Scenario, load_scenarios
from trackadapt.sim.suite import CLEAN_SCENARIOS, standard_suite, write_suite
from trackadapt.sim.tracker import AdaptiveTracker, memory_purity, run_tracker
from trackadapt.sim.trajectories import MotionKind, MotionSpec, centers, synthetic_corpus, trajectory_boxes

FULL = default_tracker_config()
BASELINE = FULL.with_ablation(no_mp=True, no_edrm=True, no_tamb=True)


def _suite_scenario(name):
    return next(sc for sc in standard_suite() if sc.name == name)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


def test_linear_centers():
    spec = MotionSpec(kind=MotionKind.LINEAR, start=(10.0, 20.0), velocity=(2.0, -1.0))
    assert np.allclose(centers(spec, 3), [[10, 20], [12, 19], [14, 18]])


def test_turn_keeps_speed():
    spec = MotionSpec(kind=MotionKind.TURN, velocity=(5.0, 0.0), turn_rate=0.2)
    steps = np.diff(centers(spec, 30), axis=0)
    assert np.allclose(np.hypot(steps[:, 0], steps[:, 1]), 5.0)


def test_reversal_flips_direction_every_period():
    spec = MotionSpec(kind=MotionKind.REVERSAL, velocity=(3.0, 0.0), period=2.0)
    steps = np.diff(centers(spec, 7), axis=0)[:, 0]
    assert steps.tolist() == [3.0, 3.0, -3.0, -3.0, 3.0, 3.0]


def test_growth_scales_box_size():
    boxes = trajectory_boxes(MotionSpec(size=(10.0, 20.0), growth=0.1), 3)
    assert boxes[2].w == pytest.approx(12.1)
    assert boxes[2].h == pytest.approx(24.2)


def test_centers_rejects_zero_frames():
    with pytest.raises(DomainError, match="frames"):
        centers(MotionSpec(), 0)


def test_synthetic_corpus_is_deterministic_and_extends():
    small = synthetic_corpus("turn", 3, frames=30, seed=4)
    large = synthetic_corpus(MotionKind.TURN, 5, frames=30, seed=4)
    assert [t.seq_id for t in large] == [f"turn_{i:03d}" for i in range(5)]
    assert large[:3] == small
    assert synthetic_corpus("turn", 3, frames=30, seed=5) != small


def test_synthetic_corpus_validation():
    with pytest.raises(DomainError, match="count"):
        synthetic_corpus("linear", -1)
    with pytest.raises(DomainError, match="frames"):
        synthetic_corpus("linear", 1, frames=1)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def test_scenario_rejects_corruption_past_end():
    with pytest.raises(ValidationError, match="exceeds 10 frames"):
        linear_scenario(frames=10, corruptions=[Corruption(kind=CorruptionKind.JITTER, start=5, stop=11)])


def test_scenario_rejects_occluded_prompt():
    with pytest.raises(ValidationError, match="cannot be occluded"):
        linear_scenario(corruptions=[Corruption(kind=CorruptionKind.OCCLUSION, start=0, stop=3)])


def test_corruption_rejects_empty_range():
    with pytest.raises(ValidationError, match="is empty"):
        Corruption(kind=CorruptionKind.JITTER, start=4, stop=4)


def test_scenario_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        Scenario(name="x", colour="red")


def test_ground_truth_hides_occluded_frames(occlusion_scenario):
    gt = occlusion_scenario.ground_truth()
    assert gt.visible == [not 30 <= t < 40 for t in range(50)]


def test_magnitude_sums_active_corruptions():
    sc = linear_scenario(
        corruptions=[
            Corruption(kind=CorruptionKind.SCORE_NOISE, start=1, stop=10, magnitude=0.1),
            Corruption(kind=CorruptionKind.SCORE_NOISE, start=5, stop=8, magnitude=0.2),
        ]
    )
    assert sc.magnitude(CorruptionKind.SCORE_NOISE, 6) == pytest.approx(0.3)
    assert sc.magnitude(CorruptionKind.SCORE_NOISE, 9) == pytest.approx(0.1)
    assert sc.magnitude(CorruptionKind.JITTER, 6) == 0.0


def test_standard_suite():
    suite = standard_suite()
    names = [sc.name for sc in suite]
    assert len(suite) == 13
    assert len(set(names)) == 13
    assert set(CLEAN_SCENARIOS) <= set(names)
    assert all(sc.frames == 80 for sc in suite)


def test_write_suite_then_load(tmp_path):
    paths = write_suite(tmp_path)
    assert len(paths) == 13
    loaded = load_scenarios(tmp_path)
    assert loaded == sorted(standard_suite(), key=lambda sc: sc.name)


def test_load_scenarios_single_file_and_missing(tmp_path):
    path = write_suite(tmp_path)[0]
    assert [sc.name for sc in load_scenarios(path)] == ["linear_slow"]
    with pytest.raises(FileNotFoundError, match="Scenario file not found"):
        load_scenarios(tmp_path / "nope.yaml")


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


def test_generate_frame_is_deterministic(distractor_scenario):
    a, b = generate_frame(distractor_scenario, 12), generate_frame(distractor_scenario, 12)
    assert [c.box for c in a.candidates] == [c.box for c in b.candidates]
    assert [c.s_iou for c in a.candidates] == [c.s_iou for c in b.candidates]
    assert np.array_equal(a.features, b.features)


def test_generate_frame_shapes(distractor_scenario):
    obs = generate_frame(distractor_scenario, 0)
    assert len(obs.candidates) == NUM_CANDIDATES
    assert obs.features.shape == (16, 16, 32)
    assert all(c.mask.bits.shape == (16, 16) for c in obs.candidates)


@pytest.mark.parametrize("name", CLEAN_SCENARIOS)
def test_target_candidate_tracks_truth_on_clean_scenarios(name):
    sc = _suite_scenario(name)
    truth = sc.target_boxes()
    for obs in observation_stream(sc):
        target = obs.candidates[0]
        assert iou(target.box, truth[obs.frame_index]) >= 0.9
        assert target.s_obj > 0


def test_occluded_target_is_empty_with_low_objectness(occlusion_scenario):
    for t in range(30, 40):
        target = generate_frame(occlusion_scenario, t).candidates[0]
        assert target.box is None
        assert expit(target.s_obj) < 0.5


def test_distractor_slot_follows_offset(distractor_scenario):
    obs = generate_frame(distractor_scenario, 10)
    truth = distractor_scenario.target_boxes()[10]
    assert abs(obs.candidates[1].box.cx - (truth.cx + 120.0)) < 0.05 * truth.w + 1e-9


def test_swap_bias_makes_distractor_outscore_target():
    sc = _suite_scenario("distractor_swap")
    picks = [select_mask(list(generate_frame(sc, t).candidates), None, FULL.selector).index for t in range(30, 38)]
    assert picks.count(1) >= 4
    before = [select_mask(list(generate_frame(sc, t).candidates), None, FULL.selector).index for t in range(10, 30)]
    assert set(before) == {0}


def test_contaminated_memory_lowers_target_score(distractor_scenario):
    clean = generate_frame(distractor_scenario, 5, memory_purity=1.0).candidates
    dirty = generate_frame(distractor_scenario, 5, memory_purity=0.0).candidates
    assert clean[0].s_iou - dirty[0].s_iou > 0.45
    assert dirty[1].s_iou > clean[1].s_iou


def test_generate_frame_validation(distractor_scenario):
    with pytest.raises(DomainError, match="outside scenario"):
        generate_frame(distractor_scenario, 40)
    with pytest.raises(DomainError, match="memory_purity"):
        generate_frame(distractor_scenario, 0, memory_purity=1.5)


def test_grid_mask_marks_overlapped_cells(distractor_scenario):
    # 640x480 on a 16x16 grid: 40x30 cells; this box straddles four of them
    mask = grid_mask(BoundingBox(40, 30, 40, 30), distractor_scenario)
    assert mask.bits[0, 0] and mask.bits[0, 1] and mask.bits[1, 0]
    assert mask.bits.sum() == 4
    assert grid_mask(None, distractor_scenario).is_empty


# ---------------------------------------------------------------------------
# Tracker
# ---------------------------------------------------------------------------


def test_memory_purity():
    outputs = [BoundingBox(10, 10, 4, 4), None, BoundingBox(50, 50, 4, 4)]
    truth = (BoundingBox(10, 10, 4, 4), None, BoundingBox(10, 10, 4, 4))
    assert memory_purity([], outputs, truth) == 1.0
    assert memory_purity([0, 1], outputs, truth) == 1.0
    assert memory_purity([0, 1, 2], outputs, truth) == pytest.approx(2 / 3)


def test_tracker_requires_prompt_first(distractor_scenario):
    tracker = AdaptiveTracker(FULL, distractor_scenario.image_size)
    obs = generate_frame(distractor_scenario, 0)
    with pytest.raises(ValueError, match="before prompt"):
        tracker.step(obs)
    tracker.prompt(obs, distractor_scenario.target_boxes()[0])
    with pytest.raises(ValueError, match="first frame"):
        tracker.prompt(obs, distractor_scenario.target_boxes()[0])


def test_run_tracker_is_deterministic(distractor_scenario):
    a, b = run_tracker(distractor_scenario, FULL), run_tracker(distractor_scenario, FULL)
    assert a.outputs == b.outputs
    assert a.trace_text() == b.trace_text()
    assert a.summary() == b.summary()


def test_run_tracker_trace_and_prompt(distractor_scenario):
    run = run_tracker(distractor_scenario, FULL)
    lines = run.trace_text().splitlines()
    assert len(lines) == distractor_scenario.frames
    first = json.loads(lines[0])
    assert first["frame"] == 0
    assert first["memory"] == [0]
    assert run.outputs[0] == distractor_scenario.target_boxes()[0]
    assert "mean_latency_ms" in run.to_json()
    assert "mean_latency_ms" not in run.summary()


@pytest.mark.parametrize("name", CLEAN_SCENARIOS)
def test_full_pipeline_never_flags_clean_scenarios(name):
    run = run_tracker(_suite_scenario(name), FULL)
    assert run.flags == 0
    assert run.mean_iou > 0.85


def test_memory_set_bounded_and_contains_prompt(distractor_scenario):
    run = run_tracker(distractor_scenario, FULL)
    for record in run.records:
        assert record.memory[0] == 0
        assert record.memory[-1] == record.frame
        assert len(record.memory) <= FULL.tamb.slots + 1


def test_distractor_swap_full_pipeline_stays_on_target():
    sc = _suite_scenario("distractor_swap")
    full = run_tracker(sc, FULL)
    baseline = run_tracker(sc, BASELINE)
    truth = sc.target_boxes()
    full_iou = np.mean([iou(full.outputs[t], truth[t]) for t in range(30, 38)])
    base_iou = np.mean([iou(baseline.outputs[t], truth[t]) for t in range(30, 38)])
    assert full_iou > 0.5
    assert base_iou < full_iou
    assert full.acc > baseline.acc


def test_occlusion_enters_recover_and_recovers_after(occlusion_scenario):
    run = run_tracker(occlusion_scenario, FULL)
    records = run.records
    assert records[30].flagged
    assert all(r.mode == EdrmMode.RECOVER for r in records[30:40])
    assert all(run.outputs[t] is None for t in range(30, 40))
    assert any(r.recovered for r in records[40:43])
    assert records[42].mode == EdrmMode.DETECT
    assert iou(run.outputs[42], occlusion_scenario.target_boxes()[42]) > 0.8


def test_prototype_frozen_through_recover(occlusion_scenario):
    tracker = AdaptiveTracker(FULL, occlusion_scenario.image_size)
    truth = occlusion_scenario.target_boxes()
    tracker.prompt(generate_frame(occlusion_scenario, 0), truth[0])
    frozen_box = None
    for t in range(1, 45):
        tracker.step(generate_frame(occlusion_scenario, t))
        proto = tracker.edrm.prototype
        if tracker.mode == EdrmMode.RECOVER:
            assert proto.frozen
            if frozen_box is None:
                frozen_box = proto.mean_box
            assert proto.mean_box == frozen_box
            # history holds only pre-occlusion frames while recovering
            assert tracker.bank.last_frame < 30
    assert frozen_box is not None
    assert tracker.mode == EdrmMode.DETECT
    assert not tracker.edrm.prototype.frozen


def test_without_edrm_nothing_is_flagged(occlusion_scenario):
    run = run_tracker(occlusion_scenario, FULL.with_ablation(no_edrm=True))
    assert run.flags == 0
    assert run.recoveries == 0


@pytest.mark.slow
def test_full_pipeline_beats_baseline_on_suite():
    suite = standard_suite()
    full = np.mean([run_tracker(sc, FULL).acc for sc in suite])
    baseline = np.mean([run_tracker(sc, BASELINE).acc for sc in suite])
    assert full >= baseline
