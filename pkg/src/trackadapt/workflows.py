"""File-to-file operations shared by the command line and the MCP tools.

Each function reads its inputs from disk, does one job and writes its
outputs atomically, returning a report object that serializes to JSON.
"""

import dataclasses
import logging
import pathlib
from collections.abc import Sequence

from trackadapt.annotations import (
    AnnotationFormat,
    TrajectoryAnnotation,
    load_annotation_dir,
    parse_predictions,
    write_annotation,
    write_predictions,
)
from trackadapt.config import (
    NonlinConfig,
    TrackerConfig,
    TrainingConfig,
    default_tracker_config,
    dump_config,
)
from trackadapt.exceptions import ConfigError, DomainError
from trackadapt.helpers import run_ordered, safe_json_serialize, write_text_atomic
from trackadapt.metrics import (
    SequenceMetrics,
    SequenceResult,
    aggregate,
    evaluate_sequence,
    format_results_table,
    format_success_plot,
    success_plot,
)
from trackadapt.motion.predictors import LearnedPredictor
from trackadapt.motion.training import TrajectoryWindowDataset, mean_one_step_iou, train_mp
from trackadapt.motion.weights import save_network
from trackadapt.nonlinearity import read_split, split_dataset, write_split
from trackadapt.sim.scenario import Scenario, load_scenarios
from trackadapt.sim.suite import write_suite
from trackadapt.sim.tracker import TrackerRun, run_tracker
from trackadapt.sim.trajectories import MotionKind, synthetic_corpus

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Motion-predictor training
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class TrainReport:
    weights: pathlib.Path
    loss_log: pathlib.Path
    losses: list[float]
    num_sequences: int
    num_windows: int
    one_step_iou: float


def loss_log_path(weights: str | pathlib.Path) -> pathlib.Path:
    weights = pathlib.Path(weights)
    return weights.with_name(weights.stem + ".loss.tsv")


def format_loss_table(losses: Sequence[float]) -> str:
    lines = ["epoch\tloss"]
    lines.extend(f"{i + 1}\t{loss:.8f}" for i, loss in enumerate(losses))
    return "\n".join(lines) + "\n"


def train_from_directory(
    dataset_dir: str | pathlib.Path,
    fmt: AnnotationFormat,
    cfg: TrainingConfig,
    out_path: str | pathlib.Path,
) -> TrainReport:
    """Train a motion predictor on every sequence under ``dataset_dir``.

    Writes the weights to ``out_path`` and the per-epoch loss next to it
    as ``<stem>.loss.tsv``.
    """
    trajs = load_annotation_dir(dataset_dir, fmt)
    dataset = TrajectoryWindowDataset(trajs, cfg.context)
    logger.info("Training %s on %d sequences, %d windows", cfg.arch.value, len(trajs), len(dataset))
    result = train_mp(dataset, cfg)
    weights = save_network(out_path, result.net)
    loss_log = write_text_atomic(loss_log_path(weights), format_loss_table(result.losses))
    score = mean_one_step_iou(lambda: LearnedPredictor(result.net), trajs, cfg.context)
    logger.info("Final mean one-step IoU on the training set: %.4f", score)
    return TrainReport(
        weights=weights,
        loss_log=loss_log,
        losses=result.losses,
        num_sequences=len(trajs),
        num_windows=len(dataset),
        one_step_iou=score,
    )


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

PREDICTIONS_DIR = "predictions"
ANNOTATIONS_DIR = "annotations"
TRACES_DIR = "traces"
METRICS_TABLE = "metrics.tsv"
RUN_SUMMARY = "summary.json"


@dataclasses.dataclass
class SimulationReport:
    out_dir: pathlib.Path
    runs: list[TrackerRun]

    @property
    def mean_iou(self) -> float:
        return sum(r.mean_iou for r in self.runs) / len(self.runs)

    def to_json(self) -> dict:
        return {
            "out_dir": self.out_dir,
            "mean_iou": self.mean_iou,
            "runs": [r.to_json() for r in self.runs],
        }


def simulate_scenarios(
    scenarios: Sequence[Scenario],
    cfg: TrackerConfig,
    out_dir: str | pathlib.Path,
    jobs: int = 1,
) -> SimulationReport:
    """Run every scenario and write its outputs under ``out_dir``.

    Per scenario: ``traces/<name>.jsonl``, ``predictions/<name>.txt`` and
    the ground truth as ``annotations/<name>/`` in LaSOT layout, so the
    ``eval`` command reads the run back. ``metrics.tsv`` and
    ``summary.json`` cover all scenarios.
    """
    names = [sc.name for sc in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError(f"Scenario names must be unique, got {names}.")
    if not scenarios:
        raise ConfigError("No scenarios to simulate.")
    out_dir = pathlib.Path(out_dir)
    runs = run_ordered(lambda sc: run_tracker(sc, cfg), scenarios, jobs)
    rows = []
    for sc, run in zip(scenarios, runs):
        run.write_trace(out_dir / TRACES_DIR / f"{sc.name}.jsonl")
        write_predictions(out_dir / PREDICTIONS_DIR / f"{sc.name}.txt", run.outputs)
        write_annotation(sc.ground_truth(), out_dir / ANNOTATIONS_DIR, AnnotationFormat.LASOT)
        rows.append(evaluate_sequence(run.sequence_result()))
    write_text_atomic(out_dir / METRICS_TABLE, format_results_table(rows))
    write_text_atomic(out_dir / RUN_SUMMARY, safe_json_serialize([r.summary() for r in runs]) + "\n")
    report = SimulationReport(out_dir=out_dir, runs=runs)
    logger.info("Simulated %d scenarios, mean IoU %.4f", len(runs), report.mean_iou)
    return report


def simulate_paths(
    scenario_path: str | pathlib.Path,
    cfg: TrackerConfig,
    out_dir: str | pathlib.Path,
    jobs: int = 1,
    seed: int | None = None,
) -> SimulationReport:
    """Load a scenario file or directory and simulate it.

    ``seed`` replaces every scenario's own seed.
    """
    scenarios = load_scenarios(scenario_path)
    if seed is not None:
        scenarios = [sc.model_copy(update={"seed": seed}) for sc in scenarios]
    return simulate_scenarios(scenarios, cfg, out_dir, jobs)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

RESULTS_TABLE = "results.tsv"
SUCCESS_PLOT = "success_plot.tsv"


@dataclasses.dataclass
class EvalReport:
    rows: list[SequenceMetrics]
    plot: list[tuple[float, float]]
    skipped: list[str]

    @property
    def aggregate(self) -> SequenceMetrics:
        return aggregate(self.rows)

    @property
    def table(self) -> str:
        return format_results_table(self.rows)

    def to_json(self) -> dict:
        return {
            "sequences": self.rows,
            "aggregate": self.aggregate,
            "skipped": self.skipped,
        }


def _restrict(
    trajs: list[TrajectoryAnnotation], split_file: str | pathlib.Path
) -> tuple[list[TrajectoryAnnotation], list[str]]:
    by_id = {t.seq_id: t for t in trajs}
    kept, skipped = [], []
    for seq_id in read_split(split_file):
        if seq_id in by_id:
            kept.append(by_id[seq_id])
        else:
            logger.warning("Split file %s names unknown sequence %r; skipped.", split_file, seq_id)
            skipped.append(seq_id)
    return kept, skipped


def evaluate_directories(
    predictions_dir: str | pathlib.Path,
    annotations_dir: str | pathlib.Path,
    fmt: AnnotationFormat,
    split_file: str | pathlib.Path | None = None,
    out_dir: str | pathlib.Path | None = None,
    jobs: int = 1,
) -> EvalReport:
    """Score ``<predictions_dir>/<seq_id>.txt`` against the annotations.

    With ``split_file`` only the listed sequences are scored. With
    ``out_dir`` the per-sequence table and the success-plot points are
    written there.

    Raises:
        FileNotFoundError: If a sequence has no prediction file.
        DomainError: If no sequence is left to score, or a prediction file
            has the wrong number of frames.
    """
    trajs = load_annotation_dir(annotations_dir, fmt)
    skipped: list[str] = []
    if split_file is not None:
        trajs, skipped = _restrict(trajs, split_file)
    if not trajs:
        raise DomainError(f"No sequences to evaluate under {annotations_dir}.")
    predictions_dir = pathlib.Path(predictions_dir)

    def load(traj: TrajectoryAnnotation) -> SequenceResult:
        pred = parse_predictions(predictions_dir / f"{traj.seq_id}.txt")
        return SequenceResult(traj.seq_id, tuple(pred), traj.boxes)

    results = run_ordered(load, trajs, jobs)
    report = EvalReport(
        rows=run_ordered(evaluate_sequence, results, jobs),
        plot=success_plot(results),
        skipped=skipped,
    )
    if out_dir is not None:
        out_dir = pathlib.Path(out_dir)
        write_text_atomic(out_dir / RESULTS_TABLE, report.table)
        write_text_atomic(out_dir / SUCCESS_PLOT, format_success_plot(report.plot))
    agg = report.aggregate
    logger.info(
        "Evaluated %d sequences: Acc %.2f, P %.2f, P_norm %.2f, AUC %.2f",
        len(report.rows), agg.acc, agg.precision, agg.norm_precision, agg.auc,
    )
    return report


# ---------------------------------------------------------------------------
# Linear / nonlinear split
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class SplitReport:
    linear: list[str]
    nonlinear: list[str]
    linear_path: pathlib.Path
    nonlinear_path: pathlib.Path


def split_directory(
    annotations_dir: str | pathlib.Path,
    fmt: AnnotationFormat,
    cfg: NonlinConfig,
    linear_out: str | pathlib.Path,
    nonlinear_out: str | pathlib.Path,
) -> SplitReport:
    trajs = load_annotation_dir(annotations_dir, fmt)
    linear, nonlinear = split_dataset(trajs, cfg)
    report = SplitReport(
        linear=linear,
        nonlinear=nonlinear,
        linear_path=write_split(linear_out, linear),
        nonlinear_path=write_split(nonlinear_out, nonlinear),
    )
    logger.info("Split %d sequences: %d linear, %d nonlinear", len(trajs), len(linear), len(nonlinear))
    return report


# ---------------------------------------------------------------------------
# Generated inputs
# ---------------------------------------------------------------------------


def write_synthetic_corpus(
    kind: MotionKind | str,
    count: int,
    out_dir: str | pathlib.Path,
    fmt: AnnotationFormat = AnnotationFormat.LASOT,
    frames: int = 60,
    seed: int = 0,
) -> list[pathlib.Path]:
    """Write ``count`` synthetic sequences of one motion kind; returns their directories."""
    corpus = synthetic_corpus(kind, count, frames=frames, seed=seed)
    return [write_annotation(traj, out_dir, fmt) for traj in corpus]


TRACKER_CONFIG = "tracker.yaml"
TRAINING_CONFIG = "training.yaml"
NONLIN_CONFIG = "nonlinearity.yaml"
SUITE_DIR = "suite"


def init_config(
    out_dir: str | pathlib.Path, with_suite: bool = False, seed: int = 0
) -> list[pathlib.Path]:
    """Write the default configs (and optionally the standard suite) to ``out_dir``."""
    out_dir = pathlib.Path(out_dir)
    written = [
        write_text_atomic(out_dir / TRACKER_CONFIG, dump_config(default_tracker_config())),
        write_text_atomic(out_dir / TRAINING_CONFIG, dump_config(TrainingConfig())),
        write_text_atomic(out_dir / NONLIN_CONFIG, dump_config(NonlinConfig())),
    ]
    if with_suite:
        written.extend(write_suite(out_dir / SUITE_DIR, seed=seed))
    return written
