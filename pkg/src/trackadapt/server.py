"""trackadapt command line and MCP server entry point."""

import argparse
import sys

from pydantic import BaseModel, ValidationError

from trackadapt.annotations import AnnotationFormat
from trackadapt.app import mcp
from trackadapt.config import (
    NonlinConfig,
    TrackerConfig,
    TrainingConfig,
    load_nonlin_config,
    load_tracker_config,
    load_training_config,
)
from trackadapt.exceptions import AnnotationParseError, ConfigError, TrackingError
from trackadapt.helpers import (
    _parse_annotation_format,
    _parse_predictor_kind,
    configure_logging,
)
from trackadapt.sim.trajectories import MotionKind
from trackadapt.workflows import (
    evaluate_directories,
    init_config,
    simulate_paths,
    split_directory,
    train_from_directory,
    write_synthetic_corpus,
)

# Import tool modules to trigger @mcp.tool registration
from trackadapt.tools import config, evaluation, simulation, training  # noqa: E402, F401

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _override(model: BaseModel, **updates):
    """Copy ``model`` with the non-None ``updates`` applied, re-validated."""
    updates = {k: v for k, v in updates.items() if v is not None}
    if not updates:
        return model
    return type(model).model_validate({**model.model_dump(), **updates})


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--format",
        type=_parse_annotation_format,
        default=AnnotationFormat.LASOT,
        help="Annotation layout: lasot or antiuav (default: lasot)",
    )


def _add_jobs(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--jobs", type=int, default=1, help="Sequences or scenarios processed in parallel (default: 1)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackadapt",
        description=(
            "Motion-aware mask selection, error recovery and memory selection "
            "for segmenter-based trackers. Set TRACKADAPT_LOG_LEVEL to control logging."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-mp", help="Train a learned motion predictor on annotated trajectories")
    p.add_argument("dataset", help="Directory of annotated sequences")
    p.add_argument("out", help="Output weights file")
    _add_format(p)
    p.add_argument("--config", help="Training config YAML (default: built-in defaults)")
    p.add_argument("--arch", type=_parse_predictor_kind, help="Network: mlp or lstm")
    p.add_argument("--context", type=int, help="History length k (>= 2)")
    p.add_argument("--epochs", type=int, help="Training epochs")
    p.add_argument("--lr", type=float, help="Adam learning rate")
    p.add_argument("--batch-size", type=int, help="Mini-batch size")
    p.add_argument("--box-loss", choices=["ciou", "diou", "iou"], help="Box term of the loss")
    p.add_argument("--seed", type=int, help="Initialization and shuffling seed")

    p = sub.add_parser("simulate", help="Run the tracker on simulated scenarios")
    p.add_argument("scenarios", help="Scenario YAML file or directory of them")
    p.add_argument("out", help="Output directory for traces, predictions and metrics")
    p.add_argument("--config", help="Tracker config YAML (default: built-in defaults)")
    p.add_argument("--predictor", type=_parse_predictor_kind, help="Motion predictor: kf, ekf, mlp or lstm")
    p.add_argument("--weights", help="Weights file for a learned predictor")
    p.add_argument("--no-mp", action="store_true", help="Disable the motion predictor")
    p.add_argument("--no-edrm", action="store_true", help="Disable error detection and recovery")
    p.add_argument("--no-tamb", action="store_true", help="Use first-in-first-out memory")
    p.add_argument("--seed", type=int, help="Replace every scenario's seed")
    _add_jobs(p)

    p = sub.add_parser("eval", help="Score tracker outputs against annotations")
    p.add_argument("predictions", help="Directory of <seq_id>.txt prediction files")
    p.add_argument("annotations", help="Directory of annotated sequences")
    _add_format(p)
    p.add_argument("--split", help="Only score the sequence ids listed in this file")
    p.add_argument("--out", help="Directory for results.tsv and success_plot.tsv")
    _add_jobs(p)

    p = sub.add_parser("split", help="Split sequences into linear and nonlinear motion subsets")
    p.add_argument("annotations", help="Directory of annotated sequences")
    p.add_argument("linear_out", help="Output file for linear sequence ids")
    p.add_argument("nonlinear_out", help="Output file for nonlinear sequence ids")
    _add_format(p)
    p.add_argument("--config", help="Nonlinearity config YAML (default: built-in defaults)")
    p.add_argument("--accel-thresh", type=float, help="Acceleration magnitude threshold (px/frame^2)")
    p.add_argument("--angle-thresh", type=float, help="Acceleration direction change threshold (rad)")
    p.add_argument("--jerk-thresh", type=float, help="Jerk magnitude threshold (px/frame^3)")
    p.add_argument("--frac-thresh", type=float, help="Nonlinear frame fraction above which a video is nonlinear")

    p = sub.add_parser("synth-corpus", help="Write a synthetic trajectory corpus")
    p.add_argument("kind", choices=[k.value for k in MotionKind], help="Motion kind")
    p.add_argument("out", help="Output directory")
    p.add_argument("--count", type=int, default=32, help="Number of sequences (default: 32)")
    p.add_argument("--frames", type=int, default=60, help="Frames per sequence (default: 60)")
    p.add_argument("--seed", type=int, default=0, help="Corpus seed (default: 0)")
    _add_format(p)

    p = sub.add_parser("init-config", help="Write the default configuration files")
    p.add_argument("out", help="Output directory")
    p.add_argument("--suite", action="store_true", help="Also write the standard scenario suite")
    p.add_argument("--seed", type=int, default=0, help="Suite seed (default: 0)")

    p = sub.add_parser("serve", help="Run the MCP server")
    p.add_argument(
        "--transport",
        choices=["stdio", "http", "sse"],
        default="stdio",
        help="Transport protocol (default: stdio)",
    )
    p.add_argument("--host", default="127.0.0.1", help="Host for http/sse")
    p.add_argument("--port", type=int, default=8000, help="Port for http/sse")
    return parser


def _tracker_config(args) -> TrackerConfig:
    cfg = load_tracker_config(args.config) if args.config else TrackerConfig()
    if args.predictor is not None or args.weights is not None:
        predictor = _override(cfg.predictor, kind=args.predictor, weights=args.weights)
        cfg = cfg.model_copy(update={"predictor": predictor})
    return cfg.with_ablation(no_mp=args.no_mp, no_edrm=args.no_edrm, no_tamb=args.no_tamb)


def _cmd_train_mp(args) -> None:
    cfg = load_training_config(args.config) if args.config else TrainingConfig()
    cfg = _override(
        cfg,
        arch=args.arch,
        context=args.context,
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        box_loss=args.box_loss,
        seed=args.seed,
    )
    report = train_from_directory(args.dataset, args.format, cfg, args.out)
    print(f"wrote {report.weights} ({report.num_windows} windows, {len(report.losses)} epochs)")
    print(f"final loss {report.losses[-1]:.6f}, mean one-step IoU {report.one_step_iou:.4f}")


def _cmd_simulate(args) -> None:
    report = simulate_paths(args.scenarios, _tracker_config(args), args.out, jobs=args.jobs, seed=args.seed)
    for run in report.runs:
        print(f"{run.scenario}\tmean_iou={run.mean_iou:.4f}\tflags={run.flags}\trecoveries={run.recoveries}")
    print(f"mean IoU {report.mean_iou:.4f} over {len(report.runs)} scenarios -> {report.out_dir}")


def _cmd_eval(args) -> None:
    report = evaluate_directories(
        args.predictions, args.annotations, args.format, split_file=args.split, out_dir=args.out, jobs=args.jobs
    )
    sys.stdout.write(report.table)


def _cmd_split(args) -> None:
    cfg = load_nonlin_config(args.config) if args.config else NonlinConfig()
    cfg = _override(
        cfg,
        accel_mag_thresh=args.accel_thresh,
        angle_dev_thresh=args.angle_thresh,
        jerk_thresh=args.jerk_thresh,
        video_frac_thresh=args.frac_thresh,
    )
    report = split_directory(args.annotations, args.format, cfg, args.linear_out, args.nonlinear_out)
    print(f"{len(report.linear)} linear -> {report.linear_path}")
    print(f"{len(report.nonlinear)} nonlinear -> {report.nonlinear_path}")


def _cmd_synth_corpus(args) -> None:
    dirs = write_synthetic_corpus(
        args.kind, args.count, args.out, fmt=args.format, frames=args.frames, seed=args.seed
    )
    print(f"wrote {len(dirs)} sequences to {args.out}")


def _cmd_init_config(args) -> None:
    for path in init_config(args.out, with_suite=args.suite, seed=args.seed):
        print(path)


def _cmd_serve(args) -> None:
    if args.transport == "stdio":
        mcp.run(transport="stdio")
    else:
        mcp.run(transport=args.transport, host=args.host, port=args.port)


COMMANDS = {
    "train-mp": _cmd_train_mp,
    "simulate": _cmd_simulate,
    "eval": _cmd_eval,
    "split": _cmd_split,
    "synth-corpus": _cmd_synth_corpus,
    "init-config": _cmd_init_config,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        COMMANDS[args.command](args)
    except (ConfigError, AnnotationParseError, FileNotFoundError, ValidationError, ValueError) as e:
        print(f"trackadapt {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TrackingError as e:
        print(f"trackadapt {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
