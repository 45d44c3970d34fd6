"""The adaptive tracking loop over simulated decoder output.

Per frame: motion prediction, mask selection, error detection (or a
recovery attempt), then history, prototype and memory updates. Frame 0 is
the prompted frame: its output is the prompt box and it becomes the
prompted memory entry.

While the error-detection machine is in Recover mode, outputs stay out of
the motion history so the predictor keeps extrapolating the last reliable
path; the frame that recovers re-enters it.
"""

import dataclasses
import logging
import pathlib
import time

import numpy as np

from trackadapt.config import TrackerConfig
from trackadapt.edrm import EdrmMode, EdrmState, SimilarityScores, detect, masked_embedding, try_recover
from trackadapt.exceptions import FrameError, TrackingError
from trackadapt.geometry import BoundingBox, iou, is_present
from trackadapt.helpers import json_line, write_text_atomic
from trackadapt.metrics import SequenceResult, sequence_acc
from trackadapt.motion.history import HistoryBank
from trackadapt.motion.predictors import MotionPredictor, build_predictor
from trackadapt.selector import Candidate, select_mask
from trackadapt.sim.generator import FrameObservation, generate_frame
from trackadapt.sim.scenario import Scenario
from trackadapt.tamb import MemoryEntry, baseline_fifo, select_memories

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class FrameRecord:
    """One trace line: everything needed to replay the frame's decisions."""

    frame: int
    mode: EdrmMode
    prediction: BoundingBox | None
    selected: int
    chosen: int
    scores: tuple[float, ...]
    output: BoundingBox | None
    flagged: bool
    recovered: bool
    similarity: SimilarityScores | None
    memory: tuple[int, ...]
    purity: float
    candidates: tuple[Candidate, ...]


def _embed(obs: FrameObservation) -> list[Candidate]:
    out = []
    for c in obs.candidates:
        emb = masked_embedding(obs.features, c.mask) if c.mask is not None else None
        out.append(dataclasses.replace(c, embedding=emb))
    return out


def memory_purity(
    memory: list[int],
    outputs: list[BoundingBox | None],
    truth: tuple[BoundingBox | None, ...],
) -> float:
    """Fraction of memory frames whose output agrees with the ground truth.

    An output agrees when it overlaps the truth with IoU >= 0.5, or when
    both are absent. An empty memory is pure.
    """
    if not memory:
        return 1.0
    agree = 0
    for f in memory:
        out, gt = outputs[f], truth[f]
        if gt is None:
            agree += out is None
        else:
            agree += iou(out, gt) >= 0.5
    return agree / len(memory)


class AdaptiveTracker:
    """Per-sequence tracker state. Feed it frames in order."""

    def __init__(self, cfg: TrackerConfig, image_size: tuple[int, int]):
        self.cfg = cfg
        self.predictor: MotionPredictor | None = (
            build_predictor(cfg.predictor) if cfg.modules.mp else None
        )
        capacity = max(2, self.predictor.context) if self.predictor else 2
        self.bank = HistoryBank(capacity, image_size)
        self.edrm = EdrmState.new(cfg.edrm)
        self.memory: list[MemoryEntry] = []
        self.memory_set: list[int] = []
        self.outputs: list[BoundingBox | None] = []
        self.latencies: list[float] = []

    @property
    def mode(self) -> EdrmMode:
        return self.edrm.mode

    def prompt(self, obs: FrameObservation, box: BoundingBox) -> FrameRecord:
        """Start the sequence from the prompt box on frame ``obs.frame_index``."""
        if self.outputs:
            raise ValueError("prompt() must be the first frame of a sequence.")
        start = time.perf_counter()
        cands = _embed(obs)
        index = max(range(len(cands)), key=lambda i: (iou(cands[i].box, box), -i))
        chosen = cands[index]
        similarity = None
        if self.cfg.modules.edrm:
            similarity = detect(self.edrm, box, chosen.embedding, self.cfg.edrm, self.cfg.cues).scores
        self._commit(obs.frame_index, box, chosen, None, prompted=True)
        self.latencies.append(time.perf_counter() - start)
        return FrameRecord(
            frame=obs.frame_index,
            mode=self.mode,
            prediction=None,
            selected=index,
            chosen=index,
            scores=(),
            output=box,
            flagged=False,
            recovered=False,
            similarity=similarity,
            memory=tuple(self.memory_set),
            purity=1.0,
            candidates=obs.candidates,
        )

    def step(self, obs: FrameObservation, purity: float = 1.0) -> FrameRecord:
        if not self.outputs:
            raise ValueError("step() called before prompt().")
        cfg = self.cfg
        t = obs.frame_index
        start = time.perf_counter()
        cands = _embed(obs)
        pred = self.predictor.predict(self.bank, t) if self.predictor else None
        selection = select_mask(
            cands, pred, cfg.selector, use_geometry=cfg.cues.geometry, use_motion=cfg.cues.motion
        )
        index = selection.index
        chosen = cands[index]
        # A non-positive objectness logit declares the target absent.
        output = chosen.box if chosen.s_obj > 0 else None
        flagged = recovered = False
        similarity = None
        if cfg.modules.edrm:
            if self.edrm.mode == EdrmMode.RECOVER:
                found = try_recover(self.edrm, cands, cfg.edrm, cfg.cues)
                if found is not None:
                    index, recovered = found, True
                    chosen = cands[found]
                    output = chosen.box
                    logger.debug("frame %d: recovered on candidate %d", t, found)
            else:
                outcome = detect(self.edrm, output, chosen.embedding, cfg.edrm, cfg.cues)
                flagged, similarity = outcome.flagged, outcome.scores
                if flagged:
                    logger.debug("frame %d: error flagged, entering recover mode", t)
        self._commit(t, output, chosen, pred)
        self.latencies.append(time.perf_counter() - start)
        return FrameRecord(
            frame=t,
            mode=self.mode,
            prediction=pred,
            selected=selection.index,
            chosen=index,
            scores=selection.scores,
            output=output,
            flagged=flagged,
            recovered=recovered,
            similarity=similarity,
            memory=tuple(self.memory_set),
            purity=purity,
            candidates=obs.candidates,
        )

    def _commit(
        self,
        t: int,
        output: BoundingBox | None,
        chosen: Candidate,
        pred: BoundingBox | None,
        prompted: bool = False,
    ) -> None:
        if self.edrm.mode == EdrmMode.DETECT:
            self.bank.push(t, output)
            if self.predictor is not None and is_present(output):
                self.predictor.observe(t, output)
        s_m = 1.0 if prompted else iou(pred, output)
        self.memory.append(
            MemoryEntry(t, output, chosen.s_iou, chosen.s_obj, s_m, prompted=prompted)
        )
        if self.cfg.modules.tamb:
            self.memory_set = select_memories(
                self.memory, self.cfg.tamb, use_motion=self.cfg.cues.tamb_motion
            )
        else:
            self.memory_set = baseline_fifo(self.memory, self.cfg.tamb.slots)
        self.outputs.append(output)


@dataclasses.dataclass(frozen=True)
class TrackerRun:
    scenario: str
    outputs: tuple[BoundingBox | None, ...]
    ground_truth: tuple[BoundingBox | None, ...]
    records: tuple[FrameRecord, ...]
    latencies: tuple[float, ...]

    @property
    def frame_ious(self) -> list[float]:
        """Output IoU on each frame where the target is visible."""
        return [iou(o, g) for o, g in zip(self.outputs, self.ground_truth) if g is not None]

    @property
    def mean_iou(self) -> float:
        return float(np.mean(self.frame_ious))

    @property
    def acc(self) -> float:
        return sequence_acc(self.sequence_result())

    @property
    def flags(self) -> int:
        return sum(r.flagged for r in self.records)

    @property
    def recoveries(self) -> int:
        return sum(r.recovered for r in self.records)

    def sequence_result(self) -> SequenceResult:
        return SequenceResult(self.scenario, self.outputs, self.ground_truth)

    def trace_text(self) -> str:
        return "".join(json_line(r) + "\n" for r in self.records)

    def write_trace(self, path: str | pathlib.Path) -> pathlib.Path:
        return write_text_atomic(path, self.trace_text())

    def summary(self) -> dict:
        """Deterministic run figures; latency is reported separately."""
        return {
            "scenario": self.scenario,
            "frames": len(self.outputs),
            "mean_iou": self.mean_iou,
            "acc": self.acc,
            "flags": self.flags,
            "recoveries": self.recoveries,
        }

    @property
    def mean_latency_ms(self) -> float:
        return float(np.mean(self.latencies) * 1000.0) if self.latencies else 0.0

    def to_json(self) -> dict:
        return {**self.summary(), "mean_latency_ms": self.mean_latency_ms}


def run_tracker(sc: Scenario, cfg: TrackerConfig) -> TrackerRun:
    """Track the scenario's target from its frame-0 box to the last frame.

    Raises:
        FrameError: Wrapping any module error, with the frame index.
    """
    truth = sc.ground_truth().boxes
    tracker = AdaptiveTracker(cfg, sc.image_size)
    records = []
    for t in range(sc.frames):
        try:
            purity = memory_purity(tracker.memory_set, tracker.outputs, truth)
            obs = generate_frame(sc, t, purity)
            if t == 0:
                records.append(tracker.prompt(obs, truth[0]))
            else:
                records.append(tracker.step(obs, purity))
        except (TrackingError, ValueError, ArithmeticError) as e:
            raise FrameError(t, e) from e
    run = TrackerRun(
        scenario=sc.name,
        outputs=tuple(tracker.outputs),
        ground_truth=truth,
        records=tuple(records),
        latencies=tuple(tracker.latencies),
    )
    logger.info(
        "%s: mean IoU %.4f, Acc %.2f, %d flags, %d recoveries",
        sc.name, run.mean_iou, run.acc, run.flags, run.recoveries,
    )
    return run
