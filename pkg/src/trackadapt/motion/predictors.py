"""One interface over the four motion predictors.

A predictor is fed every box that enters the history bank (``observe``)
and asked for the box at a future frame (``predict``). Filters carry their
own per-sequence state; learned predictors read the bank and hold only an
immutable network, which may be shared between sequences.
"""

import functools
import pathlib
from typing import Protocol

from trackadapt.config import KalmanConfig, PredictorConfig, PredictorKind
from trackadapt.exceptions import WeightsFormatError
from trackadapt.geometry import BoundingBox
from trackadapt.motion.history import HistoryBank
from trackadapt.motion.kalman import build_filter
from trackadapt.motion.networks import MotionNet, _learned_forward, arch_of
from trackadapt.motion.weights import load_filter, load_network


class MotionPredictor(Protocol):
    kind: PredictorKind
    context: int

    def observe(self, frame_index: int, box: BoundingBox) -> None: ...

    def predict(self, bank: HistoryBank, frame_index: int) -> BoundingBox | None: ...


class FilterPredictor:
    """KF or EKF tracking the boxes pushed into the history bank."""

    context = 2

    def __init__(self, kind: PredictorKind, cfg: KalmanConfig | None = None):
        self.kind = kind
        self._filter = build_filter(kind.value, cfg)
        self._last_frame: int | None = None

    def observe(self, frame_index: int, box: BoundingBox) -> None:
        if self._last_frame is None:
            self._filter.initiate(box)
        else:
            self._filter.update(box, steps=frame_index - self._last_frame)
        self._last_frame = frame_index

    def predict(self, bank: HistoryBank, frame_index: int) -> BoundingBox | None:
        if len(bank) < 2 or self._last_frame is None:
            return bank.last_box
        return self._filter.predicted_box(steps=frame_index - self._last_frame)


class LearnedPredictor:
    """MLP or LSTM reading the last ``context`` boxes of the bank."""

    def __init__(self, net: MotionNet):
        self.net = net
        self.kind = arch_of(net)
        self.context = net.context

    def observe(self, frame_index: int, box: BoundingBox) -> None:
        pass

    def predict(self, bank: HistoryBank, frame_index: int) -> BoundingBox | None:
        last = bank.last_frame
        steps = 1 if last is None else frame_index - last
        return _learned_forward(self.net, bank, steps)


@functools.lru_cache(maxsize=8)
def _cached_network(path: str, mtime_ns: int) -> MotionNet:
    return load_network(path)


def build_predictor(cfg: PredictorConfig) -> MotionPredictor:
    """A fresh predictor for one sequence.

    Networks are loaded once per weights file and shared. A filter given a
    weights file takes its noise model from that header-only container
    instead of ``cfg.kalman``.
    """
    if cfg.kind.learned:
        path = pathlib.Path(cfg.weights).resolve()
        return LearnedPredictor(_cached_network(str(path), path.stat().st_mtime_ns))
    if cfg.weights:
        kind, kalman = load_filter(cfg.weights)
        if kind != cfg.kind:
            raise WeightsFormatError(
                f"{cfg.weights}: holds a {kind.value} filter, configured for {cfg.kind.value}."
            )
        return FilterPredictor(kind, kalman)
    return FilterPredictor(cfg.kind, cfg.kalman)
