"""Trajectory-only training of the learned motion predictors."""

import dataclasses
import logging
from collections.abc import Callable, Sequence

import numpy as np
import torch
from torch.utils.data import DataLoader, Dataset

from trackadapt.annotations import TrajectoryAnnotation
from trackadapt.config import TrainingConfig
from trackadapt.exceptions import EmptyDatasetError, TrainingDivergedError
from trackadapt.geometry import BOX_LOSSES, iou
from trackadapt.motion.history import HistoryBank, normalize_box, state_features
from trackadapt.motion.networks import MotionNet, build_network
from trackadapt.motion.predictors import MotionPredictor

logger = logging.getLogger(__name__)


class TrajectoryWindowDataset(Dataset):
    """``k``-frame windows and the box that follows them.

    A window is taken only where ``k + 1`` consecutive frames are visible,
    so no window spans a disappearance.
    """

    def __init__(self, trajectories: Sequence[TrajectoryAnnotation], context: int):
        self.context = context
        features, last, target, scale = [], [], [], []
        for traj in trajectories:
            w, h = traj.image_size
            boxes = traj.boxes
            for t in range(context, traj.num_frames):
                window = boxes[t - context : t + 1]
                if any(b is None for b in window):
                    continue
                frames = list(range(t - context, t))
                features.append(state_features(frames, window[:-1], traj.image_size))
                last.append(normalize_box(window[-2], traj.image_size))
                target.append(normalize_box(window[-1], traj.image_size))
                scale.append([w, h, w, h])
        self.features = torch.tensor(np.array(features), dtype=torch.float64).reshape(-1, context, 8)
        self.last = torch.tensor(np.array(last), dtype=torch.float64).reshape(-1, 4)
        self.target = torch.tensor(np.array(target), dtype=torch.float64).reshape(-1, 4)
        self.scale = torch.tensor(np.array(scale), dtype=torch.float64).reshape(-1, 4)

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, idx):
        return self.features[idx], self.last[idx], self.target[idx], self.scale[idx]


def _to_pixels(pred_norm: torch.Tensor, scale: torch.Tensor) -> torch.Tensor:
    pred = pred_norm * scale
    return torch.cat([pred[:, :2], pred[:, 2:].clamp(min=0.0)], dim=1)


def predicted_pixels(net: MotionNet, batch) -> tuple[torch.Tensor, torch.Tensor]:
    """Predicted and ground-truth boxes of a batch, in pixels."""
    features, last, target, scale = batch
    return _to_pixels(last + net(features), scale), target * scale


def regression_loss(
    net: MotionNet,
    batch,
    cfg: TrainingConfig,
    ciou_alpha: torch.Tensor | None = None,
) -> torch.Tensor:
    """``lambda1 * MSE`` on normalized boxes plus ``lambda2 *`` the box loss in pixels.

    ``ciou_alpha`` pins the CIoU trade-off coefficient; by default it is
    recomputed from the batch without gradient.
    """
    features, last, target, scale = batch
    pred_norm = last + net(features)
    mse = torch.mean((pred_norm - target) ** 2)
    pred_px, gt_px = _to_pixels(pred_norm, scale), target * scale
    if cfg.box_loss == "ciou":
        box = BOX_LOSSES["ciou"](pred_px, gt_px, ciou_alpha)
    else:
        box = BOX_LOSSES[cfg.box_loss](pred_px, gt_px)
    return cfg.lambda1 * mse + cfg.lambda2 * box.mean()


@dataclasses.dataclass
class TrainingResult:
    net: MotionNet
    losses: list[float]
    num_windows: int

    def to_json(self) -> dict:
        return {"losses": self.losses, "num_windows": self.num_windows}


def train_mp(
    dataset: TrajectoryWindowDataset,
    cfg: TrainingConfig,
    on_epoch: Callable[[int, float], None] | None = None,
) -> TrainingResult:
    """Fit a network to ``dataset`` with Adam; returns it with the per-epoch mean loss.

    Identical ``cfg`` and dataset give identical weights.

    Raises:
        EmptyDatasetError: If the dataset has no windows.
        TrainingDivergedError: If a batch loss is NaN or infinite.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError(
            f"No {cfg.context + 1}-frame visible windows in the training trajectories."
        )
    if dataset.context != cfg.context:
        raise ValueError(f"Dataset context {dataset.context} != config context {cfg.context}.")
    net = build_network(
        cfg.arch, cfg.context, cfg.hidden_size, cfg.num_layers, seed=cfg.seed
    )
    generator = torch.Generator().manual_seed(cfg.seed)
    loader = DataLoader(dataset, batch_size=cfg.batch_size, shuffle=True, generator=generator)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    losses: list[float] = []
    net.train()
    for epoch in range(cfg.epochs):
        total, seen = 0.0, 0
        for batch_idx, batch in enumerate(loader):
            loss = regression_loss(net, batch, cfg)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss is {loss.item()}", epoch=epoch, batch=batch_idx
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            n = batch[0].shape[0]
            total += loss.item() * n
            seen += n
        losses.append(total / seen)
        logger.info("epoch %d/%d loss %.6f", epoch + 1, cfg.epochs, losses[-1])
        if on_epoch is not None:
            on_epoch(epoch, losses[-1])
    net.eval()
    return TrainingResult(net=net, losses=losses, num_windows=len(dataset))


def one_step_ious(
    make_predictor: Callable[[], MotionPredictor],
    trajectories: Sequence[TrajectoryAnnotation],
    context: int,
) -> list[float]:
    """IoU of each one-step prediction against the next visible box.

    A frame is scored where it and the ``context`` frames before it are all
    visible, the same windows :class:`TrajectoryWindowDataset` trains on.
    """
    scores = []
    for traj in trajectories:
        predictor = make_predictor()
        bank = HistoryBank(max(context, predictor.context), traj.image_size)
        for t, box in enumerate(traj.boxes):
            window = traj.boxes[max(0, t - context) : t + 1]
            if t >= context and all(b is not None for b in window):
                scores.append(iou(predictor.predict(bank, t), box))
            bank.push(t, box)
            if box is not None:
                predictor.observe(t, box)
    return scores


def mean_one_step_iou(
    make_predictor: Callable[[], MotionPredictor],
    trajectories: Sequence[TrajectoryAnnotation],
    context: int,
) -> float:
    scores = one_step_ious(make_predictor, trajectories, context)
    return float(np.mean(scores)) if scores else 0.0
