"""Learned motion predictors.

Both networks read a ``(batch, k, 8)`` window of normalized state rows and
emit a normalized ``(dx, dy, dw, dh)`` delta to add to the newest box.
Parameters are float64 throughout.
"""

import numpy as np
import torch
from torch import nn

from trackadapt.config import PredictorKind
from trackadapt.exceptions import DomainError
from trackadapt.geometry import BoundingBox
from trackadapt.motion.history import STATE_DIM, HistoryBank, denormalize_box, normalize_box


class LstmMotionNet(nn.Module):
    """Stacked LSTM over the window; a linear head reads the last step."""

    def __init__(self, context: int = 5, hidden_size: int = 64, num_layers: int = 4):
        super().__init__()
        self.context = context
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self.lstm = nn.LSTM(STATE_DIM, hidden_size, num_layers, batch_first=True)
        self.head = nn.Linear(hidden_size, 4)
        self.to(torch.float64)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out, _ = self.lstm(x)
        return self.head(out[:, -1, :])


class MlpMotionNet(nn.Module):
    """Two hidden layers over the flattened window."""

    def __init__(self, context: int = 5, hidden_size: int = 64):
        super().__init__()
        self.context = context
        self.hidden_size = hidden_size
        self.layers = nn.Sequential(
            nn.Flatten(),
            nn.Linear(context * STATE_DIM, hidden_size),
            nn.ReLU(),
            nn.Linear(hidden_size, hidden_size),
            nn.ReLU(),
            nn.Linear(hidden_size, 4),
        )
        self.to(torch.float64)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


MotionNet = LstmMotionNet | MlpMotionNet


def build_network(
    arch: PredictorKind,
    context: int = 5,
    hidden_size: int = 64,
    num_layers: int = 4,
    seed: int | None = None,
) -> MotionNet:
    """Construct a freshly initialized network.

    With ``seed`` set the initialization is drawn from a private RNG stream
    and does not disturb the global torch seed.
    """
    if context < 2:
        raise DomainError(f"context must be >= 2, got {context}.")

    def make() -> MotionNet:
        if arch == PredictorKind.LSTM:
            return LstmMotionNet(context, hidden_size, num_layers)
        if arch == PredictorKind.MLP:
            return MlpMotionNet(context, hidden_size)
        raise DomainError(f"No network for predictor kind {arch.value!r}.")

    if seed is None:
        return make()
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return make()


def arch_of(net: MotionNet) -> PredictorKind:
    return PredictorKind.LSTM if isinstance(net, LstmMotionNet) else PredictorKind.MLP


def parameter_count(net: nn.Module) -> int:
    return sum(p.numel() for p in net.parameters())


def flat_parameters(net: nn.Module) -> np.ndarray:
    """All parameters concatenated in ``named_parameters`` order."""
    with torch.no_grad():
        return torch.cat([p.reshape(-1) for p in net.parameters()]).numpy().astype(np.float64)


def load_flat_parameters(net: nn.Module, values: np.ndarray) -> None:
    """Inverse of :func:`flat_parameters`.

    Raises:
        DomainError: If the length does not match or values are non-finite.
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    expected = parameter_count(net)
    if values.size != expected:
        raise DomainError(f"Expected {expected} parameters, got {values.size}.")
    if not np.isfinite(values).all():
        raise DomainError("Network parameters must be finite.")
    offset = 0
    with torch.no_grad():
        for p in net.parameters():
            n = p.numel()
            p.copy_(torch.from_numpy(values[offset : offset + n].copy()).reshape(p.shape))
            offset += n


def zero_parameters(net: nn.Module) -> None:
    with torch.no_grad():
        for p in net.parameters():
            p.zero_()


def _learned_forward(net: MotionNet, bank: HistoryBank, steps: int) -> BoundingBox | None:
    last = bank.last_box
    if last is None:
        return None
    if len(bank) < 2:
        return last
    window = bank.features(net.context)[-net.context :]
    x = torch.from_numpy(window).unsqueeze(0)
    with torch.no_grad():
        delta = net(x)[0].numpy()
    pred = normalize_box(last, bank.image_size) + delta * steps
    return denormalize_box(pred, bank.image_size)


def recurrent_forward(net: LstmMotionNet, bank: HistoryBank, steps: int = 1) -> BoundingBox | None:
    """Next box from the stored history via the recurrent network.

    Fewer than two stored boxes falls back to the newest box (``None`` for
    an empty bank). ``steps`` frames ahead scales the predicted delta.
    """
    return _learned_forward(net, bank, steps)


def mlp_forward(net: MlpMotionNet, bank: HistoryBank, steps: int = 1) -> BoundingBox | None:
    """Same contract as :func:`recurrent_forward` for the perceptron."""
    return _learned_forward(net, bank, steps)
