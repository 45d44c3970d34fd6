"""Configuration models.

Every block is a frozen pydantic model that rejects unknown keys, so YAML
typos fail loudly. Defaults are the tracker's baseline operating point.
"""

import enum
import pathlib
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from trackadapt.helpers import dump_yaml_model, load_yaml_model, load_yaml_model_str


class PredictorKind(str, enum.Enum):
    KF = "kf"
    EKF = "ekf"
    MLP = "mlp"
    LSTM = "lstm"

    @property
    def learned(self) -> bool:
        return self in (PredictorKind.MLP, PredictorKind.LSTM)


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class KalmanConfig(_Block):
    """Noise model for the KF/EKF predictors.

    Standard deviations are the weights times the box width (x, w terms) or
    height (y, h terms), the usual convention for pixel-space box filters.
    """

    process_position_weight: float = Field(1.0 / 20, ge=0.0)
    process_velocity_weight: float = Field(1.0 / 160, ge=0.0)
    measurement_weight: float = Field(1.0 / 20, ge=0.0)
    initial_position_weight: float = Field(2.0 / 20, ge=0.0)
    initial_velocity_weight: float = Field(10.0 / 160, ge=0.0)
    min_std: float = Field(1e-6, ge=0.0)
    # EKF coordinated-turn model
    motion_model: Literal["linear", "turn"] = "turn"
    turn_rate_std: float = Field(0.02, ge=0.0)
    initial_turn_rate_std: float = Field(0.2, ge=0.0)


class TrainingConfig(_Block):
    """Motion-predictor training run: ``loss = lambda1 * MSE + lambda2 * box loss``."""

    arch: PredictorKind = PredictorKind.LSTM
    lambda1: float = Field(1.0, ge=0.0)
    lambda2: float = Field(1.0, ge=0.0)
    box_loss: Literal["ciou", "diou", "iou"] = "ciou"
    context: int = Field(5, ge=2)
    learning_rate: float = Field(1e-3, gt=0.0)
    epochs: int = Field(30, ge=1)
    batch_size: int = Field(64, ge=1)
    seed: int = 0
    hidden_size: int = Field(64, ge=1)
    num_layers: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.lambda1 == 0 and self.lambda2 == 0:
            raise ValueError("lambda1 and lambda2 cannot both be zero.")
        if not self.arch.learned:
            raise ValueError(f"arch must be 'mlp' or 'lstm', got {self.arch.value!r}.")
        return self


class SelectorWeights(_Block):
    alpha: float = Field(0.85, ge=0.0)
    beta_ar: float = Field(0.15, ge=0.0)
    beta_area: float = Field(0.10, ge=0.0)
    gamma: float = Field(0.15, ge=0.0)

    @model_validator(mode="after")
    def _check(self):
        if self.alpha + self.beta_ar + self.beta_area + self.gamma <= 0:
            raise ValueError("At least one selector weight must be positive.")
        return self


class EdrmConfig(_Block):
    """Detection (sigma) and recovery (tau) thresholds plus the prototype window."""

    sigma_ar: float = Field(0.40, ge=0.0, le=1.0)
    sigma_a: float = Field(0.40, ge=0.0, le=1.0)
    sigma_s: float = Field(0.10, ge=0.0, le=1.0)
    tau_ar: float = Field(0.40, ge=0.0, le=1.0)
    tau_a: float = Field(0.40, ge=0.0, le=1.0)
    tau_s: float = Field(0.60, ge=0.0, le=1.0)
    window: int = Field(5, ge=1)


class TambConfig(_Block):
    pool_size: int = Field(30, ge=2)
    slots: int = Field(6, ge=2)
    mu_iou: float = Field(0.50, ge=0.0, le=1.0)
    mu_obj: float = Field(0.50, ge=0.0, le=1.0)
    mu_m: float = Field(0.00, ge=0.0, le=1.0)
    delta: float = Field(1.0, ge=0.0)
    epsilon: float = Field(1.0, ge=0.0)
    zeta: float = Field(1.0, ge=0.0)

    @model_validator(mode="after")
    def _check(self):
        if self.pool_size < self.slots:
            raise ValueError(
                f"pool_size ({self.pool_size}) must be >= slots ({self.slots})."
            )
        return self


class NonlinConfig(_Block):
    accel_mag_thresh: float = Field(20.0, gt=0.0)
    angle_dev_thresh: float = Field(3.0, gt=0.0)
    jerk_thresh: float = Field(20.0, gt=0.0)
    video_frac_thresh: float = Field(0.45, gt=0.0, lt=1.0)


class ModuleSwitches(_Block):
    """Disabled modules fall back to the plain segmenter behaviour."""

    mp: bool = True
    edrm: bool = True
    tamb: bool = True


class CueSwitches(_Block):
    geometry: bool = True
    motion: bool = True
    edrm_geometry: bool = True
    edrm_semantic: bool = True
    tamb_motion: bool = True


class PredictorConfig(_Block):
    kind: PredictorKind = PredictorKind.KF
    weights: str | None = None
    kalman: KalmanConfig = KalmanConfig()

    @model_validator(mode="after")
    def _check(self):
        if self.kind.learned and not self.weights:
            raise ValueError(f"Predictor {self.kind.value!r} needs a weights file.")
        if self.weights and not pathlib.Path(self.weights).is_file():
            raise ValueError(f"Weights file not found: {self.weights}")
        return self


class TrackerConfig(_Block):
    predictor: PredictorConfig = PredictorConfig()
    selector: SelectorWeights = SelectorWeights()
    edrm: EdrmConfig = EdrmConfig()
    tamb: TambConfig = TambConfig()
    modules: ModuleSwitches = ModuleSwitches()
    cues: CueSwitches = CueSwitches()

    def with_ablation(
        self, *, no_mp: bool = False, no_edrm: bool = False, no_tamb: bool = False
    ) -> "TrackerConfig":
        """Copy with the given modules switched off."""
        modules = ModuleSwitches(
            mp=self.modules.mp and not no_mp,
            edrm=self.modules.edrm and not no_edrm,
            tamb=self.modules.tamb and not no_tamb,
        )
        return self.model_copy(update={"modules": modules})


def default_tracker_config() -> TrackerConfig:
    return TrackerConfig()


def load_tracker_config(path: str | pathlib.Path) -> TrackerConfig:
    return load_yaml_model(path, TrackerConfig)


def load_training_config(path: str | pathlib.Path) -> TrainingConfig:
    return load_yaml_model(path, TrainingConfig)


def load_nonlin_config(path: str | pathlib.Path) -> NonlinConfig:
    return load_yaml_model(path, NonlinConfig)


def dump_config(cfg: BaseModel) -> str:
    return dump_yaml_model(cfg)


def parse_tracker_config(text: str) -> TrackerConfig:
    return load_yaml_model_str(text, TrackerConfig)
