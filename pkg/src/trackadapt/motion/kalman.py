"""Kalman-type box filters.

:class:`KalmanBoxFilter` is the constant-velocity filter on the 8-dim state
``[x, y, w, h, dx, dy, dw, dh]``. :class:`ExtendedKalmanFilter` runs the
same predict/correct cycle around an arbitrary differentiable transition,
given as a :class:`TransitionModel`. Both observe ``(x, y, w, h)`` directly
and scale their noise with the current box size.
"""

import math
from typing import Protocol

import numpy as np
import scipy.linalg

from trackadapt.config import KalmanConfig
from trackadapt.exceptions import FilterDivergenceError, FilterStateError
from trackadapt.geometry import BoundingBox
from trackadapt.motion.history import STATE_DIM, StateVector

NDIM = 4


def _size_scale(mean: np.ndarray) -> np.ndarray:
    w, h = max(abs(mean[2]), 1.0), max(abs(mean[3]), 1.0)
    return np.array([w, h, w, h])


def _process_std(mean: np.ndarray, cfg: KalmanConfig) -> np.ndarray:
    scale = _size_scale(mean)
    std = np.r_[cfg.process_position_weight * scale, cfg.process_velocity_weight * scale]
    return np.maximum(std, cfg.min_std)


def _measurement_std(mean: np.ndarray, cfg: KalmanConfig) -> np.ndarray:
    return np.maximum(cfg.measurement_weight * _size_scale(mean), cfg.min_std)


def _initial_std(measurement: np.ndarray, cfg: KalmanConfig) -> np.ndarray:
    scale = _size_scale(measurement)
    std = np.r_[cfg.initial_position_weight * scale, cfg.initial_velocity_weight * scale]
    return np.maximum(std, cfg.min_std)


def _correct(
    mean: np.ndarray,
    covariance: np.ndarray,
    measurement: np.ndarray,
    measurement_cov: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Correction step for an observation of the first four state entries.

    Raises:
        FilterDivergenceError: If the innovation covariance is not positive
            definite.
    """
    dim = mean.shape[0]
    update_mat = np.eye(NDIM, dim)
    projected_mean = update_mat @ mean
    projected_cov = update_mat @ covariance @ update_mat.T + measurement_cov
    try:
        chol_factor, lower = scipy.linalg.cho_factor(projected_cov, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise FilterDivergenceError(
            f"Innovation covariance is not positive definite: {e}",
            innovation_cov=projected_cov,
            state=mean,
        ) from e
    kalman_gain = scipy.linalg.cho_solve(
        (chol_factor, lower), (covariance @ update_mat.T).T, check_finite=False
    ).T
    innovation = measurement - projected_mean
    new_mean = mean + kalman_gain @ innovation
    # Joseph form keeps the covariance symmetric positive semi-definite
    i_kh = np.eye(dim) - kalman_gain @ update_mat
    new_cov = i_kh @ covariance @ i_kh.T + kalman_gain @ measurement_cov @ kalman_gain.T
    return new_mean, new_cov


def _box_of(mean: np.ndarray) -> BoundingBox:
    return StateVector.from_array(mean[:STATE_DIM]).box


class KalmanBoxFilter:
    """Constant-velocity Kalman filter for one box track.

    Examples:
        >>> kf = KalmanBoxFilter()
        >>> kf.initiate(BoundingBox(10, 10, 4, 4))
        >>> kf.update(BoundingBox(12, 10, 4, 4))
        >>> kf.predicted_box()
    """

    def __init__(self, cfg: KalmanConfig | None = None):
        self.cfg = cfg or KalmanConfig()
        self._motion_mat = np.eye(STATE_DIM)
        for i in range(NDIM):
            self._motion_mat[i, NDIM + i] = 1.0
        self.mean: np.ndarray | None = None
        self.covariance: np.ndarray | None = None

    @property
    def initiated(self) -> bool:
        return self.mean is not None

    def _require_state(self) -> None:
        if self.mean is None:
            raise FilterStateError("Kalman filter used before initiate().")

    def initiate(self, box: BoundingBox) -> None:
        """Start a track at ``box`` with zero velocity."""
        measurement = np.array(box.as_tuple(), dtype=np.float64)
        self.mean = np.r_[measurement, np.zeros(NDIM)]
        self.covariance = np.diag(np.square(_initial_std(measurement, self.cfg)))

    def predict(self, steps: int = 1) -> None:
        """Propagate the state ``steps`` frames forward."""
        self._require_state()
        for _ in range(steps):
            motion_cov = np.diag(np.square(_process_std(self.mean, self.cfg)))
            self.mean = self._motion_mat @ self.mean
            self.covariance = (
                self._motion_mat @ self.covariance @ self._motion_mat.T + motion_cov
            )

    def update(self, box: BoundingBox, steps: int = 1) -> None:
        """Predict ``steps`` frames, then correct with the observed ``box``."""
        self.predict(steps)
        measurement = np.array(box.as_tuple(), dtype=np.float64)
        r = np.diag(np.square(_measurement_std(self.mean, self.cfg)))
        self.mean, self.covariance = _correct(self.mean, self.covariance, measurement, r)

    def predicted_box(self, steps: int = 1) -> BoundingBox:
        """Box part of the state ``steps`` frames ahead; the filter is unchanged."""
        self._require_state()
        mean = self.mean
        for _ in range(steps):
            mean = self._motion_mat @ mean
        return _box_of(mean)

    @property
    def state(self) -> StateVector:
        self._require_state()
        return StateVector.from_array(self.mean)


def kf_predict(state: StateVector | None) -> BoundingBox:
    """One constant-velocity step: each velocity is added to its position.

    Raises:
        FilterStateError: If ``state`` is missing.
    """
    if state is None:
        raise FilterStateError("No filter state to predict from.")
    s = state.as_array()
    return StateVector.from_array(np.r_[s[:NDIM] + s[NDIM:], s[NDIM:]]).box


# ---------------------------------------------------------------------------
# Extended Kalman filter
# ---------------------------------------------------------------------------


class TransitionModel(Protocol):
    """A differentiable one-frame state transition."""

    dim: int

    def initial_state(self, box: BoundingBox, cfg: KalmanConfig) -> tuple[np.ndarray, np.ndarray]: ...

    def transition(self, x: np.ndarray) -> np.ndarray: ...

    def jacobian(self, x: np.ndarray) -> np.ndarray: ...

    def process_cov(self, x: np.ndarray, cfg: KalmanConfig) -> np.ndarray: ...


class LinearVelocityModel:
    """The constant-velocity transition written as a transition model."""

    dim = STATE_DIM

    def __init__(self):
        self._motion_mat = np.eye(STATE_DIM)
        for i in range(NDIM):
            self._motion_mat[i, NDIM + i] = 1.0

    def initial_state(self, box, cfg):
        measurement = np.array(box.as_tuple(), dtype=np.float64)
        return np.r_[measurement, np.zeros(NDIM)], np.diag(np.square(_initial_std(measurement, cfg)))

    def transition(self, x):
        return self._motion_mat @ x

    def jacobian(self, x):
        return self._motion_mat

    def process_cov(self, x, cfg):
        return np.diag(np.square(_process_std(x, cfg)))


def _turn_coefficients(omega: float) -> tuple[float, float, float, float]:
    """``sin(w)/w``, ``(1-cos(w))/w`` and their derivatives in ``w``."""
    if abs(omega) < 1e-6:
        return 1.0 - omega**2 / 6.0, omega / 2.0, -omega / 3.0, 0.5 - omega**2 / 8.0
    s, c = math.sin(omega), math.cos(omega)
    a = s / omega
    b = (1.0 - c) / omega
    da = (omega * c - s) / omega**2
    db = (omega * s - (1.0 - c)) / omega**2
    return a, b, da, db


class CoordinatedTurnModel:
    """Constant speed along an arc with turn rate ``omega`` rad/frame.

    The state is the 8-dim box state plus ``omega``. With
    ``estimate_turn_rate=False`` the turn rate is held at ``turn_rate`` and
    the state stays 8-dim.
    """

    def __init__(self, turn_rate: float = 0.0, estimate_turn_rate: bool = True):
        self.turn_rate = turn_rate
        self.estimate_turn_rate = estimate_turn_rate
        self.dim = STATE_DIM + 1 if estimate_turn_rate else STATE_DIM

    def _omega(self, x: np.ndarray) -> float:
        return float(x[STATE_DIM]) if self.estimate_turn_rate else self.turn_rate

    def initial_state(self, box, cfg):
        measurement = np.array(box.as_tuple(), dtype=np.float64)
        std = _initial_std(measurement, cfg)
        mean = np.r_[measurement, np.zeros(NDIM)]
        if self.estimate_turn_rate:
            mean = np.r_[mean, self.turn_rate]
            std = np.r_[std, max(cfg.initial_turn_rate_std, cfg.min_std)]
        return mean, np.diag(np.square(std))

    def transition(self, x):
        omega = self._omega(x)
        a, b, _, _ = _turn_coefficients(omega)
        s, c = math.sin(omega), math.cos(omega)
        vx, vy = x[4], x[5]
        out = x.copy()
        out[0] = x[0] + a * vx - b * vy
        out[1] = x[1] + b * vx + a * vy
        out[2] = x[2] + x[6]
        out[3] = x[3] + x[7]
        out[4] = c * vx - s * vy
        out[5] = s * vx + c * vy
        return out

    def jacobian(self, x):
        omega = self._omega(x)
        a, b, da, db = _turn_coefficients(omega)
        s, c = math.sin(omega), math.cos(omega)
        vx, vy = x[4], x[5]
        jac = np.eye(self.dim)
        jac[0, 4], jac[0, 5] = a, -b
        jac[1, 4], jac[1, 5] = b, a
        jac[2, 6] = 1.0
        jac[3, 7] = 1.0
        jac[4, 4], jac[4, 5] = c, -s
        jac[5, 4], jac[5, 5] = s, c
        if self.estimate_turn_rate:
            jac[0, 8] = da * vx - db * vy
            jac[1, 8] = db * vx + da * vy
            jac[4, 8] = -s * vx - c * vy
            jac[5, 8] = c * vx - s * vy
        return jac

    def process_cov(self, x, cfg):
        std = _process_std(x, cfg)
        if self.estimate_turn_rate:
            std = np.r_[std, max(cfg.turn_rate_std, cfg.min_std)]
        return np.diag(np.square(std))


class ExtendedKalmanFilter:
    """EKF over a :class:`TransitionModel` with a direct box observation."""

    def __init__(self, model: TransitionModel, cfg: KalmanConfig | None = None):
        self.model = model
        self.cfg = cfg or KalmanConfig()
        self.mean: np.ndarray | None = None
        self.covariance: np.ndarray | None = None

    @property
    def initiated(self) -> bool:
        return self.mean is not None

    def _require_state(self) -> None:
        if self.mean is None:
            raise FilterStateError("Extended Kalman filter used before initiate().")

    def initiate(self, box: BoundingBox) -> None:
        self.mean, self.covariance = self.model.initial_state(box, self.cfg)

    def predict(self, steps: int = 1) -> None:
        self._require_state()
        for _ in range(steps):
            jac = self.model.jacobian(self.mean)
            q = self.model.process_cov(self.mean, self.cfg)
            self.mean = self.model.transition(self.mean)
            self.covariance = jac @ self.covariance @ jac.T + q

    def update(self, box: BoundingBox, steps: int = 1) -> None:
        self.predict(steps)
        measurement = np.array(box.as_tuple(), dtype=np.float64)
        r = np.diag(np.square(_measurement_std(self.mean, self.cfg)))
        self.mean, self.covariance = _correct(self.mean, self.covariance, measurement, r)

    def predicted_box(self, steps: int = 1) -> BoundingBox:
        self._require_state()
        mean = self.mean
        for _ in range(steps):
            mean = self.model.transition(mean)
        return _box_of(mean)

    @property
    def state(self) -> StateVector:
        self._require_state()
        return StateVector.from_array(self.mean[:STATE_DIM])


def ekf_predict(state: StateVector | None, model: TransitionModel) -> BoundingBox:
    """One transition of ``model`` from ``state``; the box part of the result.

    For models with extra state (the estimated turn rate) the extra entries
    are taken from the model's defaults.

    Raises:
        FilterStateError: If ``state`` is missing.
    """
    if state is None:
        raise FilterStateError("No filter state to predict from.")
    x = state.as_array()
    if model.dim > STATE_DIM:
        x = np.r_[x, getattr(model, "turn_rate", 0.0)]
    return _box_of(model.transition(x))


def build_filter(kind: str, cfg: KalmanConfig | None = None) -> KalmanBoxFilter | ExtendedKalmanFilter:
    """``"kf"`` or ``"ekf"``; the EKF model follows ``cfg.motion_model``."""
    cfg = cfg or KalmanConfig()
    if kind == "kf":
        return KalmanBoxFilter(cfg)
    if kind == "ekf":
        model = CoordinatedTurnModel() if cfg.motion_model == "turn" else LinearVelocityModel()
        return ExtendedKalmanFilter(model, cfg)
    raise ValueError(f"Unknown filter kind: {kind!r}.")
