"""Trained-weights container.

Layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"TAMP"
    4       2     format version (uint16), currently 1
    6       4     header length N (uint32)
    10      N     UTF-8 JSON header, keys sorted
    10+N    8*P   P float64 parameters, little-endian

The header holds ``arch`` (kf|ekf|mlp|lstm), ``context``, ``normalized``,
``param_count`` and the architecture fields (``hidden_size``, and
``num_layers`` for the LSTM). Filters have no parameters: their container
is header-only and carries the noise model under ``kalman``. The same
inputs always produce the same bytes.
"""

import json
import logging
import pathlib
import struct

import numpy as np
from pydantic import ValidationError

from trackadapt.config import KalmanConfig, PredictorKind
from trackadapt.exceptions import DomainError, WeightsFormatError
from trackadapt.helpers import write_bytes_atomic
from trackadapt.motion.networks import (
    LstmMotionNet,
    MotionNet,
    arch_of,
    build_network,
    flat_parameters,
    load_flat_parameters,
)

logger = logging.getLogger(__name__)

MAGIC = b"TAMP"
VERSION = 1
_PREFIX = struct.Struct("<4sHI")


def encode_weights(header: dict, params: np.ndarray) -> bytes:
    params = np.ascontiguousarray(params, dtype="<f8").reshape(-1)
    header = {**header, "param_count": int(params.size)}
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(blob)) + blob + params.tobytes()


def decode_weights(data: bytes, origin: str = "<bytes>") -> tuple[dict, np.ndarray]:
    """Split a weights file into its header and parameter vector.

    Raises:
        WeightsFormatError: On a bad magic, unknown version, corrupt header,
            truncated parameters or non-finite values.
    """
    if len(data) < _PREFIX.size:
        raise WeightsFormatError(f"{origin}: file too short for a weights header.")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise WeightsFormatError(f"{origin}: not a trackadapt weights file.")
    if version != VERSION:
        raise WeightsFormatError(f"{origin}: unsupported weights version {version}.")
    start = _PREFIX.size
    try:
        header = json.loads(data[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WeightsFormatError(f"{origin}: corrupt header: {e}") from e
    if not isinstance(header, dict) or "arch" not in header or "param_count" not in header:
        raise WeightsFormatError(f"{origin}: header lacks 'arch' or 'param_count'.")
    body = data[start + header_len :]
    count = int(header["param_count"])
    if len(body) != 8 * count:
        raise WeightsFormatError(
            f"{origin}: expected {count} parameters ({8 * count} bytes), got {len(body)} bytes."
        )
    params = np.frombuffer(body, dtype="<f8").astype(np.float64)
    if not np.isfinite(params).all():
        raise WeightsFormatError(f"{origin}: parameters contain NaN or Inf.")
    return header, params


def network_header(net: MotionNet) -> dict:
    header = {
        "arch": arch_of(net).value,
        "context": net.context,
        "normalized": True,
        "hidden_size": net.hidden_size,
    }
    if isinstance(net, LstmMotionNet):
        header["num_layers"] = net.num_layers
    return header


def save_network(path: str | pathlib.Path, net: MotionNet) -> pathlib.Path:
    out = write_bytes_atomic(path, encode_weights(network_header(net), flat_parameters(net)))
    logger.info("Wrote %s weights to %s", arch_of(net).value, out)
    return out


def read_weights(path: str | pathlib.Path) -> tuple[dict, np.ndarray]:
    path = pathlib.Path(path)
    return decode_weights(path.read_bytes(), origin=str(path))


def load_network(path: str | pathlib.Path) -> MotionNet:
    """Rebuild a trained network from a weights file.

    Raises:
        FileNotFoundError: If the file does not exist.
        WeightsFormatError: If the file is malformed or holds a filter.
    """
    header, params = read_weights(path)
    try:
        arch = PredictorKind(header["arch"])
    except ValueError as e:
        raise WeightsFormatError(f"{path}: unknown arch {header['arch']!r}.") from e
    if not arch.learned:
        raise WeightsFormatError(f"{path}: holds a {arch.value} filter, not a network.")
    try:
        net = build_network(
            arch,
            context=int(header["context"]),
            hidden_size=int(header["hidden_size"]),
            num_layers=int(header.get("num_layers", 1)),
        )
        load_flat_parameters(net, params)
    except (KeyError, DomainError) as e:
        raise WeightsFormatError(f"{path}: {e}") from e
    net.eval()
    return net


def save_filter(
    path: str | pathlib.Path, kind: PredictorKind, cfg: KalmanConfig | None = None
) -> pathlib.Path:
    """Write a header-only container for a KF or EKF predictor."""
    if kind.learned:
        raise DomainError(f"{kind.value!r} is a network; use save_network.")
    cfg = cfg or KalmanConfig()
    header = {
        "arch": kind.value,
        "context": 2,
        "normalized": False,
        "kalman": cfg.model_dump(mode="json"),
    }
    out = write_bytes_atomic(path, encode_weights(header, np.zeros(0)))
    logger.info("Wrote %s filter config to %s", kind.value, out)
    return out


def load_filter(path: str | pathlib.Path) -> tuple[PredictorKind, KalmanConfig]:
    """Predictor kind and noise model from a filter container.

    Raises:
        FileNotFoundError: If the file does not exist.
        WeightsFormatError: If the file is malformed or holds a network.
    """
    header, params = read_weights(path)
    try:
        kind = PredictorKind(header["arch"])
    except ValueError as e:
        raise WeightsFormatError(f"{path}: unknown arch {header['arch']!r}.") from e
    if kind.learned:
        raise WeightsFormatError(f"{path}: holds a {kind.value} network, not a filter.")
    if params.size:
        raise WeightsFormatError(f"{path}: filter container carries {params.size} parameters.")
    try:
        cfg = KalmanConfig.model_validate(header.get("kalman", {}))
    except ValidationError as e:
        raise WeightsFormatError(f"{path}: invalid kalman block: {e}") from e
    return kind, cfg
