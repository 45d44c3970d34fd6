"""Shared helpers for trackadapt commands and tools."""

import concurrent.futures
import dataclasses
import enum
import functools
import json
import logging
import math
import os
import pathlib
import tempfile
from collections.abc import Callable, Iterable
from typing import Any, TypeVar

import numpy as np
import yaml
from fastmcp.exceptions import ToolError
from pydantic import BaseModel, ValidationError

from trackadapt.exceptions import (
    AnnotationParseError,
    ConfigError,
    DomainError,
    EmptyCandidatesError,
    EmptyDatasetError,
    FilterDivergenceError,
    FilterStateError,
    FrameError,
    HistoryOrderError,
    MissingPromptError,
    TrainingDivergedError,
    WeightsFormatError,
)

LOG_LEVEL_ENV = "TRACKADAPT_LOG_LEVEL"

ModelT = TypeVar("ModelT", bound=BaseModel)
T = TypeVar("T")
R = TypeVar("R")


def configure_logging(level: str | None = None) -> None:
    """Attach a single stderr handler to the ``trackadapt`` logger.

    The level comes from ``level`` or ``$TRACKADAPT_LOG_LEVEL`` (default
    WARNING). Calling it twice does not duplicate handlers.
    """
    name = (level or os.environ.get(LOG_LEVEL_ENV) or "WARNING").upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ValueError(f"Invalid log level: {name!r}.")
    root = logging.getLogger("trackadapt")
    root.setLevel(numeric)
    if not any(getattr(h, "_trackadapt", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        )
        handler._trackadapt = True  # type: ignore[attr-defined]
        root.addHandler(handler)


def load_yaml_model(source: str | os.PathLike, model: type[ModelT]) -> ModelT:
    """Validate a YAML file into a pydantic model.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigError: If the file is empty, not a mapping, or fails validation.
    """
    path = pathlib.Path(source)
    text = path.read_text(encoding="utf-8")
    return load_yaml_model_str(text, model, origin=str(path))


def load_yaml_model_str(
    text: str, model: type[ModelT], origin: str = "<string>"
) -> ModelT:
    """Validate a YAML string into a pydantic model."""
    if not text or not text.strip():
        raise ConfigError(f"{origin}: expected a non-empty YAML mapping.")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{origin}: invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{origin}: expected a YAML mapping at top level.")
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{origin}: {e}") from e


def dump_yaml_model(obj: BaseModel) -> str:
    """Render a pydantic model as YAML that ``load_yaml_model_str`` reads back."""
    return yaml.safe_dump(obj.model_dump(mode="json"), sort_keys=False)


def run_ordered(
    func: Callable[[T], R], items: Iterable[T], jobs: int = 1
) -> list[R]:
    """Apply ``func`` to every item, in parallel when ``jobs > 1``.

    Results come back in input order regardless of completion order, so
    output files do not depend on scheduling.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def write_text_atomic(path: str | os.PathLike, text: str) -> pathlib.Path:
    """Write text so readers never observe a partially written file."""
    return write_bytes_atomic(path, text.encode("utf-8"))


def write_bytes_atomic(path: str | os.PathLike, data: bytes) -> pathlib.Path:
    target = pathlib.Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, target)
    except BaseException:
        pathlib.Path(tmp).unlink(missing_ok=True)
        raise
    return target


def safe_json_serialize(obj: Any, indent: int | None = 2) -> str:
    """Serialize trackadapt objects to a JSON string.

    Handles pydantic models, dataclasses, enums, numpy arrays and scalars,
    and paths by converting them to primitives before encoding. Non-finite
    floats become null.
    """
    return json.dumps(_make_serializable(obj), indent=indent, default=str)


def json_line(obj: Any) -> str:
    """One compact JSON record, for line-delimited trace files."""
    return json.dumps(_make_serializable(obj), separators=(",", ":"), default=str)


def _make_serializable(obj: Any) -> Any:
    """Recursively convert an object to a JSON-serializable form."""
    if obj is None or isinstance(obj, (str, bool, int)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, np.generic):
        return _make_serializable(obj.item())
    if isinstance(obj, np.ndarray):
        return [_make_serializable(v) for v in obj.tolist()]
    if isinstance(obj, BaseModel):
        return _make_serializable(obj.model_dump(mode="json"))
    # Dataclasses: iterate fields directly; asdict() deep-copies numpy masks.
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_json"):
            return _make_serializable(obj.to_json())
        return {
            f.name: _make_serializable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (set, frozenset)):
        try:
            return [_make_serializable(item) for item in sorted(obj)]
        except TypeError:
            return [_make_serializable(item) for item in obj]
    if isinstance(obj, dict):
        return {str(k): _make_serializable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_make_serializable(item) for item in obj]
    if isinstance(obj, pathlib.PurePath):
        return str(obj)
    try:
        json.dumps(obj)
        return obj
    except (TypeError, ValueError):
        return str(obj)


def _parse_annotation_format(value: str) -> Any:
    """Parse an annotation format name, with a clear error message.

    Raises:
        ValueError: If the value is not a supported format.
    """
    from trackadapt.annotations import AnnotationFormat

    try:
        return AnnotationFormat(value.lower())
    except ValueError:
        valid = ", ".join(f.value for f in AnnotationFormat)
        raise ValueError(
            f"Invalid annotation format: {value!r}. Must be one of: {valid}."
        )


def _parse_predictor_kind(value: str) -> Any:
    """Parse a motion predictor kind (kf, ekf, mlp, lstm), case-insensitive.

    Raises:
        ValueError: If the value is not a known predictor kind.
    """
    from trackadapt.config import PredictorKind

    try:
        return PredictorKind(value.lower())
    except ValueError:
        valid = ", ".join(k.value for k in PredictorKind)
        raise ValueError(f"Invalid predictor kind: {value!r}. Must be one of: {valid}.")


def handle_tracking_error(func):
    """Decorator that catches trackadapt exceptions and raises ToolError.

    This ensures errors are propagated via the MCP protocol's isError flag
    rather than being silently returned as successful JSON responses.
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ToolError:
            raise
        # --- Files and configuration ---
        except FileNotFoundError as e:
            raise ToolError(f"File not found: {e}") from e
        except ConfigError as e:
            raise ToolError(f"Invalid configuration: {e}") from e
        except ValidationError as e:
            raise ToolError(f"Invalid configuration: {e}") from e
        except AnnotationParseError as e:
            raise ToolError(f"Annotation error: {e}") from e
        except WeightsFormatError as e:
            raise ToolError(f"Invalid weights file: {e}") from e
        # --- Numerics ---
        except FilterDivergenceError as e:
            raise ToolError(f"Numerical error: {e}") from e
        except TrainingDivergedError as e:
            raise ToolError(
                f"Training diverged at epoch {e.epoch}, batch {e.batch}: {e}"
            ) from e
        except EmptyDatasetError as e:
            raise ToolError(f"Empty dataset: {e}") from e
        except FilterStateError as e:
            raise ToolError(f"Filter not initiated: {e}") from e
        # --- Tracking loop ---
        except FrameError as e:
            raise ToolError(f"Tracker failed at {e}") from e
        except (HistoryOrderError, EmptyCandidatesError, MissingPromptError) as e:
            raise ToolError(f"Invalid tracking input: {e}") from e
        except DomainError as e:
            raise ToolError(f"Invalid input: {e}") from e
        # --- Input / generic ---
        except ValueError as e:
            raise ToolError(f"Invalid input: {e}") from e
        except Exception as e:
            raise ToolError(f"{type(e).__name__}: {e}") from e

    return wrapper
