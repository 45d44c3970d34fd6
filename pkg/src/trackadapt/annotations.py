"""Ground-truth trajectories and the benchmark text formats they come in.

Two on-disk layouts are supported, one sequence per directory:

* ``lasot``: ``groundtruth.txt`` with one top-left ``x,y,w,h`` line per
  frame, plus optional ``full_occlusion.txt`` and ``out_of_view.txt`` that
  hold one 0/1 flag per frame.
* ``antiuav``: ``IR_label.json`` with parallel ``exist`` flags and
  top-left ``gt_rect`` boxes.

Tracker output files are ``<seq_id>.txt`` with one top-left ``x,y,w,h``
line per frame; an empty line, ``nan`` or a zero-area box means the tracker
declared the target absent.
"""

import dataclasses
import enum
import json
import math
import pathlib
import re
from collections.abc import Sequence

from trackadapt.exceptions import AnnotationParseError, DomainError
from trackadapt.geometry import BoundingBox, is_present
from trackadapt.helpers import write_text_atomic

LASOT_GT = "groundtruth.txt"
LASOT_OCCLUSION = "full_occlusion.txt"
LASOT_OUT_OF_VIEW = "out_of_view.txt"
ANTIUAV_LABEL = "IR_label.json"

_SEP = re.compile(r"[,\s]+")


class AnnotationFormat(str, enum.Enum):
    LASOT = "lasot"
    ANTIUAV = "antiuav"


@dataclasses.dataclass(frozen=True)
class TrajectoryAnnotation:
    """Per-frame ground truth of one sequence; ``None`` marks an invisible target."""

    seq_id: str
    boxes: tuple[BoundingBox | None, ...]
    image_size: tuple[int, int]

    def __post_init__(self):
        boxes = tuple(b if is_present(b) else None for b in self.boxes)
        object.__setattr__(self, "boxes", boxes)
        if not any(b is not None for b in boxes):
            raise DomainError(f"Sequence {self.seq_id!r} has no visible frame.")
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise DomainError(f"Image size must be positive, got {self.image_size}.")

    @classmethod
    def from_boxes(
        cls,
        seq_id: str,
        boxes: Sequence[BoundingBox | None],
        image_size: tuple[int, int] | None = None,
    ) -> "TrajectoryAnnotation":
        return cls(seq_id, tuple(boxes), image_size or tight_image_size(boxes))

    @property
    def num_frames(self) -> int:
        return len(self.boxes)

    @property
    def visible(self) -> list[bool]:
        return [b is not None for b in self.boxes]

    def translate(self, dx: float, dy: float) -> "TrajectoryAnnotation":
        moved = tuple(None if b is None else b.translate(dx, dy) for b in self.boxes)
        return dataclasses.replace(self, boxes=moved)


def tight_image_size(boxes: Sequence[BoundingBox | None]) -> tuple[int, int]:
    """Smallest integer ``(W, H)`` containing every box, at least 1x1."""
    present = [b for b in boxes if is_present(b)]
    if not present:
        return (1, 1)
    width = max(1, math.ceil(max(b.x2 for b in present)))
    height = max(1, math.ceil(max(b.y2 for b in present)))
    return (width, height)


def _parse_xywh(fields, path, line_no: int | None, what: str = "") -> BoundingBox | None:
    """Top-left ``x, y, w, h`` to a box; non-finite or zero-area means absent."""
    if len(fields) != 4:
        raise AnnotationParseError(
            f"{what}expected 4 values (x,y,w,h), got {len(fields)}", path=path, line=line_no
        )
    try:
        x, y, w, h = (float(v) for v in fields)
    except (TypeError, ValueError) as e:
        raise AnnotationParseError(f"{what}non-numeric value: {e}", path=path, line=line_no) from e
    if not all(math.isfinite(v) for v in (x, y, w, h)):
        return None
    if w < 0 or h < 0:
        raise AnnotationParseError(f"{what}negative box size ({w}, {h})", path=path, line=line_no)
    if w * h == 0:
        return None
    return BoundingBox.from_xywh(x, y, w, h)


def _is_absent_token(text: str) -> bool:
    try:
        return not math.isfinite(float(text))
    except ValueError:
        return False


def _read_box_lines(path: pathlib.Path, allow_blank: bool) -> list[BoundingBox | None]:
    """One box per line.

    With ``allow_blank`` every line is a frame: blank lines and a lone
    non-finite token (``nan``) are absent frames, including at the end of
    the file. Otherwise trailing blank lines are ignored and inner ones
    are errors.
    """
    lines = path.read_text(encoding="utf-8").splitlines()
    if not allow_blank:
        while lines and not lines[-1].strip():
            lines.pop()
    boxes: list[BoundingBox | None] = []
    for line_no, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            if not allow_blank:
                raise AnnotationParseError("blank line", path=path, line=line_no)
            boxes.append(None)
            continue
        fields = _SEP.split(text)
        if allow_blank and len(fields) == 1 and _is_absent_token(fields[0]):
            boxes.append(None)
            continue
        boxes.append(_parse_xywh(fields, path, line_no))
    return boxes


def _read_flags(path: pathlib.Path) -> list[bool]:
    text = path.read_text(encoding="utf-8").strip()
    if not text:
        return []
    flags = []
    for value in _SEP.split(text):
        if value not in ("0", "1"):
            raise AnnotationParseError(f"flag must be 0 or 1, got {value!r}", path=path)
        flags.append(value == "1")
    return flags


def _parse_lasot(seq_dir: pathlib.Path, gt_path: pathlib.Path) -> TrajectoryAnnotation:
    boxes = _read_box_lines(gt_path, allow_blank=False)
    for name in (LASOT_OCCLUSION, LASOT_OUT_OF_VIEW):
        flag_path = seq_dir / name
        if not flag_path.is_file():
            continue
        flags = _read_flags(flag_path)
        if len(flags) != len(boxes):
            raise AnnotationParseError(
                f"{len(flags)} flags for {len(boxes)} boxes in {gt_path.name}", path=flag_path
            )
        boxes = [None if hidden else b for b, hidden in zip(boxes, flags)]
    return _build(seq_dir.name, boxes, gt_path)


def _parse_antiuav(seq_dir: pathlib.Path, label_path: pathlib.Path) -> TrajectoryAnnotation:
    try:
        data = json.loads(label_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise AnnotationParseError(f"invalid JSON: {e.msg}", path=label_path, line=e.lineno) from e
    if not isinstance(data, dict) or "exist" not in data or "gt_rect" not in data:
        raise AnnotationParseError("expected 'exist' and 'gt_rect' keys", path=label_path)
    exist, rects = data["exist"], data["gt_rect"]
    if len(exist) != len(rects):
        raise AnnotationParseError(
            f"{len(exist)} exist flags for {len(rects)} gt_rect entries", path=label_path
        )
    boxes: list[BoundingBox | None] = []
    for i, (flag, rect) in enumerate(zip(exist, rects)):
        if not flag or not rect:
            boxes.append(None)
            continue
        if not isinstance(rect, list):
            raise AnnotationParseError(f"gt_rect[{i}]: expected a list, got {rect!r}", path=label_path)
        boxes.append(_parse_xywh(rect, label_path, None, what=f"gt_rect[{i}]: "))
    return _build(seq_dir.name, boxes, label_path)


def _build(seq_id: str, boxes, path) -> TrajectoryAnnotation:
    try:
        return TrajectoryAnnotation.from_boxes(seq_id, boxes)
    except DomainError as e:
        raise AnnotationParseError(str(e), path=path) from e


def parse_annotations(path: str | pathlib.Path, fmt: AnnotationFormat) -> TrajectoryAnnotation:
    """Load one sequence from its directory (or its annotation file).

    Raises:
        FileNotFoundError: If the annotation file is missing.
        AnnotationParseError: On malformed content or mismatched flag counts.
    """
    path = pathlib.Path(path)
    fmt = AnnotationFormat(fmt)
    filename = LASOT_GT if fmt == AnnotationFormat.LASOT else ANTIUAV_LABEL
    if path.is_dir():
        seq_dir, file = path, path / filename
    else:
        seq_dir, file = path.parent, path
    if not file.is_file():
        raise FileNotFoundError(f"No {fmt.value} annotation at {file}")
    if fmt == AnnotationFormat.LASOT:
        return _parse_lasot(seq_dir, file)
    return _parse_antiuav(seq_dir, file)


def discover_sequences(root: str | pathlib.Path, fmt: AnnotationFormat) -> list[pathlib.Path]:
    """Sequence directories under ``root``, sorted by sequence id."""
    root = pathlib.Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"Annotation directory not found: {root}")
    filename = LASOT_GT if AnnotationFormat(fmt) == AnnotationFormat.LASOT else ANTIUAV_LABEL
    dirs = {p.parent for p in root.rglob(filename)}
    return sorted(dirs, key=lambda d: (d.name, str(d)))


def load_annotation_dir(
    root: str | pathlib.Path, fmt: AnnotationFormat
) -> list[TrajectoryAnnotation]:
    return [parse_annotations(d, fmt) for d in discover_sequences(root, fmt)]


def write_annotation(
    traj: TrajectoryAnnotation, out_dir: str | pathlib.Path, fmt: AnnotationFormat
) -> pathlib.Path:
    """Write one sequence as ``out_dir/<seq_id>/`` in the given format."""
    seq_dir = pathlib.Path(out_dir) / traj.seq_id
    if AnnotationFormat(fmt) == AnnotationFormat.LASOT:
        lines = [",".join(_fmt(v) for v in b.to_xywh()) if b else "0,0,0,0" for b in traj.boxes]
        write_text_atomic(seq_dir / LASOT_GT, "\n".join(lines) + "\n")
        occlusion = ",".join("0" if b else "1" for b in traj.boxes)
        write_text_atomic(seq_dir / LASOT_OCCLUSION, occlusion + "\n")
        write_text_atomic(seq_dir / LASOT_OUT_OF_VIEW, ",".join("0" for _ in traj.boxes) + "\n")
    else:
        label = {
            "exist": [1 if b else 0 for b in traj.boxes],
            "gt_rect": [list(b.to_xywh()) if b else [] for b in traj.boxes],
        }
        write_text_atomic(seq_dir / ANTIUAV_LABEL, json.dumps(label))
    return seq_dir


def _fmt(value: float) -> str:
    return format(value, ".12g")


# ---------------------------------------------------------------------------
# Tracker output files
# ---------------------------------------------------------------------------


def parse_predictions(path: str | pathlib.Path) -> list[BoundingBox | None]:
    """Read a tracker output file; absent frames come back as ``None``."""
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Prediction file not found: {path}")
    return _read_box_lines(path, allow_blank=True)


def format_predictions(boxes: Sequence[BoundingBox | None]) -> str:
    """Absent frames are written as a zero box so the line count is preserved."""
    lines = [",".join(_fmt(v) for v in b.to_xywh()) if is_present(b) else "0,0,0,0" for b in boxes]
    return "".join(f"{line}\n" for line in lines)


def write_predictions(path: str | pathlib.Path, boxes: Sequence[BoundingBox | None]) -> pathlib.Path:
    return write_text_atomic(path, format_predictions(boxes))
