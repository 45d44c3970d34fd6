"""Box algebra, overlap metrics, similarity functions and IoU-family losses.

Boxes are center-based ``(cx, cy, w, h)`` in pixels. Corner and top-left
formats are converted at I/O boundaries only. ``None`` stands for "no box"
(empty mask, absent target) and overlaps nothing.

Scalar functions take :class:`BoundingBox` values and return floats. The
``*_t`` functions take ``(..., 4)`` float tensors in the same layout and are
differentiable; training uses them directly, the scalar loss wrappers call
them in float64.
"""

import dataclasses
import math

import numpy as np
import torch

from trackadapt.exceptions import DomainError


@dataclasses.dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned, center-based box. ``w * h == 0`` marks a degenerate box."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"BoundingBox.{name} must be finite, got {value!r}.")
        if self.w < 0 or self.h < 0:
            raise DomainError(f"BoundingBox size must be >= 0, got w={self.w}, h={self.h}.")

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> "BoundingBox":
        """From a top-left corner plus size."""
        return cls(x + w / 2.0, y + h / 2.0, w, h)

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "BoundingBox":
        return cls((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)

    @property
    def x1(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def y1(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def x2(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def y2(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def is_degenerate(self) -> bool:
        return self.w * self.h == 0

    @property
    def aspect_ratio(self) -> float:
        """Width over height; 0 for a degenerate box."""
        return self.w / self.h if self.h > 0 else 0.0

    def to_xywh(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.w, self.h)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h)

    def translate(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.cx + dx, self.cy + dy, self.w, self.h)

    def scale(self, s: float) -> "BoundingBox":
        """Scale coordinates and size about the origin."""
        return BoundingBox(self.cx * s, self.cy * s, self.w * s, self.h * s)

    def to_json(self) -> list[float]:
        return [self.cx, self.cy, self.w, self.h]


@dataclasses.dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean ``height x width`` grid, row-major."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise DomainError(f"BinaryMask needs a 2-D grid, got shape {bits.shape}.")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_box(cls, box: "BoundingBox | None", width: int, height: int) -> "BinaryMask":
        """Rasterize a box: pixel ``(col, row)`` is set when its center lies inside."""
        bits = np.zeros((height, width), dtype=bool)
        if box is not None and not box.is_degenerate:
            c0 = max(0, math.ceil(box.x1 - 0.5))
            c1 = min(width, math.ceil(box.x2 - 0.5))
            r0 = max(0, math.ceil(box.y1 - 0.5))
            r1 = min(height, math.ceil(box.y2 - 0.5))
            if c1 > c0 and r1 > r0:
                bits[r0:r1, c0:c1] = True
        return cls(bits)

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    @property
    def is_empty(self) -> bool:
        return not bool(self.bits.any())

    def downsample_any(self, grid_h: int, grid_w: int) -> np.ndarray:
        """Pool to ``grid_h x grid_w``; a cell is set when any pixel in it is set.

        Raises:
            DomainError: If the grid is finer than the mask.
        """
        if grid_h > self.height or grid_w > self.width:
            raise DomainError(
                f"Cannot pool a {self.height}x{self.width} mask to a finer "
                f"{grid_h}x{grid_w} grid."
            )
        rows = np.floor(np.linspace(0, self.height, grid_h + 1)[:-1]).astype(int)
        cols = np.floor(np.linspace(0, self.width, grid_w + 1)[:-1]).astype(int)
        pooled = np.logical_or.reduceat(self.bits, rows, axis=0)
        return np.logical_or.reduceat(pooled, cols, axis=1)

    def to_json(self) -> dict:
        return {"width": self.width, "height": self.height, "area": int(self.bits.sum())}


def is_present(box: BoundingBox | None) -> bool:
    """True for a box with positive area."""
    return box is not None and not box.is_degenerate


def iou(a: BoundingBox | None, b: BoundingBox | None) -> float:
    """Intersection over union; 0 when either box is degenerate or missing."""
    if not is_present(a) or not is_present(b):
        return 0.0
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def sim_ratio(x: float, y: float) -> float:
    """``min(x, y) / max(x, y)`` with ``sim_ratio(0, 0) = 1``.

    Raises:
        DomainError: If either input is negative.
    """
    if x < 0 or y < 0:
        raise DomainError(f"sim_ratio needs non-negative inputs, got ({x}, {y}).")
    hi = max(x, y)
    if hi == 0:
        return 1.0
    return min(x, y) / hi


def cosine_similarity(u: np.ndarray | None, v: np.ndarray | None) -> float:
    """Cosine of the angle between two vectors; 0 if either is missing or zero."""
    if u is None or v is None:
        return 0.0
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def box_from_mask(m: BinaryMask) -> BoundingBox | None:
    """Tightest box around the set pixels, ``None`` for an all-zero mask."""
    rows = np.flatnonzero(m.bits.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(m.bits.any(axis=0))
    return BoundingBox.from_corners(
        float(cols[0]), float(rows[0]), float(cols[-1] + 1), float(rows[-1] + 1)
    )


# ---------------------------------------------------------------------------
# Tensor kernels
# ---------------------------------------------------------------------------


def _corners_t(b: torch.Tensor) -> tuple[torch.Tensor, ...]:
    cx, cy, w, h = b.unbind(-1)
    return cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2


def box_iou_t(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Elementwise IoU of two ``(..., 4)`` box tensors."""
    px1, py1, px2, py2 = _corners_t(pred)
    gx1, gy1, gx2, gy2 = _corners_t(gt)
    iw = (torch.minimum(px2, gx2) - torch.maximum(px1, gx1)).clamp(min=0)
    ih = (torch.minimum(py2, gy2) - torch.maximum(py1, gy1)).clamp(min=0)
    inter = iw * ih
    union = pred[..., 2] * pred[..., 3] + gt[..., 2] * gt[..., 3] - inter
    safe = torch.where(union > 0, union, torch.ones_like(union))
    return torch.where(union > 0, inter / safe, torch.zeros_like(union))


def center_penalty_t(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Squared center distance over squared enclosing-box diagonal."""
    px1, py1, px2, py2 = _corners_t(pred)
    gx1, gy1, gx2, gy2 = _corners_t(gt)
    cw = torch.maximum(px2, gx2) - torch.minimum(px1, gx1)
    ch = torch.maximum(py2, gy2) - torch.minimum(py1, gy1)
    c2 = cw**2 + ch**2
    rho2 = (pred[..., 0] - gt[..., 0]) ** 2 + (pred[..., 1] - gt[..., 1]) ** 2
    safe = torch.where(c2 > 0, c2, torch.ones_like(c2))
    return torch.where(c2 > 0, rho2 / safe, torch.zeros_like(c2))


def aspect_penalty_t(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Aspect-ratio consistency term ``v`` of the complete-IoU loss."""
    diff = torch.atan2(gt[..., 2], gt[..., 3]) - torch.atan2(pred[..., 2], pred[..., 3])
    return (4.0 / math.pi**2) * diff**2


def ciou_tradeoff_t(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Trade-off coefficient ``v / (1 - IoU + v)``, detached from the graph."""
    with torch.no_grad():
        v = aspect_penalty_t(pred, gt)
        denom = 1.0 - box_iou_t(pred, gt) + v
        safe = torch.where(denom > 0, denom, torch.ones_like(denom))
        return torch.where(denom > 0, v / safe, torch.zeros_like(denom))


def iou_loss_t(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    return 1.0 - box_iou_t(pred, gt)


def diou_loss_t(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    return 1.0 - box_iou_t(pred, gt) + center_penalty_t(pred, gt)


def ciou_loss_t(
    pred: torch.Tensor, gt: torch.Tensor, alpha: torch.Tensor | None = None
) -> torch.Tensor:
    """Complete-IoU loss ``1 - IoU + rho^2/c^2 + alpha * v``.

    ``alpha`` defaults to :func:`ciou_tradeoff_t`, which carries no gradient.
    Passing a fixed ``alpha`` makes the loss an ordinary function of ``pred``.
    """
    if alpha is None:
        alpha = ciou_tradeoff_t(pred, gt)
    return diou_loss_t(pred, gt) + alpha * aspect_penalty_t(pred, gt)


BOX_LOSSES = {"iou": iou_loss_t, "diou": diou_loss_t, "ciou": ciou_loss_t}


def _pair_tensors(pred: BoundingBox, gt: BoundingBox) -> tuple[torch.Tensor, torch.Tensor]:
    if gt.is_degenerate:
        raise DomainError(f"Ground-truth box must have positive area, got {gt}.")
    p = torch.tensor(pred.as_tuple(), dtype=torch.float64)
    g = torch.tensor(gt.as_tuple(), dtype=torch.float64)
    return p, g


def iou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """``1 - IoU``. Raises DomainError for a degenerate ground truth."""
    p, g = _pair_tensors(pred, gt)
    return float(iou_loss_t(p, g))


def diou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """Distance-IoU loss. Raises DomainError for a degenerate ground truth."""
    p, g = _pair_tensors(pred, gt)
    return float(diou_loss_t(p, g))


def ciou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """Complete-IoU loss. Raises DomainError for a degenerate ground truth."""
    p, g = _pair_tensors(pred, gt)
    return float(ciou_loss_t(p, g))
