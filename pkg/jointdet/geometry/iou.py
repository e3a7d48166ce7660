"""
For License information see the LICENSE file.

"""
from typing import Union

import numpy as np

from .box import OrientedBox3D, bev_corners, CORNER_SIGNS
from .clipping import ConvexPolygon2D, clip_footprints
from ..api.constants import IoUKind
from ..autodiff import Value, ops

BoxLike = Union[OrientedBox3D, np.ndarray]


def _as_array(boxes: BoxLike) -> np.ndarray:
    if isinstance(boxes, OrientedBox3D):
        return boxes.to_array()[None]
    return np.asarray(boxes, dtype=np.float64).reshape(-1, 7)


def aligned_bev_intersection(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Footprint intersection areas of aligned (M, 7) box pairs."""
    _, _, areas = clip_footprints(bev_corners(boxes_a), bev_corners(boxes_b))
    return areas


def vertical_overlap(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    top = np.minimum(boxes_a[:, 2] + boxes_a[:, 5] / 2, boxes_b[:, 2] + boxes_b[:, 5] / 2)
    bottom = np.maximum(boxes_a[:, 2] - boxes_a[:, 5] / 2, boxes_b[:, 2] - boxes_b[:, 5] / 2)
    return np.maximum(top - bottom, 0.0)


def vertical_overlap_ratio(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Overlap of the vertical extents divided by the length of their union."""
    boxes_a, boxes_b = _as_array(boxes_a), _as_array(boxes_b)
    overlap = vertical_overlap(boxes_a, boxes_b)
    return overlap / (boxes_a[:, 5] + boxes_b[:, 5] - overlap)


def aligned_iou(boxes_a: BoxLike, boxes_b: BoxLike, kind: IoUKind = IoUKind.IOU_3D) -> np.ndarray:
    """
    IoUs of aligned box pairs.

    Parameters
    ----------
    boxes_a : BoxLike
        (M, 7) boxes
    boxes_b : BoxLike
        (M, 7) boxes
    kind : IoUKind
        footprint or volumetric IoU
        default: IoUKind.IOU_3D

    Returns
    -------
    aligned_iou : np.ndarray
        the (M,) IoUs
    """
    boxes_a, boxes_b = _as_array(boxes_a), _as_array(boxes_b)
    area = aligned_bev_intersection(boxes_a, boxes_b)
    if kind == IoUKind.BEV:
        union = boxes_a[:, 3] * boxes_a[:, 4] + boxes_b[:, 3] * boxes_b[:, 4] - area
        return np.clip(area / union, 0.0, 1.0)
    inter = area * vertical_overlap(boxes_a, boxes_b)
    union = np.prod(boxes_a[:, 3:6], axis=1) + np.prod(boxes_b[:, 3:6], axis=1) - inter
    return np.clip(inter / union, 0.0, 1.0)


def pairwise_iou(boxes_a: BoxLike, boxes_b: BoxLike, kind: IoUKind = IoUKind.IOU_3D) -> np.ndarray:
    """Returns the (M, K) IoU matrix of (M, 7) and (K, 7) boxes."""
    boxes_a, boxes_b = _as_array(boxes_a), _as_array(boxes_b)
    m, k = boxes_a.shape[0], boxes_b.shape[0]
    if m == 0 or k == 0:
        return np.zeros((m, k))
    left = np.repeat(boxes_a, k, axis=0)
    right = np.tile(boxes_b, (m, 1))
    return aligned_iou(left, right, kind).reshape(m, k)


def bev_intersection_area(a: OrientedBox3D, b: OrientedBox3D) -> float:
    """Area of the intersection polygon of the footprints of `a` and `b`."""
    polygon = ConvexPolygon2D.intersection(bev_corners(_as_array(a))[0], bev_corners(_as_array(b))[0])
    return 0.0 if polygon.is_empty() else polygon.area()


def iou_bev(a: OrientedBox3D, b: OrientedBox3D) -> float:
    return float(aligned_iou(a, b, IoUKind.BEV)[0])


def iou_3d(a: OrientedBox3D, b: OrientedBox3D) -> float:
    return float(aligned_iou(a, b, IoUKind.IOU_3D)[0])


def _value_corners(boxes: Value) -> Value:
    # (M, 4, 2) footprint corners of differentiable (M, 7) boxes
    c, s = ops.cos(boxes[:, 6:7]), ops.sin(boxes[:, 6:7])
    half_l = boxes[:, 3:4] * (CORNER_SIGNS[None, :, 0] / 2)
    half_w = boxes[:, 4:5] * (CORNER_SIGNS[None, :, 1] / 2)
    x = boxes[:, 0:1] + half_l * c - half_w * s
    y = boxes[:, 1:2] + half_l * s + half_w * c
    return ops.stack([x, y], axis=2)


def differentiable_bev_intersection(pred: Value, target: np.ndarray) -> Value:
    """
    Footprint intersection areas of (M, 7) predicted boxes with fixed (M, 7) boxes, differentiable with respect to the
    predictions. The clipping topology is taken from the clipping kernel; the vertices are recomputed as intersections
    of box edge lines, so gradients are exact wherever the topology is locally stable.
    """
    target = np.asarray(target, dtype=np.float64).reshape(-1, 7)
    m = target.shape[0]
    pred_corners = _value_corners(pred)
    target_corners = bev_corners(target)
    lines, counts, _ = clip_footprints(pred_corners.data, target_corners)
    corners = ops.concat([pred_corners, Value(target_corners)], axis=1)

    rows = np.repeat(np.arange(m), lines.shape[1]).reshape(m, -1)
    start = lines
    end = (lines + 1) % 4 + 4 * (lines >= 4)
    p1 = corners[rows, start[:, :, 0]]
    p2 = corners[rows, end[:, :, 0]]
    p3 = corners[rows, start[:, :, 1]]
    p4 = corners[rows, end[:, :, 1]]
    d1 = p2 - p1
    d2 = p4 - p3
    offset = p3 - p1
    denominator = d1[:, :, 0] * d2[:, :, 1] - d1[:, :, 1] * d2[:, :, 0]
    t = (offset[:, :, 0] * d2[:, :, 1] - offset[:, :, 1] * d2[:, :, 0]) / denominator
    vx = p1[:, :, 0] + t * d1[:, :, 0]
    vy = p1[:, :, 1] + t * d1[:, :, 1]

    slots = np.arange(lines.shape[1])[None, :]
    valid = slots < counts[:, None]
    following = np.where(slots + 1 < counts[:, None], slots + 1, 0)
    following = np.broadcast_to(following, valid.shape)
    nx = vx[rows, following]
    ny = vy[rows, following]
    cross = (vx * ny - nx * vy) * valid.astype(np.float64)
    return ops.sum_(cross, axis=1) * 0.5


def differentiable_iou(pred: Value, target: np.ndarray, kind: IoUKind = IoUKind.IOU_3D) -> Value:
    """
    IoUs of (M, 7) predicted boxes with fixed (M, 7) boxes, differentiable with respect to the predictions. Vertical
    overlap uses one-sided subgradients at the points where box faces meet.

    Parameters
    ----------
    pred : Value
        the predicted boxes (x, y, z, l, w, h, yaw)
    target : np.ndarray
        the fixed boxes
    kind : IoUKind
        footprint or volumetric IoU
        default: IoUKind.IOU_3D

    Returns
    -------
    differentiable_iou : Value
        the (M,) IoUs
    """
    target = np.asarray(target, dtype=np.float64).reshape(-1, 7)
    area = differentiable_bev_intersection(pred, target)
    pred_area = pred[:, 3] * pred[:, 4]
    target_area = target[:, 3] * target[:, 4]
    if kind == IoUKind.BEV:
        return area / (pred_area + target_area - area)

    half = pred[:, 5] * 0.5
    top = ops.minimum(pred[:, 2] + half, target[:, 2] + target[:, 5] / 2)
    bottom = ops.maximum(pred[:, 2] - half, target[:, 2] - target[:, 5] / 2)
    inter = area * ops.relu(top - bottom)
    union = pred_area * pred[:, 5] + np.prod(target[:, 3:6], axis=1) - inter
    return inter / union
