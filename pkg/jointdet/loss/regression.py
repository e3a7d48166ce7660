"""
For License information see the LICENSE file.

"""
from typing import Optional

import numpy as np

from ..api.constants import IoUKind
from ..autodiff import Value, ops
from ..geometry import differentiable_iou


def iou3d_regression_loss(pred: Value, target: np.ndarray, weights: Optional[np.ndarray] = None) -> Value:
    """
    Weighted mean of 1 - IoU_3D over aligned predicted and target boxes.

    Parameters
    ----------
    pred : Value
        (M, 7) predicted boxes
    target : np.ndarray
        (M, 7) target boxes
    weights : Optional[np.ndarray]
        (M,) non-negative weights, e.g. centerness targets; uniform if not given
        default: None

    Returns
    -------
    iou3d_regression_loss : Value
        the scalar loss, 0 for empty inputs or zero total weight
    """
    target = np.asarray(target, dtype=np.float64).reshape(-1, 7)
    if target.shape[0] == 0:
        return Value(0.0)
    weights = np.ones(target.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
    total = weights.sum()
    if total <= 0:
        return Value(0.0)
    iou = differentiable_iou(pred, target, IoUKind.IOU_3D)
    return ops.sum_((1.0 - iou) * weights) / total
