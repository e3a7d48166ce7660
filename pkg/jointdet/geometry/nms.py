"""
For License information see the LICENSE file.

"""
from typing import Sequence, Union

import numpy as np

from .box import OrientedBox3D, boxes_to_array
from .iou import pairwise_iou
from ..api.constants import IoUKind


def rotated_nms(boxes: Union[np.ndarray, Sequence[OrientedBox3D]], scores: np.ndarray,
                iou_threshold: float) -> np.ndarray:
    """
    Greedy non-maximum suppression on footprint IoU. Boxes are visited by descending score, ties broken by the lower
    index; a box is suppressed if its IoU with an already kept box exceeds `iou_threshold`.

    Parameters
    ----------
    boxes : Union[np.ndarray, Sequence[OrientedBox3D]]
        (M, 7) boxes
    scores : np.ndarray
        (M,) scores
    iou_threshold : float
        the suppression threshold in [0, 1]

    Returns
    -------
    rotated_nms : np.ndarray
        the kept indices in visiting order
    """
    if not 0 <= iou_threshold <= 1:
        raise ValueError(f"IoU threshold must be in [0, 1], got {iou_threshold}")
    if not isinstance(boxes, np.ndarray):
        boxes = boxes_to_array(boxes)
    boxes = boxes.reshape(-1, 7)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.shape[0] != boxes.shape[0]:
        raise ValueError(f"Got {boxes.shape[0]} boxes but {scores.shape[0]} scores")

    order = np.lexsort((np.arange(scores.size), -scores))
    overlaps = pairwise_iou(boxes, boxes, IoUKind.BEV)
    suppressed = np.zeros(scores.size, dtype=bool)
    kept = []
    for i in order:
        if suppressed[i]:
            continue
        kept.append(i)
        suppressed |= overlaps[i] > iou_threshold
    return np.array(kept, dtype=np.int64)
