"""
For License information see the LICENSE file.

"""
from typing import Sequence

import numpy as np

from ..api.constants import IoUKind
from ..geometry import pairwise_iou


def match_detections(detections: np.ndarray, ground_truth: np.ndarray, iou_threshold: float,
                     kind: IoUKind = IoUKind.IOU_3D) -> np.ndarray:
    """
    Greedily matches detections of one class and scene to the ground truth. Detections are visited in the given order
    (by descending score); each takes the unmatched ground-truth box of highest IoU (the lower index on ties) if that
    IoU reaches `iou_threshold`.

    Parameters
    ----------
    detections : np.ndarray
        (M, 7) detected boxes sorted by descending score
    ground_truth : np.ndarray
        (G, 7) ground-truth boxes
    iou_threshold : float
        the minimal IoU of a true positive
    kind : IoUKind
        3D or BEV IoU
        default: IoUKind.IOU_3D

    Returns
    -------
    match_detections : np.ndarray
        (M,) boolean flags, True for true positives
    """
    detections = np.asarray(detections, dtype=np.float64).reshape(-1, 7)
    ground_truth = np.asarray(ground_truth, dtype=np.float64).reshape(-1, 7)
    flags = np.zeros(detections.shape[0], dtype=bool)
    if detections.shape[0] == 0 or ground_truth.shape[0] == 0:
        return flags

    iou = pairwise_iou(detections, ground_truth, kind)
    taken = np.zeros(ground_truth.shape[0], dtype=bool)
    for i in range(detections.shape[0]):
        candidates = np.where(taken, -np.inf, iou[i])
        best = int(np.argmax(candidates))
        if candidates[best] >= iou_threshold:
            flags[i] = True
            taken[best] = True
    return flags


def detection_order(scores: np.ndarray, scene_ranks: Sequence[int], indices: Sequence[int]) -> np.ndarray:
    """Orders detections by descending score, then by lower scene rank, then by lower detection index."""
    return np.lexsort((np.asarray(indices), np.asarray(scene_ranks), -np.asarray(scores, dtype=np.float64)))
