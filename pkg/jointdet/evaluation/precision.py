"""
Average precision from true-positive flags.

For License information see the LICENSE file.

"""
from logging import getLogger
from typing import Tuple

import numpy as np

from ..api.constants import APMode

log = getLogger(__name__)

RECALL_POSITIONS: int = 40


def precision_recall(flags: np.ndarray, n_gt: int) -> Tuple[np.ndarray, np.ndarray]:
    """Returns the precision and recall after each of the (score-ordered) detections."""
    flags = np.asarray(flags, dtype=bool)
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    return tp / np.maximum(tp + fp, 1), tp / max(n_gt, 1)


def precision_envelope(precision: np.ndarray) -> np.ndarray:
    """The monotone envelope: at every point the maximal precision at this or any higher recall."""
    return np.maximum.accumulate(precision[::-1])[::-1] if precision.size else precision


def average_precision(flags: np.ndarray, scores: np.ndarray, n_gt: int,
                      mode: APMode = APMode.ALL_POINTS) -> float:
    """
    Computes the average precision of the detections of one class.

    Parameters
    ----------
    flags : np.ndarray
        true-positive flags
    scores : np.ndarray
        the detection scores; detections are ranked by descending score, ties keep the given order
    n_gt : int
        the number of ground-truth boxes
    mode : APMode
        ALL_POINTS integrates the precision envelope exactly, FORTY_POINT averages it at recalls 1/40, ..., 40/40
        default: APMode.ALL_POINTS

    Returns
    -------
    average_precision : float
        the AP in [0, 1]; 0 if there is no ground truth
    """
    flags = np.asarray(flags, dtype=bool).reshape(-1)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if flags.shape != scores.shape:
        raise ValueError(f"{flags.size} flags but {scores.size} scores")
    if n_gt < 0:
        raise ValueError(f"n_gt must be >= 0, got {n_gt}")
    if n_gt == 0:
        if flags.size:
            log.warning(f"AP of {flags.size} detections without ground truth is reported as 0")
        return 0.0
    if flags.size == 0:
        return 0.0

    order = np.argsort(-scores, kind="stable")
    precision, recall = precision_recall(flags[order], n_gt)
    envelope = precision_envelope(precision)

    if mode == APMode.ALL_POINTS:
        steps = np.diff(np.concatenate([[0.0], recall]))
        return float(np.sum(steps * envelope))

    positions = np.arange(1, RECALL_POSITIONS + 1) / RECALL_POSITIONS
    # first detection whose recall reaches each position; positions beyond the final recall contribute 0
    first = np.searchsorted(recall, positions - 1e-12, side="left")
    reached = first < recall.size
    sampled = np.zeros(RECALL_POSITIONS)
    sampled[reached] = envelope[first[reached]]
    return float(np.mean(sampled))
