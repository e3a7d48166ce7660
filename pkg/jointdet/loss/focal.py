"""
For License information see the LICENSE file.

"""
from typing import Union

import numpy as np

from ..api.constants import DEFAULT_FOCAL_ALPHA, DEFAULT_FOCAL_GAMMA, PROBABILITY_CLAMP
from ..autodiff import Value, ops

Target = Union[float, np.ndarray]


def soft_focal_loss(p: Value, c: Target, iou: Target, alpha: float = DEFAULT_FOCAL_ALPHA,
                    gamma: float = DEFAULT_FOCAL_GAMMA) -> Value:
    """
    Elementwise focal loss with the soft target t = c * iou:
    -(alpha * t + (1 - alpha) * (1 - t)) * |t - p|^gamma * log|1 - c - p|.
    Probabilities are clamped to [PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP] and the targets carry no gradient. With
    iou = 1 for every positive this is the plain hard-target focal loss.

    Parameters
    ----------
    p : Value
        predicted probabilities
    c : Target
        binary class targets
    iou : Target
        soft quality targets in [0, 1], ignored where c = 0
    alpha : float
        the positive/negative balance
        default: DEFAULT_FOCAL_ALPHA
    gamma : float
        the focusing exponent
        default: DEFAULT_FOCAL_GAMMA

    Returns
    -------
    soft_focal_loss : Value
        the loss of every element
    """
    c = np.asarray(c, dtype=np.float64)
    target = c * np.asarray(iou, dtype=np.float64)
    weight = alpha * target + (1 - alpha) * (1 - target)
    p = ops.clip(p, PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP)
    modulation = ops.power(ops.absolute(target - p), gamma)
    return -(weight * modulation * ops.log(ops.absolute((1 - c) - p)))


def bce_loss(logit: Value, target: Target) -> Value:
    """
    Elementwise binary cross entropy on logits in the stable form softplus(x) - t * x.

    Parameters
    ----------
    logit : Value
        the logits
    target : Target
        targets in [0, 1]

    Returns
    -------
    bce_loss : Value
        the loss of every element
    """
    return ops.softplus(logit) - logit * np.asarray(target, dtype=np.float64)


def router_loss(logits: Value, labels: np.ndarray) -> Value:
    """Mean cross entropy of (B, N) routing logits against the true domain indices."""
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    log_probs = ops.log_softmax(logits, axis=1)
    return -ops.mean(log_probs[np.arange(labels.size), labels])
