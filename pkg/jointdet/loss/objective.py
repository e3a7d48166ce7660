"""
For License information see the LICENSE file.

"""
from dataclasses import dataclass, field
from logging import getLogger
from typing import Dict, Optional, Tuple

import numpy as np

from .focal import soft_focal_loss, bce_loss, router_loss
from .regression import iou3d_regression_loss
from ..api.constants import SoftTarget, IoUKind, ContractViolation, DEFAULT_FOCAL_ALPHA, DEFAULT_FOCAL_GAMMA
from ..autodiff import Value, ops
from ..geometry import aligned_iou, differentiable_iou, vertical_overlap_ratio
from ..head import AssignmentTargets, HeadOutputs

log = getLogger(__name__)

COMPONENTS: Tuple[str, ...] = ("cls", "reg", "centerness", "iou")


@dataclass
class LossBreakdown:
    """Scalar loss components of one step, the total and the per-domain sub-totals (without the router term)."""
    cls: float
    reg: float
    centerness: float
    iou: float
    router: float
    total: float
    per_domain: Dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, float]:
        values = {"cls": self.cls, "reg": self.reg, "centerness": self.centerness, "iou": self.iou,
                  "router": self.router, "total": self.total}
        values.update({f"domain_{n}": v for n, v in sorted(self.per_domain.items())})
        return values

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(list(self.to_dict().values()))))


def soft_targets(decoded: np.ndarray, boxes: np.ndarray, mode: SoftTarget) -> np.ndarray:
    """Quality targets of positive sites for the classification loss, computed without gradient."""
    if decoded.shape[0] == 0:
        return np.zeros(0)
    if mode == SoftTarget.HARD:
        return np.ones(decoded.shape[0])
    if mode == SoftTarget.IOU_BEV:
        return aligned_iou(decoded, boxes, IoUKind.BEV)
    if mode == SoftTarget.IOU_3D:
        return aligned_iou(decoded, boxes, IoUKind.IOU_3D)
    return 0.5 * (aligned_iou(decoded, boxes, IoUKind.BEV) + vertical_overlap_ratio(decoded, boxes))


def _per_sample_mean(values: Value, samples: np.ndarray, counts: np.ndarray) -> Value:
    return ops.segment_sum(values, samples, counts.size) / np.maximum(counts, 1).astype(np.float64)


def sample_losses(outputs: HeadOutputs, targets: AssignmentTargets, decoded: Value, class_mask: np.ndarray,
                  soft_target: SoftTarget = SoftTarget.IOU_BEV, alpha: float = DEFAULT_FOCAL_ALPHA,
                  gamma: float = DEFAULT_FOCAL_GAMMA) -> Dict[str, Value]:
    """
    Per-sample detection losses of a batch.

    Parameters
    ----------
    outputs : HeadOutputs
        the head outputs
    targets : AssignmentTargets
        the targets of every head site
    decoded : Value
        (V, 7) boxes decoded from the regression outputs
    class_mask : np.ndarray
        (B, K) label space of every sample; classes outside it are not supervised
    soft_target : SoftTarget
        the quality target of the classification loss
        default: SoftTarget.IOU_BEV
    alpha : float
        focal balance
        default: DEFAULT_FOCAL_ALPHA
    gamma : float
        focal exponent
        default: DEFAULT_FOCAL_GAMMA

    Returns
    -------
    sample_losses : Dict[str, Value]
        (B,) values for "cls", "reg", "centerness" and "iou"
    """
    tensor = outputs.tensor
    n_samples = tensor.batch_size
    batch = tensor.batch
    positive = targets.positive
    idx = np.flatnonzero(positive)
    pos_counts = np.bincount(batch[idx], minlength=n_samples)

    n_classes = outputs.class_probs.shape[1]
    c = np.zeros((len(tensor), n_classes))
    c[idx, targets.labels[idx]] = 1.0
    quality = np.zeros(len(tensor))
    quality[idx] = soft_targets(decoded.data[idx], targets.boxes[idx], soft_target)

    focal = soft_focal_loss(outputs.class_probs, c, quality[:, None], alpha, gamma)
    focal = ops.sum_(focal * class_mask[batch].astype(np.float64), axis=1)
    losses = {"cls": _per_sample_mean(focal, batch, pos_counts)}

    if idx.size == 0:
        zeros = Value(np.zeros(n_samples))
        losses.update({"reg": zeros, "centerness": zeros, "iou": zeros})
        return losses

    samples = batch[idx]
    pred = decoded[idx]
    gt = targets.boxes[idx]
    weights = targets.centerness[idx]
    iou = differentiable_iou(pred, gt, IoUKind.IOU_3D)
    total_weight = np.bincount(samples, weights=weights, minlength=n_samples)
    reg = ops.segment_sum((1.0 - iou) * weights, samples, n_samples)
    losses["reg"] = reg * np.where(total_weight > 0, 1.0 / np.where(total_weight > 0, total_weight, 1.0), 0.0)

    losses["centerness"] = _per_sample_mean(bce_loss(outputs.centerness[idx, 0], weights), samples, pos_counts)
    losses["iou"] = _per_sample_mean(bce_loss(outputs.iou[idx, 0], np.clip(iou.data, 0.0, 1.0)), samples, pos_counts)
    return losses


def total_objective(losses: Dict[str, Value], domains: np.ndarray, n_domains: int,
                    router_logits: Optional[Value] = None, router_weight: float = 1.0) -> Tuple[Value, LossBreakdown]:
    """
    Combines per-sample losses into the multi-domain objective: for every domain the mean over its samples in the
    batch of the four detection terms, summed over the domains, plus the weighted router cross entropy.

    Parameters
    ----------
    losses : Dict[str, Value]
        (B,) values of "cls", "reg", "centerness" and "iou"
    domains : np.ndarray
        (B,) domain index of every sample
    n_domains : int
        the number of training domains
    router_logits : Optional[Value]
        (B, N) routing logits; no router term if not given
        default: None
    router_weight : float
        the weight of the router term
        default: 1.0

    Returns
    -------
    total_objective : Tuple[Value, LossBreakdown]
        the scalar objective and its breakdown
    """
    domains = np.asarray(domains, dtype=np.int64).reshape(-1)
    if domains.size == 0:
        raise ContractViolation("The objective requires at least one sample")
    if np.any((domains < 0) | (domains >= n_domains)):
        raise ContractViolation(f"Unknown domain ids {sorted(set(domains[(domains < 0) | (domains >= n_domains)]))}")

    counts = np.bincount(domains, minlength=n_domains)
    sample_weights = 1.0 / counts[domains]

    components = {name: ops.sum_(losses[name] * sample_weights) for name in COMPONENTS}
    total = components["cls"] + components["reg"] + components["centerness"] + components["iou"]

    router_value = 0.0
    if router_logits is not None:
        router = router_loss(router_logits, domains)
        router_value = router.item()
        total = total + router * router_weight

    per_sample = sum(losses[name].data for name in COMPONENTS) * sample_weights
    per_domain = {int(n): float(per_sample[domains == n].sum()) for n in np.unique(domains)}
    breakdown = LossBreakdown(components["cls"].item(), components["reg"].item(), components["centerness"].item(),
                              components["iou"].item(), router_value, total.item(), per_domain)
    return total, breakdown
