from .focal import soft_focal_loss, bce_loss, router_loss
from .regression import iou3d_regression_loss
from .objective import LossBreakdown, sample_losses, total_objective, soft_targets

__all__ = [
    'soft_focal_loss', 'bce_loss', 'router_loss',  # focal.py

    'iou3d_regression_loss',  # regression.py

    'LossBreakdown', 'sample_losses', 'total_objective', 'soft_targets',  # objective.py
]
