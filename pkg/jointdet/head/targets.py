"""
For License information see the LICENSE file.

"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..api.constants import ContractViolation
from ..geometry import OrientedBox3D, to_local

INSIDE_TOLERANCE: float = 1e-9


@dataclass(frozen=True)
class AssignmentTargets:
    """
    Per-site training targets. Background sites have `matched == -1`, label -1, centerness 0 and a zero box.
    """
    matched: np.ndarray
    labels: np.ndarray
    centerness: np.ndarray
    boxes: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        return self.matched >= 0

    def n_positive(self) -> int:
        return int(np.count_nonzero(self.positive))

    @staticmethod
    def concat(parts: Sequence['AssignmentTargets']) -> 'AssignmentTargets':
        """Concatenates per-scene targets; matched indices stay local to their scene."""
        return AssignmentTargets(np.concatenate([p.matched for p in parts]),
                                 np.concatenate([p.labels for p in parts]),
                                 np.concatenate([p.centerness for p in parts]),
                                 np.concatenate([p.boxes for p in parts]).reshape(-1, 7))


def centerness_from_local(local: np.ndarray, dims: np.ndarray) -> np.ndarray:
    """
    Centerness of (P, 3) points given in box frames with (P, 3) box dims: the cube root of the product over the axes
    of min(d-, d+) / max(d-, d+), where d-/d+ are the distances to the two faces.
    """
    half = dims / 2
    lower = np.clip(half + local, 0.0, None)
    upper = np.clip(half - local, 0.0, None)
    ratio = np.minimum(lower, upper) / np.maximum(np.maximum(lower, upper), np.finfo(np.float64).tiny)
    return np.cbrt(np.prod(ratio, axis=1))


def centerness(location: np.ndarray, box: OrientedBox3D) -> float:
    """
    Centerness of a location inside `box`.

    Parameters
    ----------
    location : np.ndarray
        the location in meters
    box : OrientedBox3D
        the box containing the location

    Returns
    -------
    centerness : float
        a value in [0, 1], 1 at the center and 0 on the faces
    """
    local = box.to_local(np.asarray(location, dtype=np.float64).reshape(1, 3))
    dims = np.array(box.dims)
    if np.any(np.abs(local[0]) > dims / 2 + INSIDE_TOLERANCE):
        raise ContractViolation(f"Location {location} lies outside the box")
    return float(centerness_from_local(local, dims[None])[0])


def assign_targets(locations: np.ndarray, boxes: np.ndarray, labels: np.ndarray) -> AssignmentTargets:
    """
    Assigns each location to the smallest-volume ground-truth box containing it (lower index on ties), or to the
    background.

    Parameters
    ----------
    locations : np.ndarray
        (V, 3) site centers in meters
    boxes : np.ndarray
        (G, 7) ground-truth boxes
    labels : np.ndarray
        (G,) class indices of the boxes

    Returns
    -------
    assign_targets : AssignmentTargets
        the targets
    """
    locations = np.asarray(locations, dtype=np.float64).reshape(-1, 3)
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 7)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    v = locations.shape[0]

    matched = np.full(v, -1, dtype=np.int64)
    if boxes.shape[0] and v:
        volumes = np.prod(boxes[:, 3:6], axis=1)
        candidate = np.full((v, boxes.shape[0]), np.inf)
        for g, box in enumerate(boxes):
            local = to_local(locations, box)
            inside = np.all(np.abs(local) <= box[3:6] / 2 + INSIDE_TOLERANCE, axis=1)
            candidate[inside, g] = volumes[g]
        best = np.argmin(candidate, axis=1)
        hit = np.isfinite(candidate[np.arange(v), best])
        matched[hit] = best[hit]

    positive = matched >= 0
    target_boxes = np.zeros((v, 7))
    target_labels = np.full(v, -1, dtype=np.int64)
    ctr = np.zeros(v)
    if positive.any():
        target_boxes[positive] = boxes[matched[positive]]
        target_labels[positive] = labels[matched[positive]]
        local = np.vstack([to_local(locations[i:i + 1], target_boxes[i]) for i in np.flatnonzero(positive)])
        ctr[positive] = centerness_from_local(local, target_boxes[positive, 3:6])
    return AssignmentTargets(matched, target_labels, ctr, target_boxes)
