"""
Box parameterization of the regression branch: (dx, dy, dz) center offsets in cells of the head scale, log ratios
of the dimensions to per-class base dimensions, and the yaw as (sin, cos).

For License information see the LICENSE file.

"""
from logging import getLogger
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..autodiff import Value, ops
from ..cache import Cache
from ..geometry import OrientedBox3D

log = getLogger(__name__)

REGRESSION_SIZE: int = 8


def decode_values(locations: np.ndarray, regression: Value, cell_sizes: np.ndarray, base_dims: np.ndarray) -> Value:
    """
    Differentiable decoding of (V, 8) regression outputs into (V, 7) boxes (x, y, z, l, w, h, yaw).

    Parameters
    ----------
    locations : np.ndarray
        (V, 3) site centers in meters
    regression : Value
        (V, 8) regression outputs
    cell_sizes : np.ndarray
        (V,) cell size of each site in meters
    base_dims : np.ndarray
        (V, 3) base dimensions of each site

    Returns
    -------
    decode_values : Value
        the decoded boxes
    """
    center = regression[:, 0:3] * cell_sizes[:, None] + locations
    dims = ops.exp(regression[:, 3:6]) * base_dims
    yaw = ops.atan2(regression[:, 6:7], regression[:, 7:8])
    return ops.concat([center, dims, yaw], axis=1)


def decode_box(location: np.ndarray, regression: np.ndarray, cell_size: float,
               base_dims: Sequence[float] = (1.0, 1.0, 1.0)) -> OrientedBox3D:
    """Decodes a single regression vector. atan2(0, 0) is taken as yaw 0."""
    boxes = decode_values(np.asarray(location, dtype=np.float64).reshape(1, 3), Value(np.reshape(regression, (1, 8))),
                          np.array([cell_size]), np.asarray(base_dims, dtype=np.float64).reshape(1, 3))
    return OrientedBox3D.from_array(boxes.data[0])


def encode_boxes(locations: np.ndarray, boxes: np.ndarray, cell_sizes: np.ndarray,
                 base_dims: np.ndarray) -> np.ndarray:
    """The inverse of `decode_values` with unit (sin, cos) yaw encoding."""
    locations = np.asarray(locations, dtype=np.float64).reshape(-1, 3)
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 7)
    offsets = (boxes[:, :3] - locations) / np.asarray(cell_sizes)[:, None]
    log_dims = np.log(boxes[:, 3:6] / base_dims)
    return np.column_stack([offsets, log_dims, np.sin(boxes[:, 6]), np.cos(boxes[:, 6])])


def encode_box(location: np.ndarray, box: OrientedBox3D, cell_size: float,
               base_dims: Sequence[float] = (1.0, 1.0, 1.0)) -> np.ndarray:
    return encode_boxes(location, box.to_array(), np.array([cell_size]),
                        np.asarray(base_dims, dtype=np.float64).reshape(1, 3))[0]


def geometric_mean_dims(dims: np.ndarray) -> np.ndarray:
    dims = np.asarray(dims, dtype=np.float64).reshape(-1, 3)
    if dims.shape[0] == 0:
        return np.ones(3)
    return np.exp(np.mean(np.log(dims), axis=0))


def base_dims_cache(class_boxes: Mapping[str, np.ndarray]) -> Cache[str, np.ndarray]:
    """
    Builds the per-class base dimensions (geometric mean of the box dimensions of each class) of a corpus. Classes
    without boxes fall back to the mean over all boxes.

    Parameters
    ----------
    class_boxes : Mapping[str, np.ndarray]
        the (n, 7) training boxes of each class

    Returns
    -------
    base_dims_cache : Cache[str, np.ndarray]
        the base dimensions by class name
    """
    non_empty = [np.asarray(b).reshape(-1, 7) for b in class_boxes.values() if np.asarray(b).size]
    fallback = geometric_mean_dims(np.vstack(non_empty)[:, 3:6]) if non_empty else np.ones(3)

    def accessor(name: str) -> np.ndarray:
        boxes = np.asarray(class_boxes.get(name, np.zeros((0, 7)))).reshape(-1, 7)
        if boxes.shape[0] == 0:
            log.warning(f"No training boxes for class {name}, using the corpus mean dimensions")
            return fallback
        return geometric_mean_dims(boxes[:, 3:6])

    return Cache.build(accessor, set(class_boxes))


def base_dims_table(cache: Mapping[str, np.ndarray], class_names: Iterable[str]) -> np.ndarray:
    """Returns the (K, 3) base dimensions of `class_names` in order."""
    return np.array([cache[name] for name in class_names]).reshape(-1, 3)
