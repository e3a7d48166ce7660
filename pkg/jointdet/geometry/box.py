"""
For License information see the LICENSE file.

"""
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

# corner signs (length axis, width axis) in counter-clockwise order
CORNER_SIGNS: np.ndarray = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def normalize_yaw(yaw):
    """Maps angles to (-pi, pi]. Angles already in range are returned unchanged."""
    yaw = np.asarray(yaw, dtype=np.float64)
    in_range = (yaw > -np.pi) & (yaw <= np.pi)
    return np.where(in_range, yaw, np.pi - np.mod(np.pi - yaw, 2 * np.pi))


@dataclass(frozen=True)
class OrientedBox3D:
    """
    An upright box given by its center, its dimensions (length along the heading, width, height) and its yaw about
    the vertical axis. The yaw is normalized to (-pi, pi] on construction.
    """
    center: Tuple[float, float, float]
    dims: Tuple[float, float, float]
    yaw: float = 0.0

    def __post_init__(self):
        center = tuple(float(c) for c in np.asarray(self.center, dtype=np.float64).reshape(3))
        dims = tuple(float(d) for d in np.asarray(self.dims, dtype=np.float64).reshape(3))
        if not all(np.isfinite(center)) or not all(np.isfinite(dims)) or not np.isfinite(self.yaw):
            raise ValueError(f"Box parameters must be finite: {center}, {dims}, {self.yaw}")
        if min(dims) <= 0:
            raise ValueError(f"Box dimensions must be positive, got {dims}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "yaw", float(normalize_yaw(self.yaw)))

    @classmethod
    def from_array(cls, values: Sequence[float]) -> 'OrientedBox3D':
        """Creates a box from (x, y, z, l, w, h, yaw)."""
        values = np.asarray(values, dtype=np.float64).reshape(7)
        return cls(tuple(values[:3]), tuple(values[3:6]), float(values[6]))

    def to_array(self) -> np.ndarray:
        return np.array([*self.center, *self.dims, self.yaw])

    @property
    def volume(self) -> float:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def bev_area(self) -> float:
        return self.dims[0] * self.dims[1]

    def bev_corners(self) -> np.ndarray:
        return bev_corners(self.to_array()[None])[0]

    def to_local(self, points: np.ndarray) -> np.ndarray:
        """Transforms (P, 3) points into the box frame (origin at the center, x along the length)."""
        return to_local(points, self.to_array())

    def contains(self, points: np.ndarray, tolerance: float = 1e-9) -> np.ndarray:
        local = self.to_local(points)
        return np.all(np.abs(local) <= np.array(self.dims) / 2 + tolerance, axis=1)

    def corners(self) -> np.ndarray:
        """Returns the 8 corners: the bottom face in counter-clockwise order followed by the top face."""
        bev = self.bev_corners()
        z0 = self.center[2] - self.dims[2] / 2
        z1 = self.center[2] + self.dims[2] / 2
        return np.vstack([np.column_stack([bev, np.full(4, z0)]), np.column_stack([bev, np.full(4, z1)])])


def boxes_to_array(boxes: Iterable[OrientedBox3D]) -> np.ndarray:
    """Stacks boxes into a (M, 7) array."""
    rows = [box.to_array() for box in boxes]
    return np.array(rows).reshape(-1, 7)


def bev_corners(boxes: np.ndarray) -> np.ndarray:
    """Returns the (M, 4, 2) counter-clockwise footprint corners of (M, 7) boxes."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 7)
    c, s = np.cos(boxes[:, 6]), np.sin(boxes[:, 6])
    half_l = boxes[:, 3:4] / 2 * CORNER_SIGNS[None, :, 0]
    half_w = boxes[:, 4:5] / 2 * CORNER_SIGNS[None, :, 1]
    x = boxes[:, 0:1] + half_l * c[:, None] - half_w * s[:, None]
    y = boxes[:, 1:2] + half_l * s[:, None] + half_w * c[:, None]
    return np.stack([x, y], axis=2)


def to_local(points: np.ndarray, box: np.ndarray) -> np.ndarray:
    """Transforms (P, 3) points into the frame of the (7,) box."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    shifted = points - box[:3]
    c, s = np.cos(box[6]), np.sin(box[6])
    return np.column_stack([c * shifted[:, 0] + s * shifted[:, 1], -s * shifted[:, 0] + c * shifted[:, 1],
                            shifted[:, 2]])
