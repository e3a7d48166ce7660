"""
For License information see the LICENSE file.

"""
from logging import getLogger
from typing import Dict, Hashable, Optional, Sequence, Tuple, Union

import numpy as np

from ..api.constants import ContractViolation, RejectedInputError, UNIFIED_ATTRIBUTE_CHANNELS
from ..autodiff import Value, ops

log = getLogger(__name__)


def canonical_order(coords: np.ndarray, batch: np.ndarray) -> np.ndarray:
    """Returns the permutation sorting sites lexicographically by (batch, z, y, x)."""
    return np.lexsort((coords[:, 0], coords[:, 1], coords[:, 2], batch))


class SparseTensor:
    """
    A batch of active voxels with per-voxel features. Sites are unique per batch element and stored in canonical
    order (lexicographic by batch, z, y, x). Coordinates are signed integer grid cells; the cell edge length of each
    batch element is given by `voxel_sizes`.

    Instances are immutable. Tensors created with `with_features` share the coordinates and the rulebook cache of
    the tensor they were created from.

    Parameters
    ----------
    coords : np.ndarray
        (V, 3) integer voxel coordinates (x, y, z)
    batch : np.ndarray
        (V,) batch element of each site
    features : Union[Value, np.ndarray]
        (V, C) feature vectors
    voxel_sizes : Union[float, Sequence[float]]
        cell size in meters per batch element
    """
    __coords: np.ndarray
    __batch: np.ndarray
    __features: Value
    __voxel_sizes: np.ndarray
    __rulebooks: Dict[Hashable, object]

    def __init__(self, coords: np.ndarray, batch: np.ndarray, features: Union[Value, np.ndarray],
                 voxel_sizes: Union[float, Sequence[float]], rulebooks: Optional[Dict[Hashable, object]] = None):
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
        batch = np.asarray(batch, dtype=np.int64).reshape(-1)
        features = features if isinstance(features, Value) else Value(features)
        voxel_sizes = np.atleast_1d(np.asarray(voxel_sizes, dtype=np.float64))

        if features.ndim != 2 or features.shape[0] != coords.shape[0] or batch.shape[0] != coords.shape[0]:
            raise ContractViolation(f"Inconsistent sparse tensor: {coords.shape[0]} coordinates, {batch.shape[0]} "
                                    f"batch ids, features of shape {features.shape}")
        if np.any(voxel_sizes <= 0):
            raise ContractViolation(f"Voxel sizes must be positive, got {voxel_sizes}")
        if batch.size > 0 and (batch.min() < 0 or batch.max() >= voxel_sizes.size):
            raise ContractViolation(f"Batch ids out of range for {voxel_sizes.size} batch elements")

        coords.setflags(write=False)
        batch.setflags(write=False)
        self.__coords = coords
        self.__batch = batch
        self.__features = features
        self.__voxel_sizes = voxel_sizes
        self.__rulebooks = rulebooks if rulebooks is not None else {}

    @property
    def coords(self) -> np.ndarray:
        return self.__coords

    @property
    def batch(self) -> np.ndarray:
        return self.__batch

    @property
    def features(self) -> Value:
        return self.__features

    @property
    def voxel_sizes(self) -> np.ndarray:
        return self.__voxel_sizes

    @property
    def batch_size(self) -> int:
        return self.__voxel_sizes.size

    @property
    def channels(self) -> int:
        return self.__features.shape[1]

    def __len__(self) -> int:
        return self.__coords.shape[0]

    def rulebooks(self) -> Dict[Hashable, object]:
        return self.__rulebooks

    def with_features(self, features: Value) -> 'SparseTensor':
        """Returns a tensor on the same sites carrying `features`."""
        return SparseTensor(self.__coords, self.__batch, features, self.__voxel_sizes, self.__rulebooks)

    def counts(self) -> np.ndarray:
        """Returns the number of active sites per batch element."""
        return np.bincount(self.__batch, minlength=self.batch_size)

    def locations(self) -> np.ndarray:
        """Returns the (V, 3) voxel centers in meters."""
        return (self.__coords + 0.5) * self.__voxel_sizes[self.__batch][:, None]

    def element(self, b: int) -> np.ndarray:
        """Returns the indices of the sites of batch element `b`."""
        return np.flatnonzero(self.__batch == b)

    def __repr__(self):
        return f"SparseTensor(sites={len(self)}, channels={self.channels}, batch_size={self.batch_size})"

    @staticmethod
    def concat(tensors: Sequence['SparseTensor']) -> 'SparseTensor':
        """Stacks single- or multi-element tensors into one batch, renumbering the batch ids."""
        coords, batches, features, sizes = [], [], [], []
        offset = 0
        for tensor in tensors:
            coords.append(tensor.coords)
            batches.append(tensor.batch + offset)
            features.append(tensor.features)
            sizes.append(tensor.voxel_sizes)
            offset += tensor.batch_size
        return SparseTensor(np.concatenate(coords), np.concatenate(batches), ops.concat(features),
                            np.concatenate(sizes))


def _tile_attributes(attributes: np.ndarray, channels: int) -> np.ndarray:
    dim = attributes.shape[1]
    if dim == 0 or channels % dim != 0:
        raise ContractViolation(f"Attribute dimension {dim} does not divide the unified channel size {channels}")
    return np.tile(attributes, (1, channels // dim))


def voxelize(positions: np.ndarray, attributes: np.ndarray, voxel_size: float,
             channels: int = UNIFIED_ATTRIBUTE_CHANNELS) -> SparseTensor:
    """
    Converts a point cloud into a single-element `SparseTensor`. Each point lands in the cell floor(position /
    voxel_size); its attributes are repeated to `channels` entries and averaged over all points of the cell.

    Parameters
    ----------
    positions : np.ndarray
        (P, 3) point positions in meters
    attributes : np.ndarray
        (P, D) point attributes, D dividing `channels`
    voxel_size : float
        the cell size in meters
    channels : int
        the unified attribute channel count
        default: UNIFIED_ATTRIBUTE_CHANNELS

    Returns
    -------
    voxelize : SparseTensor
        the voxelized scene
    """
    if voxel_size <= 0:
        raise ContractViolation(f"Voxel size must be positive, got {voxel_size}")
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    attributes = np.asarray(attributes, dtype=np.float64).reshape(positions.shape[0], -1)
    tiled = _tile_attributes(attributes, channels)

    if positions.shape[0] == 0:
        return SparseTensor(np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, channels)),
                            voxel_size)
    if not np.all(np.isfinite(positions)):
        raise RejectedInputError("Point positions contain non-finite values")

    cells = np.floor(positions / voxel_size).astype(np.int64)
    # rows (z, y, x) sort lexicographically into the canonical order
    keys, inverse, counts = np.unique(cells[:, ::-1], axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    features = np.zeros((keys.shape[0], channels))
    np.add.at(features, inverse, tiled)
    features /= counts[:, None]
    return SparseTensor(keys[:, ::-1], np.zeros(keys.shape[0], dtype=np.int64), features, voxel_size)


def voxelize_batch(clouds: Sequence[Tuple[np.ndarray, np.ndarray, float]],
                   channels: int = UNIFIED_ATTRIBUTE_CHANNELS) -> SparseTensor:
    """Voxelizes each (positions, attributes, voxel_size) triple and stacks the results into one batch."""
    return SparseTensor.concat([voxelize(p, a, vs, channels) for p, a, vs in clouds])
