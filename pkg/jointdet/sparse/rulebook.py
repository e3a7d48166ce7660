"""
For License information see the LICENSE file.

"""
from itertools import product
from typing import List, Tuple

import numpy as np

from .tensor import SparseTensor


def kernel_offsets(kernel_size: int) -> np.ndarray:
    """Returns the (k³, 3) offsets of a cubic kernel in (x, y, z) order with x varying fastest."""
    r = kernel_size // 2
    return np.array([(x, y, z) for z, y, x in product(range(-r, r + 1), repeat=3)], dtype=np.int64)


class _SiteHash:
    """Maps (batch, x, y, z) sites to dense int64 keys over a padded bounding box."""

    def __init__(self, coords: np.ndarray, batch: np.ndarray, padding: int):
        if coords.shape[0] == 0:
            self.low = np.zeros(3, dtype=np.int64)
            self.extent = np.ones(3, dtype=np.int64)
        else:
            self.low = coords.min(axis=0) - padding
            self.extent = coords.max(axis=0) + padding - self.low + 1

    def keys(self, coords: np.ndarray, batch: np.ndarray) -> np.ndarray:
        shifted = coords - self.low
        return ((batch * self.extent[2] + shifted[:, 2]) * self.extent[1] + shifted[:, 1]) * self.extent[0] + \
            shifted[:, 0]

    def inside(self, coords: np.ndarray) -> np.ndarray:
        shifted = coords - self.low
        return np.all((shifted >= 0) & (shifted < self.extent), axis=1)


class Rulebook:
    """
    Gather/scatter index pairs of a sparse convolution. For kernel offset k, `pairs[k]` holds the input and output
    site indices with out_coord * stride + offset_k = in_coord.

    Parameters
    ----------
    offsets : np.ndarray
        the (K, 3) kernel offsets
    pairs : List[Tuple[np.ndarray, np.ndarray]]
        (input indices, output indices) per offset
    out_coords : np.ndarray
        the output sites
    out_batch : np.ndarray
        the batch element of each output site
    """
    offsets: np.ndarray
    pairs: List[Tuple[np.ndarray, np.ndarray]]
    out_coords: np.ndarray
    out_batch: np.ndarray

    def __init__(self, offsets: np.ndarray, pairs: List[Tuple[np.ndarray, np.ndarray]], out_coords: np.ndarray,
                 out_batch: np.ndarray):
        self.offsets = offsets
        self.pairs = pairs
        self.out_coords = out_coords
        self.out_batch = out_batch

    def n_pairs(self) -> int:
        return sum(i.size for i, _ in self.pairs)


def output_sites(tensor: SparseTensor, stride: int) -> Tuple[np.ndarray, np.ndarray]:
    """Returns the output sites of a convolution with `stride`, in canonical order."""
    if stride == 1:
        return tensor.coords, tensor.batch
    if len(tensor) == 0:
        return tensor.coords, tensor.batch
    down = np.floor_divide(tensor.coords, stride)
    rows = np.unique(np.column_stack([tensor.batch, down[:, ::-1]]), axis=0)
    return np.ascontiguousarray(rows[:, :0:-1]), np.ascontiguousarray(rows[:, 0])


def build_rulebook(tensor: SparseTensor, kernel_size: int, stride: int) -> Rulebook:
    """
    Builds (or fetches from the tensor's cache) the rulebook of a convolution. Stride 1 yields a submanifold rulebook
    whose output sites are the input sites; stride 2 outputs the unique floor-divided input sites.

    Parameters
    ----------
    tensor : SparseTensor
        the input tensor
    kernel_size : int
        the kernel edge length
    stride : int
        the stride

    Returns
    -------
    build_rulebook : Rulebook
        the rulebook
    """
    cache = tensor.rulebooks()
    key = (kernel_size, stride)
    if key in cache:
        return cache[key]

    offsets = kernel_offsets(kernel_size)
    out_coords, out_batch = output_sites(tensor, stride)

    site_hash = _SiteHash(out_coords, out_batch, padding=kernel_size)
    out_keys = site_hash.keys(out_coords, out_batch)
    order = np.argsort(out_keys, kind="stable")
    sorted_keys = out_keys[order]

    pairs = []
    for offset in offsets:
        shifted = tensor.coords - offset
        divisible = np.all(shifted % stride == 0, axis=1)
        candidate = np.floor_divide(shifted, stride)
        valid = divisible & site_hash.inside(candidate)
        in_idx = np.flatnonzero(valid)
        keys = site_hash.keys(candidate[in_idx], tensor.batch[in_idx])
        pos = np.searchsorted(sorted_keys, keys)
        pos_clipped = np.minimum(pos, max(sorted_keys.size - 1, 0))
        hit = (pos < sorted_keys.size) & (sorted_keys[pos_clipped] == keys) if sorted_keys.size else \
            np.zeros(keys.size, dtype=bool)
        pairs.append((in_idx[hit], order[pos_clipped[hit]]))

    rulebook = Rulebook(offsets, pairs, out_coords, out_batch)
    cache[key] = rulebook
    return rulebook
