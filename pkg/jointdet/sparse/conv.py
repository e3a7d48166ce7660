"""
For License information see the LICENSE file.

"""
from typing import Optional

import numpy as np

from .rulebook import build_rulebook
from .tensor import SparseTensor
from ..api.constants import ContractViolation, ConfigError, EmptySceneError
from ..autodiff import Module, Parameter, Value, ops


class ConvKernel(Module):
    """
    Weights of a sparse convolution: one (in, out) matrix per kernel offset and a bias per output channel.

    Parameters
    ----------
    in_channels : int
        input channel count
    out_channels : int
        output channel count
    kernel_size : int
        kernel edge length, 1 or 3
        default: 3
    stride : int
        1 (submanifold) or 2 (downsampling)
        default: 1
    rng : Optional[np.random.Generator]
        generator for the He-normal initialization; weights start at zero if not given
        default: None
    """
    weight: Parameter
    bias: Parameter
    kernel_size: int
    stride: int

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3, stride: int = 1,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        if kernel_size not in (1, 3):
            raise ConfigError(f"Kernel size must be 1 or 3, got {kernel_size}")
        if stride not in (1, 2):
            raise ConfigError(f"Stride must be 1 or 2, got {stride}")
        if in_channels <= 0 or out_channels <= 0:
            raise ConfigError(f"Channel counts must be positive, got {in_channels} -> {out_channels}")
        self.kernel_size = kernel_size
        self.stride = stride
        volume = kernel_size ** 3
        shape = (volume, in_channels, out_channels)
        if rng is None:
            weight = np.zeros(shape)
        else:
            weight = rng.normal(0.0, np.sqrt(2.0 / (volume * in_channels)), size=shape)
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros(out_channels))

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[2]

    def set_identity(self) -> 'ConvKernel':
        """Sets the center tap to the identity matrix and everything else to zero."""
        if self.in_channels != self.out_channels:
            raise ContractViolation("Identity initialization requires equal channel counts")
        weight = np.zeros(self.weight.shape)
        weight[self.weight.shape[0] // 2] = np.eye(self.in_channels)
        self.weight.data = weight
        self.bias.data = np.zeros(self.out_channels)
        return self

    def __call__(self, x: SparseTensor) -> SparseTensor:
        return sparse_conv(x, self)


def sparse_conv_values(x: SparseTensor, weight: Value, bias: Value, kernel_size: int, stride: int) -> SparseTensor:
    """`sparse_conv` on explicit weight and bias values (used where weights are not held by a `ConvKernel`)."""
    if weight.ndim != 3 or weight.shape[0] != kernel_size ** 3:
        raise ContractViolation(f"Weight of shape {weight.shape} does not fit kernel size {kernel_size}")
    if x.channels != weight.shape[1]:
        raise ContractViolation(f"Input has {x.channels} channels, kernel expects {weight.shape[1]}")

    rulebook = build_rulebook(x, kernel_size, stride)
    n_out = rulebook.out_coords.shape[0]
    features = x.features
    out = np.zeros((n_out, weight.shape[2])) + bias.data
    for k, (i_idx, o_idx) in enumerate(rulebook.pairs):
        if i_idx.size:
            # output indices are unique per offset
            out[o_idx] += features.data[i_idx] @ weight.data[k]

    def rule(g):
        grad_x = np.zeros_like(features.data)
        grad_w = np.zeros_like(weight.data)
        for k, (i_idx, o_idx) in enumerate(rulebook.pairs):
            if i_idx.size:
                grad_x[i_idx] += g[o_idx] @ weight.data[k].T
                grad_w[k] = features.data[i_idx].T @ g[o_idx]
        return grad_x, grad_w, g.sum(axis=0)

    result = Value.from_op(out, (features, weight, bias), rule)
    sizes = x.voxel_sizes * stride
    rulebooks = x.rulebooks() if stride == 1 else None
    return SparseTensor(rulebook.out_coords, rulebook.out_batch, result, sizes, rulebooks)


def sparse_conv(x: SparseTensor, kernel: ConvKernel) -> SparseTensor:
    """
    Sparse convolution over the active sites of `x`: out[o] = bias + sum over offsets of W[offset]^T x[i] for every
    rulebook pair (i, o). Stride 1 keeps the active set unchanged, stride 2 outputs the unique floor-divided sites
    with doubled voxel sizes.

    Parameters
    ----------
    x : SparseTensor
        the input
    kernel : ConvKernel
        the convolution weights

    Returns
    -------
    sparse_conv : SparseTensor
        the output
    """
    return sparse_conv_values(x, kernel.weight, kernel.bias, kernel.kernel_size, kernel.stride)


def global_avg_pool(x: SparseTensor) -> Value:
    """
    Averages the features of every batch element over its active sites.

    Parameters
    ----------
    x : SparseTensor
        the input

    Returns
    -------
    global_avg_pool : Value
        (B, C) pooled features
    """
    counts = x.counts()
    if np.any(counts == 0):
        raise EmptySceneError(f"Batch elements {np.flatnonzero(counts == 0).tolist()} have no active sites")
    summed = ops.segment_sum(x.features, x.batch, x.batch_size)
    return summed / counts[:, None].astype(np.float64)
