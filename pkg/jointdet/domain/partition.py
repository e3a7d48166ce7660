"""
Domain-partitioned layers. Scatter partitioning normalizes with statistics shared by all domains and mixes per-domain
affine transforms with the domain probabilities of each scene. Context partitioning adds a per-domain transform of the
pooled scene feature to every site, only for the domains selected by the context mode.

For License information see the LICENSE file.

"""
from logging import getLogger
from typing import Optional, Sequence, Union

import numpy as np

from ..api.constants import ContextMode, NormMode, EmptySceneError, ContractViolation, DEFAULT_NORM_EPSILON, \
    DEFAULT_NORM_MOMENTUM
from ..autodiff import Module, Parameter, Value, ops
from ..sparse import SparseTensor

log = getLogger(__name__)

Probs = Union[Value, np.ndarray]


class PartitionedNorm(Module):
    """
    Normalization with N per-domain (scale, shift) pairs and shared running statistics.

    Parameters
    ----------
    channels : int
        the channel count C
    n_partitions : int
        the number of (scale, shift) pairs N
    eps : float
        the variance offset
        default: DEFAULT_NORM_EPSILON
    momentum : float
        weight of the old running statistics in their update
        default: DEFAULT_NORM_MOMENTUM
    """
    gamma: Parameter
    beta: Parameter
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float
    momentum: float

    def __init__(self, channels: int, n_partitions: int, eps: float = DEFAULT_NORM_EPSILON,
                 momentum: float = DEFAULT_NORM_MOMENTUM):
        super().__init__()
        if eps <= 0:
            raise ValueError(f"Epsilon must be positive, got {eps}")
        if n_partitions < 1:
            raise ValueError(f"At least one partition is required, got {n_partitions}")
        self.gamma = Parameter(np.ones((n_partitions, channels)))
        self.beta = Parameter(np.zeros((n_partitions, channels)))
        self.register_buffer("running_mean", np.zeros(channels))
        self.register_buffer("running_var", np.ones(channels))
        self.eps = eps
        self.momentum = momentum

    @property
    def n_partitions(self) -> int:
        return self.gamma.shape[0]

    def __call__(self, x: SparseTensor, probs: Probs, mode: Optional[NormMode] = None) -> SparseTensor:
        # without an explicit mode the module flag decides
        if mode is None:
            mode = NormMode.TRAIN if self.training else NormMode.INFER
        return scatter_norm(x, probs, self, mode)


def scatter_norm(x: SparseTensor, probs: Probs, params: PartitionedNorm, mode: NormMode) -> SparseTensor:
    """
    Normalizes the features of `x` and applies the probability-weighted mixture of the per-domain affine transforms:
    out = norm(x) * (P @ gamma) + (P @ beta), with P the domain probabilities of each site's scene. Train mode uses
    the biased statistics over all active sites of the batch and updates the running statistics, infer mode uses the
    running statistics.

    Parameters
    ----------
    x : SparseTensor
        the input
    probs : Probs
        (B, N) domain probabilities per batch element
    params : PartitionedNorm
        the normalization parameters
    mode : NormMode
        whether to use batch or running statistics

    Returns
    -------
    scatter_norm : SparseTensor
        the normalized tensor
    """
    probs = probs if isinstance(probs, Value) else Value(probs)
    if probs.shape != (x.batch_size, params.n_partitions):
        raise ContractViolation(f"Probabilities of shape {probs.shape} do not match {x.batch_size} batch elements "
                                f"and {params.n_partitions} partitions")
    if x.channels != params.gamma.shape[1]:
        raise ContractViolation(f"Input has {x.channels} channels, normalization expects {params.gamma.shape[1]}")

    features = x.features
    if mode == NormMode.TRAIN:
        if len(x) == 0:
            raise EmptySceneError("Cannot compute batch statistics without active sites")
        mean = ops.mean(features, axis=0, keepdims=True)
        centered = features - mean
        var = ops.mean(ops.square(centered), axis=0, keepdims=True)
        normalized = centered / ops.sqrt(var + params.eps)
        m = params.momentum
        params.running_mean = m * params.running_mean + (1 - m) * mean.data.reshape(-1)
        params.running_var = m * params.running_var + (1 - m) * var.data.reshape(-1)
    else:
        normalized = (features - params.running_mean) / np.sqrt(params.running_var + params.eps)

    site_probs = ops.take_rows(probs, x.batch)
    scale = site_probs @ params.gamma
    shift = site_probs @ params.beta
    return x.with_features(normalized * scale + shift)


class ContextParams(Module):
    """
    Per-domain linear transforms (C -> C) of the pooled scene feature, one for each domain selected by the context
    mode.

    Parameters
    ----------
    channels : int
        the channel count C
    indoor : Sequence[bool]
        the indoor flag of each training domain
    mode : ContextMode
        which domains receive a transform
        default: ContextMode.INDOOR_ONLY
    rng : Optional[np.random.Generator]
        generator for a small random initialization; transforms start at zero if not given
        default: None
    """
    weight: Parameter
    bias: Parameter
    domains: np.ndarray

    def __init__(self, channels: int, indoor: Sequence[bool], mode: ContextMode = ContextMode.INDOOR_ONLY,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        if mode == ContextMode.OFF:
            domains = []
        elif mode == ContextMode.ALL:
            domains = list(range(len(indoor)))
        else:
            domains = [d for d, flag in enumerate(indoor) if flag]
        self.domains = np.array(domains, dtype=np.int64)
        shape = (len(domains), channels, channels)
        weight = np.zeros(shape) if rng is None else rng.normal(0.0, 0.1 / np.sqrt(channels), size=shape)
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros((len(domains), channels)))

    def __call__(self, f: SparseTensor, probs: Probs) -> SparseTensor:
        return context_partition(f, probs, self)


def _pool(f: SparseTensor) -> Value:
    counts = np.maximum(f.counts(), 1).astype(np.float64)
    return ops.segment_sum(f.features, f.batch, f.batch_size) / counts[:, None]


def context_partition(f: SparseTensor, probs: Probs, params: ContextParams) -> SparseTensor:
    """
    Adds sum_i p_i * (GAP(f) @ W_i + b_i) over the partitioned domains i to every site of each scene. Scenes without
    probability mass on the partitioned domains pass through unchanged.

    Parameters
    ----------
    f : SparseTensor
        the features
    probs : Probs
        (B, N) domain probabilities per batch element
    params : ContextParams
        the per-domain transforms

    Returns
    -------
    context_partition : SparseTensor
        the contextualized features
    """
    if params.domains.size == 0:
        return f
    probs = probs if isinstance(probs, Value) else Value(probs)
    if f.channels != params.weight.shape[1]:
        raise ContractViolation(f"Input has {f.channels} channels, context transform expects {params.weight.shape[1]}")

    pooled = _pool(f)
    context = None
    for m, domain in enumerate(params.domains):
        transformed = pooled @ params.weight[m] + params.bias[m]
        term = probs[:, int(domain):int(domain) + 1] * transformed
        context = term if context is None else context + term

    mass = probs.data[:, params.domains].sum(axis=1)
    active = (mass != 0)[f.batch][:, None]
    updated = f.features + ops.take_rows(context, f.batch)
    return f.with_features(ops.where(np.broadcast_to(active, f.features.shape), updated, f.features))
