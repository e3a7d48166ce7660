"""
For License information see the LICENSE file.

"""
from dataclasses import dataclass, field
from logging import getLogger
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .conv import ConvKernel
from .tensor import SparseTensor
from ..api.constants import ConfigError, ContextMode, NormMode, UNIFIED_ATTRIBUTE_CHANNELS
from ..autodiff import Module, Value, ops
from ..domain import PartitionedNorm, ContextParams

log = getLogger(__name__)


@dataclass(frozen=True)
class BackboneConfig:
    """Stage layout of the residual sparse CNN."""
    in_channels: int = UNIFIED_ATTRIBUTE_CHANNELS
    channels: Tuple[int, ...] = (16, 32, 64)
    strides: Tuple[int, ...] = (2, 2, 2)
    blocks: int = 1

    def validate(self) -> None:
        if self.in_channels <= 0:
            raise ConfigError(f"backbone.in_channels must be positive, got {self.in_channels}")
        if len(self.channels) == 0 or len(self.channels) != len(self.strides):
            raise ConfigError(f"backbone.channels {self.channels} and backbone.strides {self.strides} must be "
                              f"non-empty and of equal length")
        if any(c <= 0 for c in self.channels):
            raise ConfigError(f"backbone.channels must be positive, got {self.channels}")
        if any(s not in (1, 2) for s in self.strides):
            raise ConfigError(f"backbone.strides must be 1 or 2, got {self.strides}")
        if self.blocks < 0:
            raise ConfigError(f"backbone.blocks must be non-negative, got {self.blocks}")

    def total_stride(self) -> int:
        return int(np.prod(self.strides))


class ResidualBlock(Module):
    """conv -> norm -> relu -> conv -> norm, added to the input, followed by a rectifier."""
    conv1: ConvKernel
    norm1: PartitionedNorm
    conv2: ConvKernel
    norm2: PartitionedNorm

    def __init__(self, channels: int, n_partitions: int, rng: np.random.Generator):
        super().__init__()
        self.conv1 = ConvKernel(channels, channels, 3, 1, rng)
        self.norm1 = PartitionedNorm(channels, n_partitions)
        self.conv2 = ConvKernel(channels, channels, 3, 1, rng)
        self.norm2 = PartitionedNorm(channels, n_partitions)

    def __call__(self, x: SparseTensor, probs: Value, mode: Optional[NormMode] = None) -> SparseTensor:
        h = self.norm1(self.conv1(x), probs, mode)
        h = h.with_features(ops.relu(h.features))
        h = self.norm2(self.conv2(h), probs, mode)
        return h.with_features(ops.relu(h.features + x.features))


class Stage(Module):
    """A (possibly strided) entry convolution with norm and rectifier, residual blocks and context partitioning."""
    conv: ConvKernel
    norm: PartitionedNorm
    context: ContextParams
    blocks: List[ResidualBlock]

    def __init__(self, in_channels: int, out_channels: int, stride: int, n_blocks: int, n_partitions: int,
                 indoor: Sequence[bool], context_mode: ContextMode, rng: np.random.Generator):
        super().__init__()
        self.conv = ConvKernel(in_channels, out_channels, 3, stride, rng)
        self.norm = PartitionedNorm(out_channels, n_partitions)
        self.context = ContextParams(out_channels, indoor, context_mode)
        self.blocks = []
        for i in range(n_blocks):
            block = ResidualBlock(out_channels, n_partitions, rng)
            setattr(self, f"block{i}", block)
            self.blocks.append(block)

    def __call__(self, x: SparseTensor, norm_probs: Value, probs: Value,
                 mode: Optional[NormMode] = None) -> SparseTensor:
        h = self.norm(self.conv(x), norm_probs, mode)
        h = h.with_features(ops.relu(h.features))
        for block in self.blocks:
            h = block(h, norm_probs, mode)
        return self.context(h, probs)


class Backbone(Module):
    """
    Residual sparse CNN whose normalization layers are scatter-partitioned over the training domains (or shared when
    scatter partitioning is disabled) and whose stages end in context partitioning.
    """
    config: BackboneConfig
    scatter: bool
    stages: List[Stage]

    def __init__(self, config: BackboneConfig, indoor: Sequence[bool], scatter: bool = True,
                 context_mode: ContextMode = ContextMode.INDOOR_ONLY, rng: Optional[np.random.Generator] = None):
        super().__init__()
        config.validate()
        if len(indoor) == 0:
            raise ConfigError("At least one training domain is required")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config
        self.scatter = scatter
        n_partitions = len(indoor) if scatter else 1
        self.stages = []
        in_channels = config.in_channels
        for i, (channels, stride) in enumerate(zip(config.channels, config.strides)):
            stage = Stage(in_channels, channels, stride, config.blocks, n_partitions, indoor, context_mode, rng)
            setattr(self, f"stage{i}", stage)
            self.stages.append(stage)
            in_channels = channels

    @property
    def out_channels(self) -> int:
        return self.config.channels[-1]

    def __call__(self, x: SparseTensor, probs: Union[Value, np.ndarray],
                 mode: Optional[NormMode] = None) -> SparseTensor:
        """Runs all stages. `mode` overrides the train/eval flag of the normalization layers for this call."""
        probs = probs if isinstance(probs, Value) else Value(probs)
        norm_probs = probs if self.scatter else Value(np.ones((x.batch_size, 1)))
        for stage in self.stages:
            x = stage(x, norm_probs, probs, mode)
        return x

    def partition_parameter_count(self) -> int:
        """Number of parameters that exist once per domain: N scale and shift pairs of C channels in every
        normalization layer, plus the context transforms."""
        count = 0
        for module in self.modules():
            if isinstance(module, PartitionedNorm):
                count += module.n_partitions * 2 * module.gamma.shape[1]
            elif isinstance(module, ContextParams):
                count += module.weight.size + module.bias.size
        return count


def build_backbone(config: BackboneConfig, indoor: Sequence[bool], scatter: bool = True,
                   context_mode: ContextMode = ContextMode.INDOOR_ONLY,
                   rng: Optional[np.random.Generator] = None) -> Backbone:
    """
    Builds the backbone layer stack.

    Parameters
    ----------
    config : BackboneConfig
        the stage layout
    indoor : Sequence[bool]
        the indoor flag of each training domain
    scatter : bool
        whether normalization affines are partitioned per domain
        default: True
    context_mode : ContextMode
        which domains get context transforms
        default: ContextMode.INDOOR_ONLY
    rng : Optional[np.random.Generator]
        generator for the initialization
        default: None

    Returns
    -------
    build_backbone : Backbone
        the backbone
    """
    backbone = Backbone(config, indoor, scatter, context_mode, rng)
    log.debug(f"Built backbone with {len(backbone.stages)} stages and {backbone.n_parameters()} parameters")
    return backbone
