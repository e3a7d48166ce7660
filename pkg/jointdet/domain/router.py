"""
For License information see the LICENSE file.

"""
from typing import Optional

import numpy as np

from ..api.constants import EmptySceneError
from ..autodiff import Module, Value, ops
from ..sparse import SparseTensor, ConvKernel, global_avg_pool


class Router(Module):
    """
    Domain classifier on the voxelized input: a kernel-3 sparse convolution with rectifier, a kernel-1 convolution to
    N logits and global average pooling.

    Parameters
    ----------
    in_channels : int
        input channel count
    n_domains : int
        the number of training domains N
    hidden : int
        channels of the first convolution
        default: 16
    stride : int
        stride of the first convolution
        default: 2
    rng : Optional[np.random.Generator]
        generator for the initialization
        default: None
    """
    conv: ConvKernel
    classifier: ConvKernel

    def __init__(self, in_channels: int, n_domains: int, hidden: int = 16, stride: int = 2,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.conv = ConvKernel(in_channels, hidden, kernel_size=3, stride=stride, rng=rng)
        self.classifier = ConvKernel(hidden, n_domains, kernel_size=1, rng=rng)

    @property
    def n_domains(self) -> int:
        return self.classifier.out_channels

    def logits(self, scene: SparseTensor) -> Value:
        """Returns the (B, N) routing logits."""
        if len(scene) == 0 or np.any(scene.counts() == 0):
            raise EmptySceneError("Cannot route an empty scene")
        hidden = self.conv(scene)
        hidden = hidden.with_features(ops.relu(hidden.features))
        return global_avg_pool(self.classifier(hidden))

    def __call__(self, scene: SparseTensor) -> Value:
        return route(scene, self)


def route(scene: SparseTensor, router: Router) -> Value:
    """
    Computes the domain probabilities of every scene of the batch.

    Parameters
    ----------
    scene : SparseTensor
        the voxelized input
    router : Router
        the router parameters

    Returns
    -------
    route : Value
        (B, N) probabilities, each row summing to 1
    """
    return ops.softmax(router.logits(scene), axis=1)
