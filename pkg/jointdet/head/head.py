"""
For License information see the LICENSE file.

"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classify import Classifier
from .coding import REGRESSION_SIZE
from ..api.constants import ClassificationMode, DEFAULT_TEMPERATURE
from ..autodiff import Module, Value, ops
from ..geometry import OrientedBox3D
from ..sparse import ConvKernel, SparseTensor


@dataclass(frozen=True)
class Detection:
    """A detected box with its class index in the union label space and its score in [0, 1]."""
    box: OrientedBox3D
    label: int
    score: float

    def __post_init__(self):
        if not 0 <= self.score <= 1:
            raise ValueError(f"Score must be in [0, 1], got {self.score}")


@dataclass
class HeadOutputs:
    """
    Per-site outputs of the head, all on the sites of `tensor`: class-agnostic logits (None if the branch is
    disabled), class-specific logits, fused class probabilities, regression vectors, centerness and IoU logits.
    """
    tensor: SparseTensor
    objectness: Optional[Value]
    class_logits: Value
    class_probs: Value
    regression: Value
    centerness: Value
    iou: Value

    def __len__(self) -> int:
        return len(self.tensor)


class DetectionHead(Module):
    """
    Anchor-free head on the final backbone stage: a shared submanifold convolution with rectifier followed by the
    classification branch and kernel-1 regression, centerness and IoU-prediction branches.

    Parameters
    ----------
    channels : int
        backbone output channels
    table : np.ndarray
        (K, E) embeddings of the union label space
    mode : ClassificationMode
        the classification branch design
        default: ClassificationMode.DUAL
    temperature : float
        cosine temperature
        default: DEFAULT_TEMPERATURE
    rng : Optional[np.random.Generator]
        generator for the initialization
        default: None
    """
    trunk: ConvKernel
    classifier: Classifier
    regression: ConvKernel
    centerness: ConvKernel
    iou: ConvKernel

    def __init__(self, channels: int, table: np.ndarray, mode: ClassificationMode = ClassificationMode.DUAL,
                 temperature: float = DEFAULT_TEMPERATURE, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.trunk = ConvKernel(channels, channels, 3, 1, rng)
        self.classifier = Classifier(channels, table, mode, temperature, rng)
        self.regression = ConvKernel(channels, REGRESSION_SIZE, 1, 1, rng)
        self.centerness = ConvKernel(channels, 1, 1, 1, rng)
        self.iou = ConvKernel(channels, 1, 1, 1, rng)
        for kernel in (self.regression, self.centerness, self.iou):
            kernel.weight.data = kernel.weight.data * 0.01
        # yaw starts at 0: (sin, cos) = (0, 1)
        self.regression.bias.data = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])

    def zero_final_biases(self) -> 'DetectionHead':
        for kernel in (self.regression, self.centerness, self.iou):
            kernel.bias.data = np.zeros_like(kernel.bias.data)
        for kernel in self.classifier.modules():
            if isinstance(kernel, ConvKernel):
                kernel.bias.data = np.zeros_like(kernel.bias.data)
        return self

    def __call__(self, features: SparseTensor) -> HeadOutputs:
        hidden = self.trunk(features)
        hidden = hidden.with_features(ops.relu(hidden.features))
        classes = self.classifier(hidden)
        return HeadOutputs(hidden, classes.objectness, classes.class_logits, classes.probs,
                           self.regression(hidden).features, self.centerness(hidden).features,
                           self.iou(hidden).features)
