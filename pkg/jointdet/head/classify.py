"""
Classification branches. In the dual design the class-agnostic objectness probability of a site is multiplied with a
class-specific probability obtained from the cosine similarity of the projected site feature with the category-name
embeddings.

For License information see the LICENSE file.

"""
from typing import Optional, Union

import numpy as np

from ..api.constants import ClassificationMode, ConfigError, DEFAULT_TEMPERATURE
from ..autodiff import Module, Parameter, Value, ops
from ..sparse import ConvKernel, SparseTensor

NORM_FLOOR: float = 1e-12


def cosine_logits(projected: Value, table: Value, temperature: float) -> Value:
    """Returns the (V, K) cosine similarities of (V, E) features with (K, E) embeddings, divided by `temperature`."""
    feature_norm = ops.sqrt(ops.sum_(ops.square(projected), axis=1, keepdims=True) + NORM_FLOOR)
    table_norm = ops.sqrt(ops.sum_(ops.square(table), axis=1, keepdims=True) + NORM_FLOOR)
    return ((projected / feature_norm) @ ops.transpose(table / table_norm)) / temperature


def classify(objectness: Optional[Value], projected: Value, table: Union[Value, np.ndarray],
             temperature: float = DEFAULT_TEMPERATURE) -> Value:
    """
    Class probabilities p_k = sigmoid(objectness) * sigmoid(cos(projected, table_k) / temperature). Without an
    objectness logit only the class-specific factor is returned.

    Parameters
    ----------
    objectness : Optional[Value]
        (V, 1) class-agnostic logits
    projected : Value
        (V, E) projected site features
    table : Union[Value, np.ndarray]
        (K, E) category-name embeddings; a plain array receives no gradient
    temperature : float
        the softmax temperature of the cosine logits
        default: DEFAULT_TEMPERATURE

    Returns
    -------
    classify : Value
        (V, K) class probabilities
    """
    table = table if isinstance(table, Value) else Value(table)
    if projected.shape[1] != table.shape[1]:
        raise ConfigError(f"Projected features have dimension {projected.shape[1]}, embeddings {table.shape[1]}")
    specific = ops.sigmoid(cosine_logits(projected, table, temperature))
    if objectness is None:
        return specific
    return ops.sigmoid(objectness) * specific


class Classifier(Module):
    """
    The classification branch of the head in one of the `ClassificationMode` designs.

    Parameters
    ----------
    channels : int
        input channel count
    table : np.ndarray
        (K, E) embeddings of the union label space
    mode : ClassificationMode
        the branch design
        default: ClassificationMode.DUAL
    temperature : float
        cosine temperature
        default: DEFAULT_TEMPERATURE
    rng : Optional[np.random.Generator]
        generator for the initialization
        default: None
    """
    mode: ClassificationMode
    temperature: float

    def __init__(self, channels: int, table: np.ndarray, mode: ClassificationMode = ClassificationMode.DUAL,
                 temperature: float = DEFAULT_TEMPERATURE, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        table = np.asarray(table, dtype=np.float64)
        self.mode = mode
        self.temperature = temperature
        n_classes, dim = table.shape

        if mode == ClassificationMode.CONV_ONLY:
            self.class_conv = _small(ConvKernel(channels, n_classes, 3, 1, rng))
            return
        if mode == ClassificationMode.DUAL:
            self.objectness = _small(ConvKernel(channels, 1, 3, 1, rng))
        self.projection = ConvKernel(channels, dim, 1, 1, rng)
        if mode == ClassificationMode.EMBEDDING_TRAINABLE:
            self.embeddings = Parameter(table.copy())
        else:
            self.register_buffer("frozen_table", table.copy())

    def table(self) -> Value:
        if self.mode == ClassificationMode.EMBEDDING_TRAINABLE:
            return self.embeddings
        return Value(self.frozen_table)

    def __call__(self, features: SparseTensor) -> 'ClassifierOutputs':
        if self.mode == ClassificationMode.CONV_ONLY:
            logits = self.class_conv(features).features
            return ClassifierOutputs(None, logits, ops.sigmoid(logits))
        projected = self.projection(features).features
        objectness = self.objectness(features).features if self.mode == ClassificationMode.DUAL else None
        logits = cosine_logits(projected, self.table(), self.temperature)
        probs = ops.sigmoid(logits) if objectness is None else ops.sigmoid(objectness) * ops.sigmoid(logits)
        return ClassifierOutputs(objectness, logits, probs)


class ClassifierOutputs:
    """Per-site class-agnostic logits (None without that branch), class-specific logits and fused probabilities."""
    __slots__ = ("objectness", "class_logits", "probs")

    def __init__(self, objectness: Optional[Value], class_logits: Value, probs: Value):
        self.objectness = objectness
        self.class_logits = class_logits
        self.probs = probs


def _small(kernel: ConvKernel, scale: float = 0.01) -> ConvKernel:
    kernel.weight.data = kernel.weight.data * scale
    return kernel
