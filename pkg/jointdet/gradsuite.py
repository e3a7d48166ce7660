"""
Finite-difference checks of every custom backward rule. Each registered check builds a scalar function of a single
array together with a random evaluation point; `run_suite` reports the maximum relative gradient error per check.

For License information see the LICENSE file.

"""
from logging import getLogger
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np

from .api.constants import ConfigError, NormMode
from .autodiff import Value, grad_check, ops
from .domain import ContextParams, PartitionedNorm, context_partition, scatter_norm
from .head import classify, decode_values
from .loss import bce_loss, iou3d_regression_loss, router_loss, soft_focal_loss
from .sparse import SparseTensor, canonical_order, sparse_conv_values

log = getLogger(__name__)

CheckCase = Tuple[Callable[[Value], Value], np.ndarray]

_CHECKS: Dict[str, Callable[[np.random.Generator], CheckCase]] = {}


def register_check(name: str):
    """Registers a function `rng -> (fn, point)` under `name`."""

    def decorator(builder: Callable[[np.random.Generator], CheckCase]):
        if name in _CHECKS:
            raise ValueError(f"Check {name} is already registered")
        _CHECKS[name] = builder
        return builder

    return decorator


def check_names():
    return list(_CHECKS)


def _tensor(rng: np.random.Generator, channels: int, batch_size: int = 2, sites: int = 12) -> SparseTensor:
    coords, batch = [], []
    for b in range(batch_size):
        cells = rng.choice(64, size=sites, replace=False)
        coords.append(np.stack([cells % 4, (cells // 4) % 4, cells // 16], axis=1))
        batch.append(np.full(sites, b))
    coords, batch = np.concatenate(coords), np.concatenate(batch)
    order = canonical_order(coords, batch)
    return SparseTensor(coords[order], batch[order], rng.normal(size=(batch_size * sites, channels)),
                        np.full(batch_size, 0.1))


def _probs(rng: np.random.Generator, batch_size: int, n: int) -> np.ndarray:
    logits = rng.normal(size=(batch_size, n))
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _projection(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.normal(size=shape)


@register_check("sparse_conv")
def _sparse_conv(rng: np.random.Generator) -> CheckCase:
    x = _tensor(rng, 2)
    bias = Value(rng.normal(size=3))
    r = _projection(rng, (len(x), 3))

    def fn(weight: Value) -> Value:
        return ops.sum_(sparse_conv_values(x, weight, bias, 3, 1).features * r)

    return fn, rng.normal(size=(27, 2, 3))


@register_check("sparse_conv_strided")
def _sparse_conv_strided(rng: np.random.Generator) -> CheckCase:
    weight = Value(rng.normal(size=(27, 2, 3)))
    bias = Value(rng.normal(size=3))
    x = _tensor(rng, 2)
    n_out = len(sparse_conv_values(x, weight, bias, 3, 2))
    r = _projection(rng, (n_out, 3))

    def fn(features: Value) -> Value:
        return ops.sum_(sparse_conv_values(x.with_features(features), weight, bias, 3, 2).features * r)

    return fn, x.features.data.copy()


@register_check("scatter_norm")
def _scatter_norm(rng: np.random.Generator) -> CheckCase:
    x = _tensor(rng, 3)
    probs = _probs(rng, 2, 2)
    params = PartitionedNorm(3, 2)
    params.gamma.data = rng.normal(size=(2, 3))
    params.beta.data = rng.normal(size=(2, 3))
    r = _projection(rng, (len(x), 3))

    def fn(features: Value) -> Value:
        return ops.sum_(scatter_norm(x.with_features(features), probs, params, NormMode.TRAIN).features * r)

    return fn, x.features.data.copy()


@register_check("scatter_norm_affine")
def _scatter_norm_affine(rng: np.random.Generator) -> CheckCase:
    x = _tensor(rng, 3)
    probs = _probs(rng, 2, 2)
    params = PartitionedNorm(3, 2)
    r = _projection(rng, (len(x), 3))

    def fn(gamma: Value) -> Value:
        params.gamma = gamma
        return ops.sum_(scatter_norm(x, probs, params, NormMode.TRAIN).features * r)

    return fn, rng.normal(size=(2, 3))


@register_check("context_partition")
def _context_partition(rng: np.random.Generator) -> CheckCase:
    x = _tensor(rng, 3)
    probs = _probs(rng, 2, 3)
    params = ContextParams(3, [True, False, True], rng=rng)
    r = _projection(rng, (len(x), 3))

    def fn(features: Value) -> Value:
        return ops.sum_(context_partition(x.with_features(features), probs, params).features * r)

    return fn, x.features.data.copy()


@register_check("context_weights")
def _context_weights(rng: np.random.Generator) -> CheckCase:
    x = _tensor(rng, 3)
    probs = _probs(rng, 2, 3)
    params = ContextParams(3, [True, False, True], rng=rng)
    r = _projection(rng, (len(x), 3))

    def fn(weight: Value) -> Value:
        params.weight = weight
        return ops.sum_(context_partition(x, probs, params).features * r)

    return fn, rng.normal(0.0, 0.3, size=(2, 3, 3))


@register_check("soft_focal_loss")
def _soft_focal(rng: np.random.Generator) -> CheckCase:
    c = (rng.random((6, 3)) < 0.3).astype(np.float64)
    iou = rng.uniform(0.2, 0.9, size=(6, 3))

    def fn(p: Value) -> Value:
        return ops.sum_(soft_focal_loss(p, c, iou))

    return fn, rng.uniform(0.05, 0.95, size=(6, 3))


@register_check("iou3d_loss")
def _iou3d_loss(rng: np.random.Generator) -> CheckCase:
    target = np.column_stack([rng.normal(0.0, 0.2, size=(4, 3)), rng.uniform(1.0, 2.0, size=(4, 3)),
                              rng.uniform(-np.pi, np.pi, size=4)])
    pred = target.copy()
    pred[:, :3] += rng.normal(0.0, 0.15, size=(4, 3))
    pred[:, 3:6] *= rng.uniform(0.8, 1.2, size=(4, 3))
    pred[:, 6] += rng.normal(0.0, 0.2, size=4)
    weights = rng.uniform(0.2, 1.0, size=4)

    def fn(boxes: Value) -> Value:
        return iou3d_regression_loss(boxes, target, weights)

    return fn, pred


@register_check("bce")
def _bce(rng: np.random.Generator) -> CheckCase:
    target = rng.random(8)

    def fn(logit: Value) -> Value:
        return ops.sum_(bce_loss(logit, target))

    return fn, rng.normal(0.0, 2.0, size=8)


@register_check("router_ce")
def _router_ce(rng: np.random.Generator) -> CheckCase:
    labels = rng.integers(0, 4, size=5)

    def fn(logits: Value) -> Value:
        return router_loss(logits, labels)

    return fn, rng.normal(size=(5, 4))


@register_check("classify")
def _classify(rng: np.random.Generator) -> CheckCase:
    table = rng.normal(size=(4, 5))
    table /= np.linalg.norm(table, axis=1, keepdims=True)
    objectness = Value(rng.normal(size=(6, 1)))
    r = _projection(rng, (6, 4))

    def fn(projected: Value) -> Value:
        return ops.sum_(classify(objectness, projected, table, 0.5) * r)

    return fn, rng.normal(size=(6, 5))


@register_check("decode")
def _decode(rng: np.random.Generator) -> CheckCase:
    locations = rng.normal(size=(5, 3))
    cell_sizes = rng.uniform(0.05, 0.2, size=5)
    base_dims = rng.uniform(0.5, 2.0, size=(5, 3))
    r = _projection(rng, (5, 7))

    def fn(regression: Value) -> Value:
        return ops.sum_(decode_values(locations, regression, cell_sizes, base_dims) * r)

    point = rng.normal(0.0, 0.3, size=(5, 8))
    point[:, 6:8] = rng.uniform(0.5, 1.0, size=(5, 2)) * rng.choice([-1.0, 1.0], size=(5, 2))
    return fn, point


def run_suite(names: Optional[Iterable[str]] = None, points: int = 5, seed: int = 0,
              step: float = 1e-5) -> Dict[str, float]:
    """
    Runs the registered gradient checks at `points` random points each.

    Parameters
    ----------
    names : Optional[Iterable[str]]
        the checks to run, all registered checks if not given
        default: None
    points : int
        random evaluation points per check
        default: 5
    seed : int
        seed of the evaluation points
        default: 0
    step : float
        the finite-difference step
        default: 1e-5

    Returns
    -------
    run_suite : Dict[str, float]
        the maximum relative error of each check
    """
    names = check_names() if names is None else list(names)
    unknown = [name for name in names if name not in _CHECKS]
    if unknown:
        raise ConfigError(f"Unknown gradient checks {unknown}, known are {check_names()}")
    errors = {}
    for name in names:
        worst = 0.0
        for i in range(points):
            fn, point = _CHECKS[name](np.random.default_rng([seed, i]))
            worst = max(worst, grad_check(fn, point, step))
        errors[name] = worst
        log.info(f"{name}: max relative error {worst:.3e}")
    return errors
