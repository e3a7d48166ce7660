"""
For License information see the LICENSE file.

"""
import logging
import sys

import numpy as np
import pytest

from jointdet.api.constants import ContextMode, ContractViolation, EmptySceneError, NormMode
from jointdet.autodiff import AdamW, OptimizerState, Tape, backward
from jointdet.domain import ContextParams, PartitionedNorm, Router, context_partition, route, scatter_norm
from jointdet.loss import router_loss
from jointdet.preprocessing import default_profiles, generate_scene
from jointdet.sparse import SparseTensor, canonical_order, global_avg_pool, voxelize_batch

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

log = logging.getLogger(__name__)

logging.basicConfig(handlers=[console], level=logging.INFO)


def batch_tensor(rng: np.random.Generator, channels: int, batch_size: int = 2, sites: int = 10) -> SparseTensor:
    coords = np.concatenate([np.stack(np.unravel_index(rng.choice(125, sites, replace=False), (5, 5, 5)), axis=1)
                             for _ in range(batch_size)])
    batch = np.repeat(np.arange(batch_size), sites)
    order = canonical_order(coords, batch)
    return SparseTensor(coords[order], batch[order], rng.normal(size=(coords.shape[0], channels)),
                        np.full(batch_size, 0.05))


def test_scatter_norm_example():
    x = SparseTensor(np.array([[0, 0, 0], [1, 0, 0]]), np.zeros(2), np.array([[1.0], [3.0]]), 0.1)
    params = PartitionedNorm(1, 2, eps=1e-12)
    params.gamma.data = np.array([[2.0], [4.0]])
    out = scatter_norm(x, np.array([[0.5, 0.5]]), params, NormMode.TRAIN)
    np.testing.assert_allclose(out.features.data, [[-3.0], [3.0]], atol=1e-9)


def test_scatter_norm_running_stats():
    x = SparseTensor(np.array([[0, 0, 0], [1, 0, 0]]), np.zeros(2), np.array([[1.0], [3.0]]), 0.1)
    params = PartitionedNorm(1, 1)
    scatter_norm(x, np.ones((1, 1)), params, NormMode.TRAIN)
    np.testing.assert_allclose(params.running_mean, [0.2])
    np.testing.assert_allclose(params.running_var, [0.9 + 0.1 * 1.0])


def test_scatter_norm_identity_infer():
    rng = np.random.default_rng(0)
    x = batch_tensor(rng, 3)
    params = PartitionedNorm(3, 2, eps=1e-12)
    out = scatter_norm(x, np.array([[0.2, 0.8], [1.0, 0.0]]), params, NormMode.INFER)
    np.testing.assert_allclose(out.features.data, x.features.data, atol=1e-9)


def test_scatter_norm_one_hot():
    rng = np.random.default_rng(1)
    x = batch_tensor(rng, 3)
    params = PartitionedNorm(3, 2)
    params.gamma.data = rng.normal(size=(2, 3))
    params.beta.data = rng.normal(size=(2, 3))
    out = scatter_norm(x, np.array([[0.0, 1.0], [0.0, 1.0]]), params, NormMode.TRAIN).features.data
    data = x.features.data
    expected = (data - data.mean(axis=0)) / np.sqrt(data.var(axis=0) + params.eps) * params.gamma.data[1] + \
        params.beta.data[1]
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_scatter_norm_mixing_linearity():
    rng = np.random.default_rng(2)
    x = batch_tensor(rng, 4)
    params = PartitionedNorm(4, 3)
    params.gamma.data = rng.normal(size=(3, 4))
    params.beta.data = rng.normal(size=(3, 4))
    probs = np.array([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3]])
    mixed = scatter_norm(x, probs, params, NormMode.INFER).features.data
    combined = sum(probs[x.batch, n][:, None] *
                   scatter_norm(x, np.tile(np.eye(3)[n], (2, 1)), params, NormMode.INFER).features.data
                   for n in range(3))
    np.testing.assert_allclose(mixed, combined, atol=1e-9)


def test_scatter_norm_shared_affine():
    rng = np.random.default_rng(3)
    x = batch_tensor(rng, 2)
    params = PartitionedNorm(2, 3)
    params.gamma.data = np.tile(rng.normal(size=2), (3, 1))
    params.beta.data = np.tile(rng.normal(size=2), (3, 1))
    a = scatter_norm(x, np.array([[1.0, 0.0, 0.0], [0.2, 0.3, 0.5]]), params, NormMode.INFER).features.data
    b = scatter_norm(x, np.array([[0.0, 0.0, 1.0], [0.9, 0.05, 0.05]]), params, NormMode.INFER).features.data
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_scatter_norm_errors():
    rng = np.random.default_rng(4)
    x = batch_tensor(rng, 2)
    with pytest.raises(ContractViolation):
        scatter_norm(x, np.ones((2, 1)), PartitionedNorm(2, 2), NormMode.TRAIN)
    with pytest.raises(ContractViolation):
        scatter_norm(x, np.ones((2, 1)), PartitionedNorm(3, 1), NormMode.TRAIN)
    empty = SparseTensor(np.zeros((0, 3)), np.zeros(0), np.zeros((0, 2)), 0.1)
    with pytest.raises(EmptySceneError):
        scatter_norm(empty, np.ones((1, 1)), PartitionedNorm(2, 1), NormMode.TRAIN)
    with pytest.raises(ValueError):
        PartitionedNorm(2, 1, eps=0.0)


def test_scatter_norm_permutation():
    rng = np.random.default_rng(5)
    x = batch_tensor(rng, 2, batch_size=1)
    params = PartitionedNorm(2, 2)
    params.gamma.data = rng.normal(size=(2, 2))
    perm = rng.permutation(len(x))
    permuted = SparseTensor(x.coords[perm], x.batch[perm], x.features.data[perm], x.voxel_sizes)
    probs = np.array([[0.3, 0.7]])
    np.testing.assert_allclose(scatter_norm(permuted, probs, params, NormMode.TRAIN).features.data,
                               scatter_norm(x, probs, params, NormMode.TRAIN).features.data[perm], atol=1e-12)


def test_context_outdoor_identity():
    rng = np.random.default_rng(6)
    x = batch_tensor(rng, 3)
    params = ContextParams(3, [True, False, False], rng=rng)
    params.bias.data = rng.normal(size=params.bias.shape)
    out = context_partition(x, np.array([[0.0, 0.4, 0.6], [0.0, 1.0, 0.0]]), params)
    np.testing.assert_array_equal(out.features.data, x.features.data)


def test_context_identity_transform():
    rng = np.random.default_rng(7)
    x = batch_tensor(rng, 3)
    params = ContextParams(3, [True, False])
    params.weight.data = np.eye(3)[None]
    out = context_partition(x, np.array([[1.0, 0.0], [1.0, 0.0]]), params)
    pooled = global_avg_pool(x).data
    np.testing.assert_allclose(out.features.data, x.features.data + pooled[x.batch], atol=1e-12)


def test_context_zero_features():
    x = SparseTensor(np.array([[0, 0, 0], [0, 1, 0]]), np.zeros(2), np.zeros((2, 2)), 0.1)
    params = ContextParams(2, [True], rng=np.random.default_rng(8))
    params.bias.data = np.array([[0.5, -1.0]])
    out = context_partition(x, np.ones((1, 1)), params)
    np.testing.assert_allclose(out.features.data, [[0.5, -1.0], [0.5, -1.0]])


def test_context_modes():
    indoor = [True, False, True]
    assert ContextParams(4, indoor, ContextMode.INDOOR_ONLY).domains.tolist() == [0, 2]
    assert ContextParams(4, indoor, ContextMode.ALL).domains.tolist() == [0, 1, 2]
    off = ContextParams(4, indoor, ContextMode.OFF)
    assert off.domains.size == 0
    x = batch_tensor(np.random.default_rng(9), 4)
    assert context_partition(x, np.full((2, 3), 1 / 3), off) is x


def test_route_distribution():
    rng = np.random.default_rng(10)
    x = batch_tensor(rng, 6)
    probs = route(x, Router(6, 3, rng=rng)).data
    assert probs.shape == (2, 3)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert np.all((probs > 0) & (probs < 1))


def test_route_uniform():
    x = batch_tensor(np.random.default_rng(11), 6)
    router = Router(6, 4)
    router.classifier.weight.data = np.zeros(router.classifier.weight.shape)
    np.testing.assert_allclose(route(x, router).data, np.full((2, 4), 0.25))


def test_route_empty():
    empty = SparseTensor(np.zeros((0, 3)), np.zeros(0), np.zeros((0, 6)), 0.1)
    with pytest.raises(EmptySceneError):
        route(empty, Router(6, 2))


def test_router_learns():
    profiles = default_profiles()
    indoor, outdoor = profiles[1], profiles[3]
    scenes = [generate_scene(indoor, 0, i) for i in range(2)] + [generate_scene(outdoor, 0, i) for i in range(2)]
    tensor = voxelize_batch([(s.positions, s.attributes, p.voxel_size)
                             for s, p in zip(scenes, [indoor, indoor, outdoor, outdoor])])
    labels = np.array([0, 0, 1, 1])
    router = Router(6, 2, hidden=8, rng=np.random.default_rng(12))
    params = router.parameters()
    optimizer = AdamW(params, OptimizerState(lr=1e-2))
    losses = []
    for _ in range(25):
        optimizer.zero_grad()
        with Tape() as tape:
            loss = router_loss(router.logits(tensor), labels)
        backward(tape, loss, params.values())
        optimizer.step()
        losses.append(loss.item())
    assert losses[-1] < losses[0]
