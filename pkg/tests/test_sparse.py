"""
For License information see the LICENSE file.

"""
import logging
import sys

import numpy as np
import pytest

from jointdet.api.constants import ConfigError, ContextMode, ContractViolation, EmptySceneError, RejectedInputError
from jointdet.autodiff import Value
from jointdet.sparse import ConvKernel, SparseTensor, build_rulebook, canonical_order, global_avg_pool, \
    kernel_offsets, sparse_conv, voxelize, voxelize_batch
from jointdet.sparse.backbone import BackboneConfig, build_backbone

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

log = logging.getLogger(__name__)

logging.basicConfig(handlers=[console], level=logging.INFO)


def random_tensor(rng: np.random.Generator, size: int, occupancy: float, channels: int) -> SparseTensor:
    grid = np.stack(np.meshgrid(np.arange(size), np.arange(size), np.arange(size), indexing="ij"), axis=-1)
    coords = grid.reshape(-1, 3)
    coords = coords[rng.random(coords.shape[0]) < occupancy]
    if coords.shape[0] == 0:
        coords = np.zeros((1, 3), dtype=np.int64)
    batch = np.zeros(coords.shape[0], dtype=np.int64)
    order = canonical_order(coords, batch)
    return SparseTensor(coords[order], batch, rng.normal(size=(coords.shape[0], channels)), 0.1)


def dense_reference(x: SparseTensor, kernel: ConvKernel, out_coords: np.ndarray) -> np.ndarray:
    # correlation on a zero-padded dense grid, evaluated at the output sites
    stride = kernel.stride
    pad = kernel.kernel_size
    extent = x.coords.max(axis=0) + 2 * pad + 1
    dense = np.zeros(tuple(extent) + (x.channels,))
    dense[tuple((x.coords + pad).T)] = x.features.data
    out = np.zeros((out_coords.shape[0], kernel.out_channels)) + kernel.bias.data
    for k, offset in enumerate(kernel_offsets(kernel.kernel_size)):
        source = out_coords * stride + offset + pad
        out += dense[tuple(source.T)] @ kernel.weight.data[k]
    return out


def test_voxelize_floor():
    t = voxelize(np.array([[0.005, 0.005, 0.005], [-0.005, 0.0151, 0.0]]), np.ones((2, 6)), 0.01)
    np.testing.assert_array_equal(np.sort(t.coords, axis=0), np.sort(np.array([[0, 0, 0], [-1, 1, 0]]), axis=0))


def test_voxelize_mean():
    t = voxelize(np.array([[0.001, 0.001, 0.001], [0.009, 0.009, 0.009]]), np.array([[1.0], [3.0]]), 0.01, 1)
    assert len(t) == 1
    np.testing.assert_allclose(t.features.data, [[2.0]])


def test_voxelize_repeats_attributes():
    t = voxelize(np.zeros((1, 3)), np.array([[1.0, 2.0, 3.0]]), 0.05)
    np.testing.assert_array_equal(t.features.data, [[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]])
    with pytest.raises(ContractViolation):
        voxelize(np.zeros((1, 3)), np.ones((1, 4)), 0.05)


def test_voxelize_edge_cases():
    empty = voxelize(np.zeros((0, 3)), np.zeros((0, 6)), 0.01)
    assert len(empty) == 0
    with pytest.raises(RejectedInputError):
        voxelize(np.array([[np.nan, 0.0, 0.0]]), np.ones((1, 6)), 0.01)
    with pytest.raises(ContractViolation):
        voxelize(np.zeros((1, 3)), np.ones((1, 6)), 0.0)


def test_voxelize_batch_sizes():
    rng = np.random.default_rng(0)
    t = voxelize_batch([(rng.random((50, 3)), rng.random((50, 6)), 0.1),
                        (rng.random((30, 3)) * 10, rng.random((30, 3)), 0.5)])
    assert t.batch_size == 2
    np.testing.assert_array_equal(t.voxel_sizes, [0.1, 0.5])
    assert t.channels == 6
    np.testing.assert_array_equal(t.batch, np.sort(t.batch))


def test_identity_kernel():
    rng = np.random.default_rng(1)
    x = random_tensor(rng, 4, 0.5, 3)
    kernel = ConvKernel(3, 3, 1, 1).set_identity()
    y = sparse_conv(x, kernel)
    np.testing.assert_array_equal(y.coords, x.coords)
    np.testing.assert_allclose(y.features.data, x.features.data)


def test_zero_weights_bias():
    x = random_tensor(np.random.default_rng(2), 4, 0.5, 2)
    kernel = ConvKernel(2, 3)
    kernel.bias.data = np.array([1.0, -2.0, 0.5])
    y = sparse_conv(x, kernel)
    np.testing.assert_array_equal(y.features.data, np.tile([1.0, -2.0, 0.5], (len(x), 1)))


def test_channel_mismatch():
    x = random_tensor(np.random.default_rng(3), 3, 0.5, 2)
    with pytest.raises(ContractViolation):
        sparse_conv(x, ConvKernel(3, 3))


def test_kernel_config():
    with pytest.raises(ConfigError):
        ConvKernel(2, 2, 2)
    with pytest.raises(ConfigError):
        ConvKernel(2, 2, 3, 3)


def test_dense_oracle():
    rng = np.random.default_rng(4)
    for i in range(50):
        size = int(rng.integers(2, 7))
        occupancy = 1.0 if i % 2 == 0 else rng.uniform(0.2, 0.8)
        x = random_tensor(rng, size, occupancy, 2)
        for stride in (1, 2):
            kernel = ConvKernel(2, 3, 3, stride, rng)
            kernel.bias.data = rng.normal(size=3)
            y = sparse_conv(x, kernel)
            if stride == 1:
                np.testing.assert_array_equal(y.coords, x.coords)
            np.testing.assert_allclose(y.features.data, dense_reference(x, kernel, y.coords), atol=1e-9)


def test_strided_sites():
    x = SparseTensor(np.array([[0, 0, 0], [1, 1, 1], [2, 0, 0], [-1, 0, 0]]), np.zeros(4), np.ones((4, 1)), 0.1)
    order = canonical_order(x.coords, x.batch)
    x = SparseTensor(x.coords[order], x.batch, np.ones((4, 1)), 0.1)
    y = sparse_conv(x, ConvKernel(1, 1, 3, 2))
    assert {tuple(c) for c in y.coords} == {(0, 0, 0), (1, 0, 0), (-1, 0, 0)}
    np.testing.assert_allclose(y.voxel_sizes, [0.2])


def test_rulebook_pairs():
    x = random_tensor(np.random.default_rng(5), 5, 0.4, 1)
    for stride in (1, 2):
        rulebook = build_rulebook(x, 3, stride)
        for offset, (i_idx, o_idx) in zip(rulebook.offsets, rulebook.pairs):
            np.testing.assert_array_equal(rulebook.out_coords[o_idx] * stride + offset, x.coords[i_idx])


def test_rulebook_deterministic():
    a = random_tensor(np.random.default_rng(6), 5, 0.5, 1)
    b = random_tensor(np.random.default_rng(6), 5, 0.5, 1)
    ra, rb = build_rulebook(a, 3, 2), build_rulebook(b, 3, 2)
    np.testing.assert_array_equal(ra.out_coords, rb.out_coords)
    for (ia, oa), (ib, ob) in zip(ra.pairs, rb.pairs):
        np.testing.assert_array_equal(ia, ib)
        np.testing.assert_array_equal(oa, ob)


def test_linearity():
    rng = np.random.default_rng(7)
    x = random_tensor(rng, 4, 0.6, 2)
    y = x.with_features(Value(rng.normal(size=(len(x), 2))))
    kernel = ConvKernel(2, 3, 3, 1, rng)
    combined = x.with_features(Value(2.0 * x.features.data - 0.5 * y.features.data))
    np.testing.assert_allclose(sparse_conv(combined, kernel).features.data,
                               2.0 * sparse_conv(x, kernel).features.data - 0.5 * sparse_conv(y, kernel).features.data,
                               atol=1e-12)


def test_global_avg_pool():
    single = SparseTensor(np.zeros((1, 3)), np.zeros(1), np.array([[1.0, 2.0]]), 0.1)
    np.testing.assert_array_equal(global_avg_pool(single).data, [[1.0, 2.0]])
    pair = SparseTensor(np.array([[0, 0, 0], [1, 0, 0]]), np.zeros(2), np.array([[0.0], [2.0]]), 0.1)
    np.testing.assert_array_equal(global_avg_pool(pair).data, [[1.0]])


def test_global_avg_pool_permutation():
    rng = np.random.default_rng(8)
    x = random_tensor(rng, 4, 0.7, 3)
    perm = rng.permutation(len(x))
    permuted = SparseTensor(x.coords[perm], x.batch[perm], x.features.data[perm], 0.1)
    np.testing.assert_allclose(global_avg_pool(permuted).data, global_avg_pool(x).data, atol=1e-12)


def test_global_avg_pool_empty_element():
    x = SparseTensor(np.zeros((1, 3)), np.zeros(1), np.ones((1, 2)), [0.1, 0.1])
    with pytest.raises(EmptySceneError):
        global_avg_pool(x)


def test_backbone_submanifold_stage():
    x = random_tensor(np.random.default_rng(9), 4, 0.5, 4)
    backbone = build_backbone(BackboneConfig(4, (4,), (1,), 0), [True])
    y = backbone(x, np.ones((1, 1)))
    np.testing.assert_array_equal(y.coords, x.coords)


def test_backbone_downsampling():
    x = random_tensor(np.random.default_rng(10), 6, 0.5, 6)
    backbone = build_backbone(BackboneConfig(6, (8, 8), (1, 2), 1), [True, False])
    y = backbone(x, np.array([[0.3, 0.7]]))
    assert len(y) <= len(x)
    assert y.channels == 8
    np.testing.assert_allclose(y.voxel_sizes, [0.2])


@pytest.mark.parametrize("config", [
    BackboneConfig(channels=(0, 8), strides=(1, 2)),
    BackboneConfig(channels=(8,), strides=(3,)),
    BackboneConfig(channels=(8, 8), strides=(1,)),
    BackboneConfig(channels=(), strides=()),
])
def test_backbone_invalid(config):
    with pytest.raises(ConfigError):
        build_backbone(config, [True])


def test_partition_overhead():
    backbone = build_backbone(BackboneConfig(), [True, True, False, False], True, ContextMode.INDOOR_ONLY)
    assert backbone.partition_parameter_count() < 0.05 * backbone.n_parameters()


def test_partition_parameter_count():
    # 3 norm layers (entry + one residual block) of 4 partitions x 2 x 8 channels, no context transforms
    backbone = build_backbone(BackboneConfig(6, (8,), (1,), 1), [True, True, False, False], True, ContextMode.OFF)
    assert backbone.partition_parameter_count() == 3 * 4 * 2 * 8
    shared = build_backbone(BackboneConfig(6, (8,), (1,), 1), [True, True], False, ContextMode.OFF)
    assert shared.partition_parameter_count() == 3 * 1 * 2 * 8
