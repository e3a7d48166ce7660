from .tensor import SparseTensor, voxelize, voxelize_batch, canonical_order
from .rulebook import Rulebook, build_rulebook, kernel_offsets, output_sites
from .conv import ConvKernel, sparse_conv, sparse_conv_values, global_avg_pool

# backbone.py depends on jointdet.domain and is imported as jointdet.sparse.backbone

__all__ = [
    'SparseTensor', 'voxelize', 'voxelize_batch', 'canonical_order',  # tensor.py

    'Rulebook', 'build_rulebook', 'kernel_offsets', 'output_sites',  # rulebook.py

    'ConvKernel', 'sparse_conv', 'sparse_conv_values', 'global_avg_pool',  # conv.py
]
