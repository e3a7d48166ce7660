from .partition import PartitionedNorm, scatter_norm, ContextParams, context_partition
from .router import Router, route

__all__ = [
    'PartitionedNorm', 'scatter_norm', 'ContextParams', 'context_partition',  # partition.py

    'Router', 'route',  # router.py
]
