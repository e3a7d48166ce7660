"""
For License information see the LICENSE file.

"""
from logging import getLogger
from typing import List, Sequence, Tuple, TypeVar

import numpy as np

from ..api.constants import ConfigError

log = getLogger(__name__)

T = TypeVar("T")


def sample_indices(corpus_sizes: Sequence[int], batch_size: int,
                   rng: np.random.Generator) -> List[Tuple[int, int]]:
    """
    Dataset-aware sampling: for every batch slot first draws a domain uniformly, then a scene uniformly within it.

    Parameters
    ----------
    corpus_sizes : Sequence[int]
        the number of scenes of every domain
    batch_size : int
        the number of slots
    rng : np.random.Generator
        the random generator

    Returns
    -------
    sample_indices : List[Tuple[int, int]]
        (domain position, scene index) per slot
    """
    if batch_size < 1:
        raise ConfigError(f"Batch size must be >= 1, got {batch_size}")
    if len(corpus_sizes) == 0:
        raise ConfigError("No corpora to sample from")
    for position, size in enumerate(corpus_sizes):
        if size < 1:
            raise ConfigError(f"Corpus {position} is empty")
    draws = []
    for _ in range(batch_size):
        domain = int(rng.integers(len(corpus_sizes)))
        draws.append((domain, int(rng.integers(corpus_sizes[domain]))))
    return draws


def sample_batch(corpora: Sequence[Sequence[T]], batch_size: int, rng: np.random.Generator) -> List[T]:
    """Draws a batch of scenes from per-domain corpora with `sample_indices`."""
    return [corpora[d][i] for d, i in sample_indices([len(c) for c in corpora], batch_size, rng)]
