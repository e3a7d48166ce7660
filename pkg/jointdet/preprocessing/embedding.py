"""
Category-name embedding tables. Tables are plain text: a "K E" header line followed by K lines "name v1 ... vE".

For License information see the LICENSE file.

"""
from logging import getLogger
from typing import Dict, List, Sequence
from zlib import crc32

import numpy as np

from ..api.constants import FormatError, ConfigError

log = getLogger(__name__)

FALLBACK_DIMENSION: int = 32


class EmbeddingTable:
    """
    Unit-normalized embedding vectors of class names.

    Parameters
    ----------
    names : Sequence[str]
        the class names, without duplicates
    vectors : np.ndarray
        (K, E) raw vectors; rows are normalized on construction
    """
    __names: List[str]
    __vectors: np.ndarray

    def __init__(self, names: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(names):
            raise ValueError(f"{len(names)} names but vectors of shape {vectors.shape}")
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate class names in {list(names)}")
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise ValueError("Embedding rows must be non-zero")
        self.__names = list(names)
        self.__vectors = vectors / norms
        self.__vectors.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.__vectors.shape[1]

    def names(self) -> List[str]:
        return list(self.__names)

    def vectors(self) -> np.ndarray:
        return self.__vectors

    def __len__(self) -> int:
        return len(self.__names)

    def __contains__(self, name: str) -> bool:
        return name in self.__names

    def vector(self, name: str) -> np.ndarray:
        return self.__vectors[self.__names.index(name)]

    def subtable(self, names: Sequence[str]) -> np.ndarray:
        """The (len(names), E) rows of `names` in the given order, e.g. the union label space of a manifest."""
        missing = [name for name in names if name not in self.__names]
        if missing:
            raise ConfigError(f"No embeddings for classes {missing}")
        index: Dict[str, int] = {name: i for i, name in enumerate(self.__names)}
        return self.__vectors[[index[name] for name in names]]

    def write(self, filename: str) -> None:
        with open(filename, "w") as f:
            f.write(f"{len(self)} {self.dimension}\n")
            for name, row in zip(self.__names, self.__vectors):
                f.write(name + " " + " ".join(repr(float(v)) for v in row) + "\n")


def load_embedding_table(filename: str) -> EmbeddingTable:
    """
    Reads an embedding table. Dimension inconsistencies and duplicate names raise a `FormatError` with the line
    number.

    Parameters
    ----------
    filename : str
        the table file

    Returns
    -------
    load_embedding_table : EmbeddingTable
        the row-normalized table
    """
    try:
        with open(filename) as f:
            lines = [line.rstrip("\n") for line in f]
    except OSError as e:
        raise FormatError(f"{filename}: cannot read embedding table ({e})")
    if not lines:
        raise FormatError(f"{filename}: line 1: missing 'K E' header")
    header = lines[0].split()
    try:
        n_classes, dim = int(header[0]), int(header[1])
        if len(header) != 2 or n_classes < 1 or dim < 1:
            raise ValueError
    except (ValueError, IndexError):
        raise FormatError(f"{filename}: line 1: expected 'K E' header, got {lines[0]!r}")

    names, rows = [], []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise FormatError(f"{filename}: line {number}: expected {dim} values, got {len(parts) - 1}")
        if parts[0] in names:
            raise FormatError(f"{filename}: line {number}: duplicate class name {parts[0]}")
        try:
            row = [float(v) for v in parts[1:]]
        except ValueError:
            raise FormatError(f"{filename}: line {number}: non-numeric value")
        if not np.all(np.isfinite(row)) or not np.any(row):
            raise FormatError(f"{filename}: line {number}: values must be finite and not all zero")
        names.append(parts[0])
        rows.append(row)
    if len(names) != n_classes:
        raise FormatError(f"{filename}: header: declares {n_classes} classes, found {len(names)}")
    return EmbeddingTable(names, np.array(rows))


def fallback_table(names: Sequence[str], dimension: int = FALLBACK_DIMENSION, seed: int = 0) -> EmbeddingTable:
    """
    A deterministic offline table: each row is a standard normal vector seeded by the class name and `seed`, so
    a class gets the same embedding in every label space. With E well above K the rows are nearly orthogonal.
    """
    if dimension < 1:
        raise ConfigError(f"Embedding dimension must be >= 1, got {dimension}")
    rows = [np.random.default_rng([seed, crc32(name.encode("utf-8"))]).standard_normal(dimension) for name in names]
    return EmbeddingTable(list(names), np.array(rows).reshape(len(names), dimension))
