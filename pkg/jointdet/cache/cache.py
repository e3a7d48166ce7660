"""
For License information see the LICENSE file.

"""
from typing import Generic, TypeVar, Dict, Iterator, Mapping, Callable, Optional, Set, Hashable

T = TypeVar("T")
A = TypeVar("A", bound=Hashable)


class Cache(Generic[A, T], Mapping[A, T]):
    """Memoizes values computed from hashable keys, e.g. per-class box statistics of a corpus."""
    __cache: Dict[A, T]
    __accessor: Callable[[A], T]

    def __init__(self, cache: Dict[A, T], accessor: Callable[[A], T]):
        self.__cache = cache
        self.__accessor = accessor

    def compute_if_absent(self, key: A) -> T:
        if key not in self.__cache:
            self.__cache[key] = self.__accessor(key)
        return self.__cache[key]

    def __getitem__(self, key: A) -> T:
        return self.compute_if_absent(key)

    def __iter__(self) -> Iterator[A]:
        return iter(self.__cache)

    def __len__(self) -> int:
        return len(self.__cache)

    @classmethod
    def build(cls, accessor: Callable[[A], T], keys: Optional[Set[A]] = None) -> 'Cache[A, T]':
        """
        Creates a cache for the given accessor. Values can be precomputed by supplying keys.

        Parameters
        ----------
        accessor : Callable[[A], T]
            the function to cache results of
        keys : Optional[Set[A]]
            the keys to precompute values for

        Returns
        -------
        build : Cache[A, T]
            the cache
        """
        cache = cls(dict(), accessor)
        for key in sorted(keys or (), key=str):
            cache.compute_if_absent(key)
        return cache
