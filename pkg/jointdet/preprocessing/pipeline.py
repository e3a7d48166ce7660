"""
Composable scene pipelines. A `Source` yields scenes, `Filter`s transform the stream and a `Sink` consumes it:

    (source >> (augmentation | subsample > writer))

`|` chains filters, `>` attaches a filter to a sink and `>>` runs a source into a sink.

For License information see the LICENSE file.

"""
from abc import ABC, abstractmethod
from logging import getLogger
from typing import Generic, Iterable, Iterator, List, TypeVar, Union

log = getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")
V = TypeVar("V")


class Source(ABC, Generic[T]):
    """Produces the elements pushed through a pipeline."""

    @abstractmethod
    def elements(self) -> Iterator[T]:
        raise NotImplementedError

    def __iter__(self) -> Iterator[T]:
        return self.elements()

    def __rshift__(self, sink: 'Sink[T]') -> None:
        sink.run(self)


class Sink(ABC, Generic[T]):
    """Consumes the elements of a pipeline."""

    @abstractmethod
    def run(self, source: Iterable[T]) -> None:
        raise NotImplementedError

    def __call__(self, source: Iterable[T]) -> None:
        self.run(source)


class Filter(ABC, Generic[T, U]):
    """A stream transformation. Filters may map, drop or inject elements."""

    @abstractmethod
    def filter(self, source: Iterator[T]) -> Iterator[U]:
        raise NotImplementedError

    def __call__(self, source: Iterable[T]) -> 'Source[U]':
        return IteratorSource(self.filter(iter(source)))

    def __or__(self, following: 'Filter[U, V]') -> 'Filter[T, V]':
        return ChainedFilter(self, following)

    def __gt__(self, sink: Sink[U]) -> Sink[T]:
        return FilteredSink(self, sink)


class MapFilter(Filter[T, T]):
    """A filter transforming every element on its own."""

    @abstractmethod
    def apply(self, element: T) -> T:
        raise NotImplementedError

    def filter(self, source: Iterator[T]) -> Iterator[T]:
        for element in source:
            yield self.apply(element)


class IteratorSource(Source[T]):
    """Yields from an iterable. Sources wrapping a plain iterator can only be run once."""

    def __init__(self, iterable: Iterable[T]):
        self.__iterable = iterable

    def elements(self) -> Iterator[T]:
        return iter(self.__iterable)


class ChainedFilter(Filter[T, V]):
    """Runs `first` and feeds its output to `second`."""

    def __init__(self, first: Filter[T, U], second: Filter[U, V]):
        self.__first = first
        self.__second = second

    def filter(self, source: Iterator[T]) -> Iterator[V]:
        return self.__second.filter(self.__first.filter(source))


class IdentityFilter(MapFilter[T]):

    def apply(self, element: T) -> T:
        return element


class FilteredSink(Sink[T]):
    """Runs a filter before handing the stream to `sink`."""

    def __init__(self, element_filter: Filter[T, U], sink: Sink[U]):
        self.__filter = element_filter
        self.__sink = sink

    def run(self, source: Iterable[T]) -> None:
        self.__sink.run(self.__filter.filter(iter(source)))


class CollectingSink(Sink[T]):
    """Stores all elements in a list."""
    __elements: List[T]

    def __init__(self):
        self.__elements = []

    def run(self, source: Iterable[T]) -> None:
        self.__elements.extend(source)

    def elements(self) -> List[T]:
        return self.__elements


class Preprocessor(Generic[T]):
    """
    Runs one source into one or more sinks, one sink after the other. With several sinks the source must be able to
    yield its elements repeatedly.

    Parameters
    ----------
    source : Source[T]
        the source
    sinks : Union[Sink[T], Iterable[Sink[T]]]
        the sinks
    """
    __source: Source[T]
    __sinks: List[Sink[T]]

    def __init__(self, source: Source[T], sinks: Union[Sink[T], Iterable[Sink[T]]]):
        self.__source = source
        self.__sinks = [sinks] if isinstance(sinks, Sink) else list(sinks)

    def run(self) -> None:
        for sink in self.__sinks:
            log.debug(f"Running {type(self.__source).__name__} into {type(sink).__name__}")
            self.__source >> sink
