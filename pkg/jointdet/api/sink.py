"""
For License information see the LICENSE file.

"""
from abc import ABC, abstractmethod
from typing import Mapping


class DataSink(ABC):
    """A data sink to write per-step training records or evaluation results to."""

    @abstractmethod
    def register_series(self, series_id: str) -> None:
        """
        Registers a series (a training run or an evaluated detector). It must be called before using offer_data for
        that series for the first time.

        Parameters
        ----------
        series_id : str
            the name of the series
        """
        raise NotImplementedError

    @abstractmethod
    def offer_data(self, series_id: str, step: int, values: Mapping[str, float]) -> None:
        """
        Passes a new data point to the data sink.

        Parameters
        ----------
        series_id : str
            the name of the series
        step : int
            the step (or run) the values belong to
        values : Mapping[str, float]
            the named scalar values, e.g. a loss breakdown or the APs of one domain
        """
        raise NotImplementedError

    @abstractmethod
    def flush(self) -> None:
        """Executes all remaining write operations."""
        raise NotImplementedError
