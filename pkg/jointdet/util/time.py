"""
For License information see the LICENSE file.

"""
from dataclasses import dataclass
from math import trunc
from time import perf_counter
from typing import Optional


@dataclass(frozen=True)
class Duration:
    """
    A time span in milliseconds, printed as "[..h] [..min] [..s] [...ms]" with zero parts left out.
    """
    millis: int = 0

    @staticmethod
    def from_seconds(seconds: float) -> 'Duration':
        """Truncates a fractional number of seconds to millisecond precision."""
        return Duration(trunc(seconds * 1000))

    def total_seconds(self) -> float:
        return self.millis / 1000

    def __repr__(self):
        if self.millis == 0:
            return "0s"
        hours, rest = divmod(self.millis, 3_600_000)
        minutes, rest = divmod(rest, 60_000)
        seconds, millis = divmod(rest, 1000)
        parts = []
        if hours:
            parts.append(f"{hours:02}h")
        if minutes or (hours and (seconds or millis)):
            parts.append(f"{minutes:02}min")
        if seconds or ((hours or minutes) and millis):
            parts.append(f"{seconds:02}s")
        if millis:
            parts.append(f"{millis:03}ms")
        return " ".join(parts)


class Stopwatch:
    """
    Measures run times and lap times of training epochs and evaluation runs.
    """
    __start: Optional[float]
    __last_lap: Optional[float]

    def __init__(self):
        self.__start = None
        self.__last_lap = None

    def __now(self) -> float:
        return perf_counter()

    def start(self) -> 'Stopwatch':
        if self.__start is not None:
            raise RuntimeError("This stopwatch is already running")
        self.__start = self.__now()
        self.__last_lap = None
        return self

    def running(self) -> bool:
        return self.__start is not None

    def lap(self) -> Duration:
        """Returns the time since the previous lap (or the start) and begins a new lap."""
        if self.__start is None:
            return Duration()
        now = self.__now()
        reference = self.__start if self.__last_lap is None else self.__last_lap
        self.__last_lap = now
        return Duration.from_seconds(now - reference)

    def stop(self) -> Duration:
        """Stops the stopwatch and returns the total running time."""
        if self.__start is None:
            return Duration()
        elapsed = self.__now() - self.__start
        self.__start = None
        return Duration.from_seconds(elapsed)
