from .time import Duration, Stopwatch

__all__ = [
    'Duration', 'Stopwatch',  # time.py
]
