from .matplotlib import MatPlotLibSink, LossCurveSink, APBarSink

__all__ = [
    'MatPlotLibSink', 'LossCurveSink', 'APBarSink',  # matplotlib.py
]
