"""
For License information see the LICENSE file.

"""
import os
from abc import ABC
from typing import Dict, List, Mapping, Optional

import matplotlib.pyplot as plt
import numpy as np

from ..api import DataSink
from ..api.constants import FIGURE_DIRECTORY


class MatPlotLibSink(DataSink, ABC):
    """
    A data sink collecting named values per series and step for plotting with matplotlib.

    Parameters
    ----------
    out_file : Optional[str]
        if set, the plot is written to this file below FIGURE_DIRECTORY, otherwise it is shown
        default: None
    markers : Optional[List[str]]
        the point markers to use in order
        default: None
    """
    _out_file: Optional[str]
    _markers: List[str]
    _data: Dict[str, Dict[int, Dict[str, List[float]]]]

    def __init__(self, out_file: Optional[str] = None, markers: Optional[List[str]] = None):
        self._markers = markers or ['x', 'o', 's', 'D', '|', '+']
        self._out_file = None if out_file is None else os.path.join(FIGURE_DIRECTORY, out_file)
        self._data = {}

    def register_series(self, series_id: str) -> None:
        self._data[series_id] = {}

    def offer_data(self, series_id: str, step: int, values: Mapping[str, float]) -> None:
        per_step = self._data[series_id].setdefault(step, {})
        for key, value in values.items():
            per_step.setdefault(key, []).append(float(value))

    def series(self) -> Dict[str, Dict[int, Dict[str, List[float]]]]:
        return self._data

    def _finish(self) -> None:
        plt.legend()
        if self._out_file is not None:
            directory = os.path.dirname(self._out_file)
            if directory and not os.path.exists(directory):
                os.makedirs(directory)
            plt.savefig(self._out_file)
            plt.close()
        else:
            plt.show()


class LossCurveSink(MatPlotLibSink):
    """
    Plots one loss component (the total by default) over the training steps of every series.

    Parameters
    ----------
    out_file : Optional[str]
        the figure file
        default: None
    component : str
        the plotted value
        default: "total"
    """

    def __init__(self, out_file: Optional[str] = None, component: str = "total",
                 markers: Optional[List[str]] = None):
        super().__init__(out_file, markers)
        self.__component = component

    def flush(self) -> None:
        plt.figure(dpi=150)
        plt.xlabel('Step')
        plt.ylabel(f'Loss ({self.__component})')
        plt.grid(True)
        for series_id, steps in self._data.items():
            x = np.array(sorted(s for s in steps if self.__component in steps[s]))
            if x.size == 0:
                continue
            y = np.array([np.mean(steps[s][self.__component]) for s in x])
            plt.plot(x, y, label=series_id, linewidth=1)
        self._finish()


class APBarSink(MatPlotLibSink):
    """Plots the median over runs of every reported AP value as grouped bars, one group per value key."""

    def flush(self) -> None:
        keys = sorted({key for steps in self._data.values() for values in steps.values() for key in values})
        if not keys:
            return
        plt.figure(dpi=150, figsize=(max(6.0, 1.2 * len(keys)), 4))
        plt.ylabel('AP')
        plt.ylim(0, 1.05)
        plt.grid(True, axis='y')
        width = 0.8 / max(len(self._data), 1)
        positions = np.arange(len(keys))
        for i, (series_id, steps) in enumerate(self._data.items()):
            heights = [np.median([v for values in steps.values() for v in values.get(key, [])] or [0.0])
                       for key in keys]
            plt.bar(positions + i * width, heights, width, label=series_id)
        plt.xticks(positions + width * (len(self._data) - 1) / 2, keys, rotation=30, ha='right')
        plt.tight_layout()
        self._finish()
