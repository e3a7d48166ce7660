"""
For License information see the LICENSE file.

"""
from dataclasses import dataclass, field
from logging import getLogger
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .value import Value
from ..api.constants import ContractViolation

log = getLogger(__name__)


@dataclass
class OptimizerState:
    """Hyperparameters and moment buffers of AdamW. Buffers are keyed by parameter name."""
    lr: float = 1e-2
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 1e-4
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def optimizer_step(params: Mapping[str, Value], state: OptimizerState, lr: Optional[float] = None) -> None:
    """
    Performs one AdamW update of `params` in place with bias-corrected moments and decoupled weight decay:
    p <- p * (1 - lr * wd) - lr * m_hat / (sqrt(v_hat) + eps). Gradients are left untouched.

    Parameters
    ----------
    params : Mapping[str, Value]
        the parameters by name, all with populated gradients
    state : OptimizerState
        the optimizer state, updated in place
    lr : Optional[float]
        overrides the learning rate of the state for this step (schedules)
        default: None
    """
    for name, param in params.items():
        if param.grad is None:
            raise ContractViolation(f"Parameter {name} has no gradient")

    lr = state.lr if lr is None else lr
    beta1, beta2 = state.betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step

    for name, param in params.items():
        grad = param.grad
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        state.first_moment[name] = m
        state.second_moment[name] = v

        update = (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        param.data = param.data * (1.0 - lr * state.weight_decay) - lr * update


class CyclicSchedule:
    """
    Triangular learning rate schedule between `peak / 10` and `peak`, starting at the low end. One cycle spans `period`
    steps: the rate rises linearly during the first half and falls during the second.

    Parameters
    ----------
    peak : float
        the maximum learning rate
    period : int
        the cycle length in optimizer steps
    """
    __peak: float
    __period: int

    def __init__(self, peak: float, period: int):
        if peak <= 0 or period < 2:
            raise ValueError(f"Invalid schedule: peak={peak}, period={period}")
        self.__peak = peak
        self.__period = period

    def __call__(self, step: int) -> float:
        low = self.__peak / 10
        phase = (step % self.__period) / self.__period
        ramp = 2 * phase if phase <= 0.5 else 2 * (1 - phase)
        return low + (self.__peak - low) * ramp


class AdamW:
    """
    Binds a set of named parameters to an `OptimizerState` and an optional schedule.

    Parameters
    ----------
    params : Mapping[str, Value]
        the parameters to optimize
    state : OptimizerState
        the hyperparameters
    schedule : Optional[CyclicSchedule]
        a learning rate schedule, evaluated on the step count before each update
        default: None
    """
    __params: Mapping[str, Value]
    __state: OptimizerState
    __schedule: Optional[CyclicSchedule]

    def __init__(self, params: Mapping[str, Value], state: Optional[OptimizerState] = None,
                 schedule: Optional[CyclicSchedule] = None):
        self.__params = dict(params)
        self.__state = state if state is not None else OptimizerState()
        self.__schedule = schedule

    def state(self) -> OptimizerState:
        return self.__state

    def current_lr(self) -> float:
        return self.__state.lr if self.__schedule is None else self.__schedule(self.__state.step)

    def step(self) -> None:
        optimizer_step(self.__params, self.__state, lr=self.current_lr())

    def zero_grad(self) -> None:
        for param in self.__params.values():
            param.zero_grad()
