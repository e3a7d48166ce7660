"""
For License information see the LICENSE file.

"""
from typing import Callable

import numpy as np

from .value import Value, Parameter, Tape, backward
from ..api.constants import NonFiniteError, ContractViolation


def _evaluate(fn: Callable[[Value], Value], point: np.ndarray) -> float:
    out = fn(Value(point))
    if out.size != 1:
        raise ContractViolation(f"grad_check requires a scalar function, got shape {out.shape}")
    value = out.item()
    if not np.isfinite(value):
        raise NonFiniteError(f"Function value {value} is not finite")
    return value


def grad_check(fn: Callable[[Value], Value], point: np.ndarray, step: float = 1e-5) -> float:
    """
    Compares the gradient of the scalar function `fn` computed by `backward` against central differences.

    Parameters
    ----------
    fn : Callable[[Value], Value]
        a scalar function of a single array argument
    point : np.ndarray
        the point to check the gradient at
    step : float
        the finite-difference step
        default: 1e-5

    Returns
    -------
    grad_check : float
        the maximum over all components of |g_analytic - g_fd| / max(1, |g_fd|)
    """
    if step <= 0:
        raise ValueError(f"Step must be positive, got {step}")
    point = np.array(point, dtype=np.float64)

    param = Parameter(point.copy())
    with Tape() as tape:
        out = fn(param)
    if out.size != 1:
        raise ContractViolation(f"grad_check requires a scalar function, got shape {out.shape}")
    if not np.all(np.isfinite(out.data)):
        raise NonFiniteError(f"Function value {out.item()} is not finite")
    backward(tape, out, [param])
    analytic = param.grad

    numeric = np.zeros_like(point)
    flat = numeric.reshape(-1)
    for i in range(point.size):
        shifted = point.copy().reshape(-1)
        shifted[i] += step
        upper = _evaluate(fn, shifted.reshape(point.shape))
        shifted[i] -= 2 * step
        lower = _evaluate(fn, shifted.reshape(point.shape))
        flat[i] = (upper - lower) / (2 * step)

    if not np.all(np.isfinite(analytic)):
        raise NonFiniteError("Analytic gradient is not finite")
    if point.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))))
