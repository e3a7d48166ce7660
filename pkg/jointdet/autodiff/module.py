"""
For License information see the LICENSE file.

"""
from typing import Dict, Iterator, Tuple, Optional

import numpy as np

from .value import Parameter
from ..api.constants import ContractViolation


class Module:
    """
    A container of named parameters, buffers and sub-modules. Names are dotted paths in registration order, which makes
    the iteration order of `parameters()` (and thus checkpoints and optimizer updates) deterministic.

    Sub-classes register their state by plain attribute assignment: `Parameter`s become parameters, `Module`s become
    sub-modules and numpy arrays registered with `register_buffer` become buffers.
    """

    def __init__(self):
        object.__setattr__(self, "_parameters", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_training", True)

    def __setattr__(self, key, value):
        if isinstance(value, Parameter):
            self._parameters[key] = value
            if value.name is None:
                value.name = key
        elif isinstance(value, Module):
            self._modules[key] = value
        object.__setattr__(self, key, value)

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        """Registers a non-trainable array that is part of the state (e.g. running statistics)."""
        self._buffers[name] = name
        object.__setattr__(self, name, np.asarray(value, dtype=np.float64))

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, param in self._parameters.items():
            yield prefix + name, param
        for name, module in self._modules.items():
            yield from module.named_parameters(prefix + name + ".")

    def parameters(self, trainable_only: bool = True) -> Dict[str, Parameter]:
        """
        Returns the parameters of this module and all sub-modules.

        Parameters
        ----------
        trainable_only : bool
            whether to leave out parameters that do not require gradients (frozen tables)
            default: True

        Returns
        -------
        parameters : Dict[str, Parameter]
            the parameters by dotted name
        """
        return {name: p for name, p in self.named_parameters() if p.requires_grad or not trainable_only}

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name in self._buffers:
            yield prefix + name, getattr(self, name)
        for name, module in self._modules.items():
            yield from module.named_buffers(prefix + name + ".")

    def modules(self) -> Iterator['Module']:
        yield self
        for module in self._modules.values():
            yield from module.modules()

    def n_parameters(self, trainable_only: bool = False) -> int:
        return sum(p.size for p in self.parameters(trainable_only).values())

    def train(self, mode: bool = True) -> 'Module':
        for module in self.modules():
            object.__setattr__(module, "_training", mode)
        return self

    def eval(self) -> 'Module':
        return self.train(False)

    @property
    def training(self) -> bool:
        return self._training

    def zero_grad(self) -> None:
        for param in self.parameters(trainable_only=False).values():
            param.zero_grad()

    def state_dict(self) -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
        """Returns copies of all parameter and buffer arrays by dotted name."""
        params = {name: p.data.copy() for name, p in self.named_parameters()}
        buffers = {name: b.copy() for name, b in self.named_buffers()}
        return params, buffers

    def load_state_dict(self, params: Dict[str, np.ndarray], buffers: Optional[Dict[str, np.ndarray]] = None) -> None:
        own = dict(self.named_parameters())
        missing = set(own).symmetric_difference(params)
        if missing:
            raise ContractViolation(f"Parameter names do not match: {sorted(missing)}")
        for name, data in params.items():
            data = np.asarray(data, dtype=np.float64)
            if data.shape != own[name].shape:
                raise ContractViolation(f"Parameter {name} has shape {data.shape}, expected {own[name].shape}")
            own[name].data = data.copy()
        if buffers:
            for name, data in buffers.items():
                *path, attr = name.split(".")
                module = self
                for step in path:
                    module = module._modules[step]
                object.__setattr__(module, attr, np.asarray(data, dtype=np.float64).copy())
