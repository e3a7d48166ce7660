"""
For License information see the LICENSE file.

"""
from contextvars import ContextVar
from itertools import count
from typing import Callable, List, Optional, Sequence, Tuple, Dict, Iterable, Union

import numpy as np

from ..api.constants import ContractViolation

BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_node_ids = count()

_active_tape: ContextVar[Optional['Tape']] = ContextVar("jointdet_active_tape", default=None)


class Value:
    """
    A float64 buffer taking part in reverse-mode differentiation. Values produced by an operation while a `Tape` is
    active and depending on a value that requires gradients are recorded on that tape.

    Parameters
    ----------
    data : array_like
        the buffer, converted to float64
    requires_grad : bool
        whether gradients are tracked for this value
        default: False
    name : Optional[str]
        a name used in error messages and checkpoints
        default: None
    """
    data: np.ndarray
    grad: Optional[np.ndarray]
    node_id: int
    requires_grad: bool
    is_leaf: bool
    name: Optional[str]

    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.node_id = next(_node_ids)
        self.requires_grad = requires_grad
        self.name = name
        self.is_leaf = True

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> 'Value':
        """Returns a constant copy of this value through which no gradient flows."""
        return Value(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        name = f" {self.name}" if self.name is not None else ""
        return f"Value{name}(shape={self.shape}, requires_grad={self.requires_grad})"

    @staticmethod
    def from_op(data: np.ndarray, inputs: Sequence['Value'], backward: BackwardRule) -> 'Value':
        """
        Creates the output of a differentiable operation and records it on the active tape. `backward` maps the
        gradient of the output to one gradient (or None) per input.

        Parameters
        ----------
        data : np.ndarray
            the forward result
        inputs : Sequence[Value]
            the operands
        backward : BackwardRule
            the backward rule of the operation

        Returns
        -------
        from_op : Value
            the output value
        """
        tracked = any(value.requires_grad for value in inputs)
        out = Value(data, requires_grad=tracked)
        out.is_leaf = False
        tape = _active_tape.get()
        if tracked and tape is not None:
            tape.record(inputs, out, backward)
        return out

    # arithmetic delegates to jointdet.autodiff.ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from . import ops
        return ops.div(other, self)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __pow__(self, exponent: float):
        from . import ops
        return ops.power(self, exponent)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, key):
        from . import ops
        return ops.getitem(self, key)


class Parameter(Value):
    """A trainable leaf value."""

    def __init__(self, data, name: Optional[str] = None):
        super().__init__(np.array(data, dtype=np.float64), requires_grad=True, name=name)


class _Record:
    __slots__ = ("inputs", "output", "backward")

    def __init__(self, inputs: Sequence[Value], output: Value, backward: BackwardRule):
        self.inputs = tuple(inputs)
        self.output = output
        self.backward = backward


class Tape:
    """
    An ordered record of the differentiable operations of one forward pass. A tape is activated with a `with`
    statement and is rebuilt for every training step. Tapes hold no shared state and can be used concurrently from
    different threads or contexts.
    """
    __records: List[_Record]
    __leaves: Dict[int, Value]
    __token: Optional[object]

    def __init__(self):
        self.__records = []
        self.__leaves = {}
        self.__token = None

    def __enter__(self) -> 'Tape':
        self.__token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _active_tape.reset(self.__token)
        self.__token = None

    def __len__(self) -> int:
        return len(self.__records)

    def record(self, inputs: Sequence[Value], output: Value, backward: BackwardRule) -> None:
        for value in inputs:
            if value.requires_grad and value.is_leaf:
                self.__leaves.setdefault(value.node_id, value)
        self.__records.append(_Record(inputs, output, backward))

    def records(self) -> Tuple[_Record, ...]:
        return tuple(self.__records)

    def leaves(self) -> List[Value]:
        """Returns the gradient-requiring values consumed by this tape but not produced by it, in first-use order."""
        return list(self.__leaves.values())


def active_tape() -> Optional[Tape]:
    return _active_tape.get()


def backward(tape: Tape, loss: Value, parameters: Optional[Iterable[Value]] = None) -> None:
    """
    Propagates the gradient of the scalar `loss` through `tape` in reverse order and assigns the `grad` buffer of
    every leaf value. Leaves that are not reachable from `loss`, and any given `parameters` not on the tape, receive a
    zero gradient.

    Parameters
    ----------
    tape : Tape
        the tape the loss was computed on
    loss : Value
        a scalar output of the tape
    parameters : Optional[Iterable[Value]]
        further values whose gradient shall be assigned
        default: None
    """
    if loss.size != 1:
        raise ContractViolation(f"backward requires a scalar loss, got shape {loss.shape}")

    grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}

    for record in reversed(tape.records()):
        grad_out = grads.pop(record.output.node_id, None)
        if grad_out is None:
            continue
        grad_ins = record.backward(grad_out)
        for value, grad_in in zip(record.inputs, grad_ins):
            if grad_in is None or not value.requires_grad:
                continue
            if value.node_id in grads:
                grads[value.node_id] = grads[value.node_id] + grad_in
            else:
                grads[value.node_id] = np.array(grad_in, dtype=np.float64).reshape(value.shape)

    targets: List[Value] = tape.leaves()
    known = {value.node_id for value in targets}
    if loss.requires_grad and loss.is_leaf and loss.node_id not in known:
        targets.append(loss)
        known.add(loss.node_id)
    if parameters is not None:
        targets.extend(value for value in parameters if value.node_id not in known)

    for value in targets:
        value.grad = grads.get(value.node_id, np.zeros_like(value.data))


def as_value(x: Union[Value, float, np.ndarray]) -> Value:
    return x if isinstance(x, Value) else Value(x)
