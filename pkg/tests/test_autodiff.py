"""
For License information see the LICENSE file.

"""
import logging
import sys

import numpy as np
import pytest

from jointdet.api.constants import ContractViolation, FormatError, NonFiniteError
from jointdet.autodiff import AdamW, CyclicSchedule, Module, OptimizerState, Parameter, Tape, Value, active_tape, \
    backward, grad_check, optimizer_step, ops, save_checkpoint, read_checkpoint, load_checkpoint

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

log = logging.getLogger(__name__)

logging.basicConfig(handlers=[console], level=logging.INFO)


def _grad(fn, point):
    p = Parameter(np.array(point, dtype=np.float64))
    with Tape() as tape:
        loss = fn(p)
    backward(tape, loss, [p])
    return p.grad


def test_backward_sum():
    np.testing.assert_array_equal(_grad(ops.sum_, np.arange(6.0).reshape(2, 3)), np.ones((2, 3)))


def test_backward_zero():
    np.testing.assert_array_equal(_grad(lambda p: ops.sum_(p * 0.0), [1.0, 2.0]), np.zeros(2))


def test_backward_square():
    np.testing.assert_allclose(_grad(lambda p: ops.sum_(p * p), [1.0, -2.0]), [2.0, -4.0])


def test_backward_non_scalar():
    p = Parameter(np.ones(3))
    with Tape() as tape:
        out = p * 2.0
    with pytest.raises(ContractViolation):
        backward(tape, out)


def test_unreachable_parameter_zero_grad():
    p = Parameter(np.ones(2))
    q = Parameter(np.ones(3))
    with Tape() as tape:
        loss = ops.sum_(p)
    backward(tape, loss, [p, q])
    np.testing.assert_array_equal(q.grad, np.zeros(3))


def test_shared_consumers_accumulate():
    # p feeds two consumers, gradients of both add up
    np.testing.assert_allclose(_grad(lambda p: ops.sum_(p * 3.0) + ops.sum_(ops.exp(p)), [0.0, 1.0]),
                               [4.0, 3.0 + np.e])


def test_linearity_of_losses():
    point = np.array([0.3, -0.7, 1.1])
    a = _grad(lambda p: ops.sum_(ops.sigmoid(p)), point)
    b = _grad(lambda p: ops.sum_(ops.softplus(p * 2.0)), point)
    both = _grad(lambda p: ops.sum_(ops.sigmoid(p)) + ops.sum_(ops.softplus(p * 2.0)), point)
    np.testing.assert_allclose(both, a + b, atol=1e-12)


def test_log_sigmoid_stable():
    out = ops.log_sigmoid(Value(np.array([-800.0, 0.0, 800.0])))
    np.testing.assert_allclose(out.data, [-800.0, -np.log(2.0), 0.0])


def test_active_tape():
    assert active_tape() is None
    with Tape() as tape:
        assert active_tape() is tape
    assert active_tape() is None


def test_backward_deterministic():
    rng = np.random.default_rng(3)
    w = rng.normal(size=(4, 3))
    x = rng.normal(size=(5, 4))

    def fn(p):
        return ops.sum_(ops.log_softmax(Value(x) @ p, axis=1))

    np.testing.assert_array_equal(_grad(fn, w), _grad(fn, w))


def test_grad_check_sum():
    assert grad_check(ops.sum_, np.random.default_rng(0).normal(size=(3, 4))) < 1e-10


@pytest.mark.parametrize("fn", [
    lambda p: ops.sum_(ops.atan2(p[:, 0], p[:, 1])),
    lambda p: ops.sum_(ops.log_softmax(p, axis=1) * np.arange(3.0)),
    lambda p: ops.sum_(ops.segment_sum(p * p, np.array([0, 1, 1, 0]), 2) * np.array([[1.0, 2.0, 3.0], [4.0, 5.0,
                                                                                                     6.0]])),
    lambda p: ops.sum_(ops.take_rows(p, np.array([3, 0, 0, 2])) ** 3),
    lambda p: ops.mean(ops.sqrt(ops.square(p) + 1.0)),
    lambda p: ops.sum_(ops.concat([p, ops.cos(p)], axis=0) * 0.5),
    lambda p: ops.sum_(ops.log_sigmoid(p * -4.0)),
])
def test_grad_check_ops(fn):
    point = np.random.default_rng(1).uniform(0.5, 1.5, size=(4, 3))
    assert grad_check(fn, point) < 1e-6


def test_grad_check_non_finite():
    with pytest.raises(NonFiniteError):
        grad_check(lambda p: ops.sum_(ops.log(p)), np.array([-1.0, 1.0]))


def test_grad_check_step():
    with pytest.raises(ValueError):
        grad_check(ops.sum_, np.ones(2), step=0.0)


def test_optimizer_zero_gradient():
    p = Parameter(np.array([1.0, -2.0]))
    p.grad = np.zeros(2)
    state = OptimizerState(lr=0.1, weight_decay=0.0)
    optimizer_step({"p": p}, state)
    np.testing.assert_array_equal(p.data, [1.0, -2.0])
    assert state.step == 1


def test_optimizer_weight_decay():
    p = Parameter(np.array([1.0, -2.0]))
    state = OptimizerState(lr=0.1, weight_decay=0.5)
    for _ in range(3):
        p.grad = np.zeros(2)
        optimizer_step({"p": p}, state)
    np.testing.assert_allclose(p.data, np.array([1.0, -2.0]) * 0.95 ** 3)
    assert state.step == 3


def test_optimizer_constant_gradient():
    p = Parameter(np.zeros(2))
    state = OptimizerState(lr=0.01, weight_decay=0.0)
    previous = p.data.copy()
    for _ in range(200):
        p.grad = np.array([3.0, -0.5])
        optimizer_step({"p": p}, state)
        step = p.data - previous
        previous = p.data.copy()
    np.testing.assert_allclose(step, [-0.01, 0.01], rtol=1e-4)


def test_optimizer_missing_grad():
    with pytest.raises(ContractViolation):
        optimizer_step({"p": Parameter(np.zeros(2))}, OptimizerState())


def test_optimizer_leaves_gradients():
    p = Parameter(np.zeros(2))
    p.grad = np.array([1.0, 2.0])
    optimizer_step({"p": p}, OptimizerState())
    np.testing.assert_array_equal(p.grad, [1.0, 2.0])


def test_cyclic_schedule():
    schedule = CyclicSchedule(1.0, 10)
    assert schedule(0) == pytest.approx(0.1)
    assert schedule(5) == pytest.approx(1.0)
    assert schedule(10) == pytest.approx(0.1)
    assert schedule(2) == pytest.approx(0.1 + 0.9 * 0.4)
    with pytest.raises(ValueError):
        CyclicSchedule(1.0, 1)


def test_adamw_schedule():
    p = Parameter(np.zeros(1))
    optimizer = AdamW({"p": p}, OptimizerState(lr=1.0), CyclicSchedule(1.0, 4))
    assert optimizer.current_lr() == pytest.approx(0.1)
    p.grad = np.ones(1)
    optimizer.step()
    assert optimizer.current_lr() == pytest.approx(0.55)
    optimizer.zero_grad()
    assert p.grad is None


class _Affine(Module):

    def __init__(self):
        super().__init__()
        self.weight = Parameter(np.arange(6.0).reshape(2, 3))
        self.register_buffer("scale", np.array([2.0, 3.0]))


class _Stack(Module):

    def __init__(self):
        super().__init__()
        self.first = _Affine()
        self.second = _Affine()
        self.bias = Parameter(np.zeros(3))


def test_module_parameters():
    m = _Stack()
    assert set(m.parameters()) == {"first.weight", "second.weight", "bias"}
    assert m.n_parameters() == 15
    m.eval()
    assert not m.first.training
    m.train()
    assert m.second.training


def test_checkpoint_round_trip(tmp_path):
    m = _Stack()
    m.first.weight.data = np.full((2, 3), 7.0)
    m.second.scale = np.array([5.0, 6.0])
    filename = str(tmp_path / "stack.ckpt")
    save_checkpoint(m, filename, {"epoch": 3})

    restored = _Stack()
    meta = load_checkpoint(restored, filename)
    assert meta == {"epoch": 3}
    np.testing.assert_array_equal(restored.first.weight.data, np.full((2, 3), 7.0))
    np.testing.assert_array_equal(restored.second.scale, [5.0, 6.0])


def test_checkpoint_version(tmp_path):
    import dill
    filename = str(tmp_path / "old.ckpt")
    with open(filename, "wb") as f:
        dill.dump({"format_version": 0, "parameters": {}}, f)
    with pytest.raises(FormatError, match="format_version"):
        read_checkpoint(filename)

    with open(filename, "wb") as f:
        dill.dump({"parameters": {}}, f)
    with pytest.raises(FormatError, match="format_version"):
        read_checkpoint(filename)
