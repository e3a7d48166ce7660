"""
For License information see the LICENSE file.

"""
import logging
import sys

import numpy as np
import pytest

from jointdet.api.constants import ContractViolation, SoftTarget
from jointdet.autodiff import Parameter, Tape, Value, backward, grad_check, ops
from jointdet.head import HeadOutputs, assign_targets
from jointdet.loss import bce_loss, iou3d_regression_loss, router_loss, sample_losses, soft_focal_loss, soft_targets, \
    total_objective
from jointdet.sparse import SparseTensor

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

log = logging.getLogger(__name__)

logging.basicConfig(handlers=[console], level=logging.INFO)


def per_sample(values) -> Value:
    return Value(np.asarray(values, dtype=np.float64))


def test_focal_example():
    loss = soft_focal_loss(Value(np.array([0.5])), 1.0, 0.8, 0.25, 2.0).data[0]
    assert loss == pytest.approx(0.35 * 0.09 * np.log(2))
    assert loss == pytest.approx(0.02184, abs=1e-5)


def test_focal_fixed_points():
    assert soft_focal_loss(Value(np.array([1.0 - 1e-12])), 1.0, 1.0).data[0] < 1e-12
    assert soft_focal_loss(Value(np.array([1e-12])), 0.0, 0.0).data[0] < 1e-12


def test_focal_nonnegative():
    rng = np.random.default_rng(0)
    p = rng.uniform(0.01, 0.99, size=200)
    c = (rng.random(200) < 0.5).astype(np.float64)
    iou = rng.random(200)
    assert np.all(soft_focal_loss(Value(p), c, iou).data >= 0)


def test_focal_target_detached():
    # only p receives a gradient, the iou target is a constant
    p = Parameter(np.array([0.3, 0.6]))
    with Tape() as tape:
        loss = ops.sum_(soft_focal_loss(p, np.array([1.0, 0.0]), np.array([0.7, 0.0])))
    backward(tape, loss, [p])
    assert p.grad.shape == (2,)
    assert np.all(np.isfinite(p.grad))


def test_focal_gradient():
    c = np.array([1.0, 0.0, 1.0])
    iou = np.array([0.6, 0.0, 0.9])
    assert grad_check(lambda p: ops.sum_(soft_focal_loss(p, c, iou)), np.array([0.2, 0.4, 0.7])) < 1e-4


def test_bce_examples():
    assert bce_loss(Value(np.array([0.0])), 0.5).data[0] == pytest.approx(np.log(2))
    assert bce_loss(Value(np.array([1.0])), 0.7).data[0] == pytest.approx(0.6133, abs=1e-4)
    assert bce_loss(Value(np.array([60.0])), 1.0).data[0] == pytest.approx(0.0, abs=1e-12)
    assert np.isfinite(bce_loss(Value(np.array([-800.0])), 1.0).data[0])


def test_router_loss_uniform():
    assert router_loss(Value(np.zeros((3, 4))), np.array([0, 2, 3])).item() == pytest.approx(np.log(4))


def test_iou_loss_examples():
    box = np.array([[0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 0.0]])
    assert iou3d_regression_loss(Value(box), box).item() == pytest.approx(0.0, abs=1e-12)
    far = box.copy()
    far[0, 0] = 5.0
    assert iou3d_regression_loss(Value(far), box).item() == pytest.approx(1.0)
    lifted = box.copy()
    lifted[0, 2] = 1.0
    assert iou3d_regression_loss(Value(lifted), box).item() == pytest.approx(2 / 3)


def test_iou_loss_weights():
    box = np.array([[0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 0.0], [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0]])
    pred = box.copy()
    pred[1, 0] = 5.0
    assert iou3d_regression_loss(Value(pred), box, np.array([1.0, 0.0])).item() == pytest.approx(0.0, abs=1e-12)
    assert iou3d_regression_loss(Value(pred), box, np.array([1.0, 1.0])).item() == pytest.approx(0.5)
    assert iou3d_regression_loss(Value(np.zeros((0, 7))), np.zeros((0, 7))).item() == 0.0


def test_soft_targets():
    rng = np.random.default_rng(1)
    boxes = np.column_stack([rng.normal(size=(5, 3)), rng.uniform(0.5, 2, size=(5, 3)), rng.uniform(-3, 3, size=5)])
    np.testing.assert_array_equal(soft_targets(boxes, boxes, SoftTarget.HARD), np.ones(5))
    for mode in (SoftTarget.IOU_BEV, SoftTarget.IOU_3D, SoftTarget.DECOUPLED):
        np.testing.assert_allclose(soft_targets(boxes, boxes, mode), np.ones(5), atol=1e-9)
    lifted = boxes.copy()
    lifted[:, 2] += 100.0
    np.testing.assert_allclose(soft_targets(lifted, boxes, SoftTarget.IOU_BEV), np.ones(5), atol=1e-9)
    np.testing.assert_allclose(soft_targets(lifted, boxes, SoftTarget.DECOUPLED), np.full(5, 0.5), atol=1e-9)
    assert soft_targets(np.zeros((0, 7)), np.zeros((0, 7)), SoftTarget.IOU_3D).size == 0


def test_total_single_sample():
    losses = {"cls": per_sample([0.5]), "reg": per_sample([0.25]), "centerness": per_sample([0.125]),
              "iou": per_sample([1.0])}
    total, breakdown = total_objective(losses, np.array([0]), 1)
    assert total.item() == pytest.approx(1.875)
    assert breakdown.total == pytest.approx(1.875)
    assert breakdown.router == 0.0
    total, breakdown = total_objective(losses, np.array([0]), 2, Value(np.zeros((1, 2))))
    assert total.item() == pytest.approx(1.875 + np.log(2))
    assert breakdown.router == pytest.approx(np.log(2))
    assert breakdown.per_domain == {0: pytest.approx(1.875)}


def test_total_domain_averaging():
    losses = {name: per_sample([0.3, 0.3, 0.3, 0.3]) for name in ("cls", "reg", "centerness", "iou")}
    total, breakdown = total_objective(losses, np.array([0, 0, 0, 1]), 2)
    assert total.item() == pytest.approx(2 * 1.2)
    assert breakdown.per_domain[0] == pytest.approx(1.2)
    assert breakdown.per_domain[1] == pytest.approx(1.2)
    assert breakdown.is_finite()
    assert set(breakdown.to_dict()) == {"cls", "reg", "centerness", "iou", "router", "total", "domain_0", "domain_1"}


def test_total_errors():
    losses = {name: per_sample([0.1]) for name in ("cls", "reg", "centerness", "iou")}
    with pytest.raises(ContractViolation):
        total_objective(losses, np.array([2]), 2)
    with pytest.raises(ContractViolation):
        total_objective({name: per_sample([]) for name in losses}, np.zeros(0), 2)


def test_total_linearity():
    # the gradient of the objective is the sum of the gradients of its components
    point = np.array([0.4, 1.3])
    domains = np.array([0, 1])

    def component(name):
        def fn(p):
            values = {n: Value(np.zeros(2)) for n in ("cls", "reg", "centerness", "iou")}
            values[name] = ops.square(p) * (1.0 + len(name))
            return total_objective(values, domains, 2)[0]
        return fn

    def everything(p):
        values = {n: ops.square(p) * (1.0 + len(n)) for n in ("cls", "reg", "centerness", "iou")}
        return total_objective(values, domains, 2)[0]

    def grad(fn):
        p = Parameter(point.copy())
        with Tape() as tape:
            loss = fn(p)
        backward(tape, loss, [p])
        return p.grad

    summed = sum(grad(component(name)) for name in ("cls", "reg", "centerness", "iou"))
    np.testing.assert_allclose(grad(everything), summed, atol=1e-12)


def _outputs(probs: np.ndarray, coords: np.ndarray) -> HeadOutputs:
    n = coords.shape[0]
    tensor = SparseTensor(coords, np.zeros(n), np.zeros((n, 1)), 0.5)
    return HeadOutputs(tensor, None, Value(np.zeros_like(probs)), Value(probs), Value(np.zeros((n, 8))),
                       Value(np.zeros((n, 1))), Value(np.zeros((n, 1))))


def test_sample_losses_background_only():
    probs = np.array([[0.1, 0.2], [0.3, 0.05], [0.4, 0.4]])
    coords = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]])
    outputs = _outputs(probs, coords)
    targets = assign_targets(coords * 0.5 + 0.25, np.zeros((0, 7)), np.zeros(0))
    losses = sample_losses(outputs, targets, Value(np.zeros((3, 7))), np.ones((1, 2), dtype=bool))
    expected = np.sum(0.75 * probs ** 2 * -np.log(1 - probs))
    assert losses["cls"].data[0] == pytest.approx(expected)
    for name in ("reg", "centerness", "iou"):
        assert losses[name].data[0] == 0.0


def test_sample_losses_class_mask():
    probs = np.array([[0.1, 0.9]])
    coords = np.zeros((1, 3))
    targets = assign_targets(np.full((1, 3), 0.25), np.zeros((0, 7)), np.zeros(0))
    masked = sample_losses(_outputs(probs, coords), targets, Value(np.zeros((1, 7))), np.array([[True, False]]))
    assert masked["cls"].data[0] == pytest.approx(0.75 * 0.01 * -np.log(0.9))


def test_sample_losses_positive():
    coords = np.array([[0, 0, 0], [3, 0, 0]])
    locations = coords * 0.5 + 0.25
    gt = np.array([[0.25, 0.25, 0.25, 1.0, 1.0, 1.0, 0.0]])
    targets = assign_targets(locations, gt, np.array([1]))
    probs = np.array([[0.2, 0.6], [0.1, 0.1]])
    # the decoded box of the positive site equals its ground truth
    decoded = Value(np.array([gt[0], [1.75, 0.25, 0.25, 1.0, 1.0, 1.0, 0.0]]))
    losses = sample_losses(_outputs(probs, coords), targets, decoded, np.ones((1, 2), dtype=bool))
    assert losses["reg"].data[0] == pytest.approx(0.0, abs=1e-12)
    # zero logits against a centerness target of 1 and an IoU target of 1
    assert losses["centerness"].data[0] == pytest.approx(np.log(2))
    assert losses["iou"].data[0] == pytest.approx(np.log(2))
    focal = soft_focal_loss(Value(probs), np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[1.0], [0.0]])).data
    assert losses["cls"].data[0] == pytest.approx(focal.sum())
