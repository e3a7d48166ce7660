"""
For License information see the LICENSE file.

"""
import logging
import sys

import numpy as np
import pytest

from jointdet.api.constants import IoUKind
from jointdet.autodiff import Value
from jointdet.geometry import ConvexPolygon2D, OrientedBox3D, aligned_iou, bev_intersection_area, clip_footprints, \
    differentiable_iou, iou_3d, iou_bev, normalize_yaw, pairwise_iou, rotated_nms
from jointdet.geometry.iou import aligned_bev_intersection

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

log = logging.getLogger(__name__)

logging.basicConfig(handlers=[console], level=logging.INFO)


def unit(x: float = 0.0, y: float = 0.0, z: float = 0.0, yaw: float = 0.0, h: float = 1.0) -> OrientedBox3D:
    return OrientedBox3D((x, y, z), (1.0, 1.0, h), yaw)


def random_boxes(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.column_stack([rng.uniform(-1.0, 1.0, size=(n, 2)), rng.uniform(-0.5, 0.5, size=n),
                            rng.uniform(0.3, 2.0, size=(n, 3)), rng.uniform(-np.pi, np.pi, size=n)])


def monte_carlo_intersection(a: np.ndarray, b: np.ndarray, rng: np.random.Generator, n: int):
    box_a, box_b = OrientedBox3D.from_array(a), OrientedBox3D.from_array(b)
    local = rng.uniform(-0.5, 0.5, size=(n, 2)) * np.array(box_a.dims[:2])
    c, s = np.cos(box_a.yaw), np.sin(box_a.yaw)
    points = np.column_stack([box_a.center[0] + c * local[:, 0] - s * local[:, 1],
                              box_a.center[1] + s * local[:, 0] + c * local[:, 1], np.full(n, box_b.center[2])])
    p = np.mean(box_b.contains(points))
    return box_a.bev_area * p, box_a.bev_area * np.sqrt(p * (1 - p) / n)


def test_normalize_yaw():
    assert normalize_yaw(-np.pi) == pytest.approx(np.pi)
    assert normalize_yaw(np.pi) == np.pi
    assert normalize_yaw(1.5 * np.pi) == pytest.approx(-0.5 * np.pi)
    assert normalize_yaw(0.25) == 0.25
    assert OrientedBox3D((0, 0, 0), (1, 1, 1), 2 * np.pi + 0.1).yaw == pytest.approx(0.1)


def test_invalid_box():
    with pytest.raises(ValueError):
        OrientedBox3D((0, 0, 0), (1, 0, 1))
    with pytest.raises(ValueError):
        OrientedBox3D((0, np.inf, 0), (1, 1, 1))


def test_intersection_examples():
    assert bev_intersection_area(unit(), unit()) == pytest.approx(1.0)
    assert bev_intersection_area(unit(), unit(10.0, 10.0)) == 0.0
    assert bev_intersection_area(unit(), unit(0.5)) == pytest.approx(0.5)


def test_iou_bev_examples():
    assert iou_bev(unit(), unit()) == pytest.approx(1.0)
    assert iou_bev(unit(yaw=np.pi / 2), unit()) == pytest.approx(1.0, abs=1e-9)
    assert iou_bev(unit(), unit(0.5)) == pytest.approx(1 / 3)


def test_iou_3d_examples():
    assert iou_3d(unit(h=2.0), unit(h=2.0)) == pytest.approx(1.0)
    assert iou_3d(unit(h=2.0), unit(z=1.0, h=2.0)) == pytest.approx(1 / 3)
    assert iou_3d(unit(), unit(z=3.0)) == 0.0
    assert iou_bev(unit(), unit(z=3.0)) == pytest.approx(1.0)


def test_clip_footprints():
    corners_a = np.stack([unit().bev_corners(), unit().bev_corners(), unit(0.5).bev_corners()])
    corners_b = np.stack([unit().bev_corners(), unit(5.0).bev_corners(), unit().bev_corners()])
    _, counts, areas = clip_footprints(corners_a, corners_b)
    assert counts[0] >= 3 and areas[0] == pytest.approx(1.0)
    assert counts[1] == 0 and areas[1] == 0.0
    assert counts[2] >= 3 and areas[2] == pytest.approx(0.5)


def test_polygon():
    square = ConvexPolygon2D(np.array([[0, 0], [1, 0], [1, 1], [0, 1]]))
    assert square.area() == pytest.approx(1.0)
    assert not square.is_empty()
    assert ConvexPolygon2D(np.array([[0, 0], [1, 0]])).is_empty()
    assert ConvexPolygon2D.intersection(unit().bev_corners(), unit(5.0).bev_corners()).is_empty()
    overlap = ConvexPolygon2D.intersection(unit().bev_corners(), unit(0.5, yaw=0.3).bev_corners())
    assert len(overlap) >= 3
    assert np.all(np.abs(overlap.vertices()) <= 1.5)


def test_polygon_area_matches_kernel():
    rng = np.random.default_rng(5)
    a, b = random_boxes(rng, 100), random_boxes(rng, 100)
    areas = [bev_intersection_area(OrientedBox3D.from_array(x), OrientedBox3D.from_array(y)) for x, y in zip(a, b)]
    np.testing.assert_allclose(areas, aligned_bev_intersection(a, b), atol=1e-9)


def test_symmetry_and_bounds():
    rng = np.random.default_rng(0)
    a, b = random_boxes(rng, 500), random_boxes(rng, 500)
    for kind in IoUKind:
        ab, ba = aligned_iou(a, b, kind), aligned_iou(b, a, kind)
        np.testing.assert_allclose(ab, ba, atol=1e-12)
        assert np.all((ab >= 0) & (ab <= 1))
    areas = np.array([bev_intersection_area(OrientedBox3D.from_array(x), OrientedBox3D.from_array(y))
                      for x, y in zip(a[:50], b[:50])])
    assert np.all(areas <= np.minimum(a[:50, 3] * a[:50, 4], b[:50, 3] * b[:50, 4]) + 1e-12)


def test_rigid_invariance():
    rng = np.random.default_rng(1)
    a, b = random_boxes(rng, 300), random_boxes(rng, 300)
    angle = 0.7
    c, s = np.cos(angle), np.sin(angle)
    moved = []
    for boxes in (a, b):
        m = boxes.copy()
        m[:, 0] = c * boxes[:, 0] - s * boxes[:, 1] + 3.0
        m[:, 1] = s * boxes[:, 0] + c * boxes[:, 1] - 2.0
        m[:, 2] += 0.4
        m[:, 6] = normalize_yaw(boxes[:, 6] + angle)
        moved.append(m)
    for kind in IoUKind:
        np.testing.assert_allclose(aligned_iou(*moved, kind), aligned_iou(a, b, kind), atol=1e-9)


def test_monte_carlo_oracle():
    rng = np.random.default_rng(2)
    a, b = random_boxes(rng, 40), random_boxes(rng, 40)
    b[:, :2] = a[:, :2] + rng.uniform(-0.8, 0.8, size=(40, 2))
    deviations = []
    for x, y in zip(a, b):
        estimate, error = monte_carlo_intersection(x, y, rng, 200000)
        exact = bev_intersection_area(OrientedBox3D.from_array(x), OrientedBox3D.from_array(y))
        deviations.append(abs(exact - estimate) / max(error, 1e-9) if abs(exact - estimate) > 1e-9 else 0.0)
    deviations = np.array(deviations)
    assert np.all(deviations < 5)
    assert np.sum(deviations > 3) <= 1


# Takes about 10 minutes
@pytest.mark.skip()
def test_monte_carlo_oracle_full():
    rng = np.random.default_rng(3)
    a, b = random_boxes(rng, 1000), random_boxes(rng, 1000)
    deviations = []
    for x, y in zip(a, b):
        estimate, error = monte_carlo_intersection(x, y, rng, 1000000)
        exact = bev_intersection_area(OrientedBox3D.from_array(x), OrientedBox3D.from_array(y))
        deviations.append(abs(exact - estimate) / max(error, 1e-9) if abs(exact - estimate) > 1e-9 else 0.0)
    assert np.mean(np.array(deviations) < 3) > 0.99


def test_pairwise_shape():
    rng = np.random.default_rng(4)
    a, b = random_boxes(rng, 3), random_boxes(rng, 5)
    matrix = pairwise_iou(a, b)
    assert matrix.shape == (3, 5)
    np.testing.assert_allclose(matrix[1, 2], aligned_iou(a[1:2], b[2:3])[0])
    assert pairwise_iou(a, np.zeros((0, 7))).shape == (3, 0)


def test_differentiable_iou_values():
    rng = np.random.default_rng(5)
    a, b = random_boxes(rng, 50), random_boxes(rng, 50)
    for kind in IoUKind:
        np.testing.assert_allclose(differentiable_iou(Value(a), b, kind).data, aligned_iou(a, b, kind), atol=1e-9)


def test_nms_single():
    np.testing.assert_array_equal(rotated_nms([unit()], np.array([0.3]), 0.5), [0])


def test_nms_identical():
    np.testing.assert_array_equal(rotated_nms([unit(), unit()], np.array([0.8, 0.9]), 0.5), [1])


def test_nms_chain():
    boxes = [unit(0.0), unit(0.5), unit(1.0)]
    np.testing.assert_array_equal(rotated_nms(boxes, np.array([0.9, 0.8, 0.7]), 0.3), [0, 2])


def test_nms_order_independent():
    rng = np.random.default_rng(6)
    boxes = random_boxes(rng, 30)
    scores = rng.random(30)
    kept = set(rotated_nms(boxes, scores, 0.3).tolist())
    perm = rng.permutation(30)
    kept_permuted = {int(perm[i]) for i in rotated_nms(boxes[perm], scores[perm], 0.3)}
    assert kept == kept_permuted


def test_nms_tie_break():
    np.testing.assert_array_equal(rotated_nms([unit(), unit()], np.array([0.5, 0.5]), 0.5), [0])
    with pytest.raises(ValueError):
        rotated_nms([unit()], np.array([0.5]), 1.5)
