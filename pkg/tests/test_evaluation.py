"""
For License information see the LICENSE file.

"""
import csv
import logging
import sys
from typing import Dict, List, Mapping

import numpy as np
import pytest

from jointdet.api import DataSink
from jointdet.api.constants import APMode, ConfigError, FormatError, IoUKind, Protocol
from jointdet.evaluation import DetectionEvaluator, Detector, EvalReport, EvaluationCase, OracleDetector, \
    RECALL_POSITIONS, ScoredBox, average_precision, detection_order, evaluate, evaluate_domain, match_detections, \
    protocol_thresholds
from jointdet.preprocessing import DomainProfile, Scene, generate_scene

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

log = logging.getLogger(__name__)

logging.basicConfig(handlers=[console], level=logging.INFO)

PROFILE = DomainProfile(3, "eval-room", True, (-3.0, -3.0, 0.0), (3.0, 3.0, 2.5), ("chair", "table"),
                        {"chair": (0.6, 0.6, 0.9), "table": (1.2, 0.8, 0.75)}, 0.05, points=(100, 200),
                        objects=(2, 3), points_per_object=30)


def box(x: float, y: float = 0.0) -> np.ndarray:
    return np.array([x, y, 0.5, 1.0, 1.0, 1.0, 0.0])


class RecordingSink(DataSink):

    def __init__(self):
        self.series: List[str] = []
        self.data: Dict[str, List] = {}
        self.flushed = False

    def register_series(self, series_id: str) -> None:
        self.series.append(series_id)
        self.data[series_id] = []

    def offer_data(self, series_id: str, step: int, values: Mapping[str, float]) -> None:
        self.data[series_id].append((step, dict(values)))

    def flush(self) -> None:
        self.flushed = True


class FixedDetector(Detector):

    def __init__(self, detections: Dict[str, List[ScoredBox]]):
        self.__detections = detections

    def name(self) -> str:
        return "fixed"

    def detect(self, scene: Scene, profile: DomainProfile) -> List[ScoredBox]:
        return self.__detections.get(scene.scene_id, [])


def test_match_single():
    np.testing.assert_array_equal(match_detections(box(0)[None], box(0)[None], 0.25), [True])


def test_match_duplicate():
    np.testing.assert_array_equal(match_detections(np.array([box(0), box(0.1)]), box(0)[None], 0.25), [True, False])


def test_match_mixed():
    # the second detection overlaps both boxes, the first one already took the better of them
    dets = np.array([box(0.1), box(0.5), box(5.0)])
    gts = np.array([box(0.0), box(1.0)])
    np.testing.assert_array_equal(match_detections(dets, gts, 0.25), [True, True, False])
    np.testing.assert_array_equal(match_detections(dets, gts, 0.5), [True, False, False])
    np.testing.assert_array_equal(match_detections(dets, np.zeros((0, 7)), 0.25), [False, False, False])


def test_match_bev():
    lifted = box(0)
    lifted[2] = 10.0
    np.testing.assert_array_equal(match_detections(lifted[None], box(0)[None], 0.5, IoUKind.BEV), [True])
    np.testing.assert_array_equal(match_detections(lifted[None], box(0)[None], 0.5, IoUKind.IOU_3D), [False])


def test_detection_order():
    order = detection_order(np.array([0.5, 0.9, 0.5, 0.5]), [1, 0, 0, 0], [0, 0, 2, 1])
    np.testing.assert_array_equal(order, [1, 3, 2, 0])


def test_ap_examples():
    assert average_precision(np.array([True]), np.array([0.9]), 1) == 1.0
    assert average_precision(np.array([False, False]), np.array([0.9, 0.8]), 3) == 0.0
    assert average_precision(np.array([True, False, True]), np.array([0.9, 0.8, 0.7]), 2) == pytest.approx(5 / 6)


def test_ap_edge_cases():
    assert average_precision(np.array([True]), np.array([0.4]), 0) == 0.0
    assert average_precision(np.zeros(0, dtype=bool), np.zeros(0), 2) == 0.0
    with pytest.raises(ValueError):
        average_precision(np.array([True]), np.array([0.5, 0.4]), 1)
    with pytest.raises(ValueError):
        average_precision(np.array([True]), np.array([0.5]), -1)


def test_ap_forty_point():
    assert average_precision(np.array([True]), np.array([0.9]), 1, APMode.FORTY_POINT) == 1.0
    # half the ground truth found at precision 1
    assert average_precision(np.array([True]), np.array([0.9]), 2, APMode.FORTY_POINT) == pytest.approx(0.5)


def test_ap_modes_agree():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 30))
        flags = rng.random(n) < rng.random()
        n_gt = int(flags.sum() + rng.integers(0, 5)) or 1
        scores = rng.random(n)
        exact = average_precision(flags, scores, n_gt)
        sampled = average_precision(flags, scores, n_gt, APMode.FORTY_POINT)
        assert 0 <= exact <= 1 and 0 <= sampled <= 1
        assert abs(exact - sampled) <= 1 / RECALL_POSITIONS + 1e-12


def test_ap_low_score_additions():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(1, 20))
        flags = rng.random(n) < 0.5
        scores = rng.uniform(0.1, 1.0, size=n)
        n_gt = int(flags.sum()) + 2
        base = average_precision(flags, scores, n_gt)
        assert average_precision(np.append(flags, False), np.append(scores, 0.01), n_gt) <= base + 1e-12
        assert average_precision(np.append(flags, True), np.append(scores, 0.01), n_gt) >= base - 1e-12


def test_ap_tie_order():
    # equal scores keep the given order
    first = average_precision(np.array([True, False]), np.array([0.5, 0.5]), 1)
    second = average_precision(np.array([False, True]), np.array([0.5, 0.5]), 1)
    assert first == 1.0
    assert second == pytest.approx(0.5)


def test_protocol_thresholds():
    assert protocol_thresholds(Protocol.INDOOR) == (0.25, 0.5)
    assert protocol_thresholds(Protocol.KITTI) == (0.7,)
    assert protocol_thresholds(Protocol.INDOOR, [0.5]) == (0.5,)
    with pytest.raises(ConfigError):
        protocol_thresholds(Protocol.INDOOR, [0.7])
    with pytest.raises(ConfigError):
        protocol_thresholds(Protocol.KITTI, [])


@pytest.mark.parametrize("protocol", list(Protocol))
def test_oracle(protocol):
    scenes = [generate_scene(PROFILE, 0, i) for i in range(3)]
    report = evaluate(OracleDetector(), [(PROFILE, scenes)], protocol)
    domain = report.domains[PROFILE.name]
    assert domain.n_detections == sum(len(s.boxes) for s in scenes)
    for kind, aps in domain.mean_ap.items():
        for key, value in aps.items():
            assert value == pytest.approx(1.0)
    for name in PROFILE.label_space:
        if domain.n_gt[name] > 0:
            assert all(v == pytest.approx(1.0) for v in domain.ap[IoUKind.IOU_3D.value][name].values())
    assert report.overall_mean_ap(protocol_thresholds(protocol)[0]) == pytest.approx(1.0)


def test_empty_corpus():
    report = evaluate(OracleDetector(), [(PROFILE, [])])
    assert report.is_empty()
    assert report.overall_mean_ap(0.25) == 0.0
    assert evaluate(OracleDetector(), []).is_empty()


def test_foreign_classes_ignored():
    scene = Scene("s0", PROFILE.domain_id, np.zeros((1, 3)), np.zeros((1, 6)), box(0)[None], ("chair",))
    detector = FixedDetector({"s0": [ScoredBox("chair", box(0), 0.9), ScoredBox("sofa", box(3), 0.95)]})
    domain = evaluate(detector, [(PROFILE, [scene])]).domains[PROFILE.name]
    assert domain.n_detections == 1
    assert domain.ap["3d"]["chair"]["0.50"] == 1.0
    assert domain.no_ground_truth == ["table"]
    # the mean covers the classes with ground truth only
    assert domain.mean_ap["3d"]["0.50"] == 1.0


def test_scene_tie_break():
    # equal scores across scenes are ranked by scene id, so the false positive of "a" comes first
    scenes = [Scene(name, 0, np.zeros((1, 3)), np.zeros((1, 6)), box(0)[None], ("chair",)) for name in ("b", "a")]
    detections = [[ScoredBox("chair", box(0), 0.5)], [ScoredBox("chair", box(5), 0.5)]]
    domain = evaluate_domain(detections, PROFILE, scenes, Protocol.INDOOR, (0.25,), (IoUKind.IOU_3D,))
    # ranks (FP, TP) with two ground-truth boxes
    assert domain.ap["3d"]["chair"]["0.25"] == pytest.approx(0.25)


def test_report_files(tmp_path):
    scenes = [generate_scene(PROFILE, 1, i) for i in range(2)]
    report = evaluate(OracleDetector(), [(PROFILE, scenes)], Protocol.KITTI)
    json_file = str(tmp_path / "report.json")
    report.write_json(json_file)
    assert EvalReport.read_json(json_file).to_dict() == report.to_dict()
    assert report.to_dict()["metadata"]["integration"] == "40-point"

    csv_file = str(tmp_path / "report.csv")
    report.write_csv(csv_file)
    with open(csv_file) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["detector", "domain", "iou", "class", "threshold", "ap", "n_gt"]
    # two classes plus the mean, for both IoU kinds at one threshold
    assert len(rows) == 1 + 2 * 3

    with open(json_file, "w") as f:
        f.write("{")
    with pytest.raises(FormatError):
        EvalReport.read_json(json_file)


def test_detection_evaluator():
    scenes = [generate_scene(PROFILE, 2, i) for i in range(2)]
    case = EvaluationCase([OracleDetector.definition(), FixedDetector({})], [(PROFILE, scenes)], runs=2)
    sink = RecordingSink()
    reports = DetectionEvaluator(case, sink, parallelism=2).run()
    assert len(reports) == 4
    assert sink.series == ["oracle", "fixed"]
    assert sink.flushed
    steps, values = zip(*sink.data["oracle"])
    assert steps == (1, 2)
    assert values[0][f"{PROFILE.name}/3d@0.25"] == pytest.approx(1.0)
    assert sink.data["fixed"][0][1][f"{PROFILE.name}/3d@0.50"] == 0.0
    with pytest.raises(ValueError):
        EvaluationCase(OracleDetector(), [(PROFILE, scenes)], runs=0)
