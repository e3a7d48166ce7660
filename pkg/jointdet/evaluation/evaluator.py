"""
For License information see the LICENSE file.

"""
from logging import getLogger
from multiprocessing.pool import ThreadPool
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .matching import match_detections, detection_order
from .param import Detector, EvaluationCase, ScoredBox, PROTOCOL_AP_MODES, PROTOCOL_IOU_KINDS, protocol_thresholds
from .precision import average_precision
from .report import DomainReport, EvalReport, threshold_key
from ..api import DataSink
from ..api.constants import IoUKind, Protocol
from ..preprocessing import DomainProfile, Scene
from ..util.time import Stopwatch

log = getLogger(__name__)


def _detect_all(detector: Detector, profile: DomainProfile, scenes: Sequence[Scene],
                parallelism: int) -> List[List[ScoredBox]]:
    def run(scene: Scene) -> List[ScoredBox]:
        if scene.n_points == 0:
            log.warning(f"Scene {scene.scene_id} has no points")
        return detector.detect(scene, profile)

    if parallelism == 1:
        return [run(scene) for scene in scenes]
    with ThreadPool(processes=parallelism) as pool:
        return pool.map(run, scenes)


def evaluate_domain(detections: Sequence[Sequence[ScoredBox]], profile: DomainProfile, scenes: Sequence[Scene],
                    protocol: Protocol, thresholds: Sequence[float],
                    iou_kinds: Sequence[IoUKind]) -> DomainReport:
    """
    Aggregates the detections of one domain into per-class APs. Detections of classes outside the domain's label
    space are ignored.

    Parameters
    ----------
    detections : Sequence[Sequence[ScoredBox]]
        the detections of every scene
    profile : DomainProfile
        the domain
    scenes : Sequence[Scene]
        the scenes, aligned with `detections`
    protocol : Protocol
        selects the AP integration
    thresholds : Sequence[float]
        the IoU thresholds
    iou_kinds : Sequence[IoUKind]
        the IoU kinds

    Returns
    -------
    evaluate_domain : DomainReport
        the per-class and mean APs
    """
    mode = PROTOCOL_AP_MODES[protocol]
    ranks = np.argsort(np.argsort([scene.scene_id for scene in scenes], kind="stable"), kind="stable")
    classes = list(profile.label_space)
    n_gt = {name: sum(scene.class_names.count(name) for scene in scenes) for name in classes}
    report = DomainReport(profile.domain_id, len(scenes),
                          sum(1 for dets in detections for d in dets if d.class_name in classes), n_gt)
    report.no_ground_truth = [name for name in classes if n_gt[name] == 0]

    for kind in iou_kinds:
        per_class: Dict[str, Dict[str, float]] = {}
        for name in classes:
            per_class[name] = {}
            for threshold in thresholds:
                flags, scores, scene_ranks, indices = [], [], [], []
                for rank, scene, dets in zip(ranks, scenes, detections):
                    own = [d for d in dets if d.class_name == name]
                    order = np.argsort([-d.score for d in own], kind="stable")
                    own = [own[i] for i in order]
                    gt = scene.boxes[[i for i, c in enumerate(scene.class_names) if c == name]]
                    boxes = np.array([d.box for d in own]).reshape(-1, 7)
                    flags.extend(match_detections(boxes, gt, threshold, kind))
                    scores.extend(d.score for d in own)
                    scene_ranks.extend([rank] * len(own))
                    indices.extend(range(len(own)))
                ranking = detection_order(scores, scene_ranks, indices)
                per_class[name][threshold_key(threshold)] = average_precision(
                    np.asarray(flags, dtype=bool)[ranking], np.asarray(scores, dtype=np.float64)[ranking],
                    n_gt[name], mode)
        report.ap[kind.value] = per_class
        scored = [name for name in classes if n_gt[name] > 0]
        report.mean_ap[kind.value] = {
            threshold_key(t): float(np.mean([per_class[n][threshold_key(t)] for n in scored])) if scored else 0.0
            for t in thresholds}
    return report


def evaluate(detector: Detector, corpora: Sequence[Tuple[DomainProfile, Sequence[Scene]]],
             protocol: Protocol = Protocol.INDOOR, thresholds: Optional[Sequence[float]] = None,
             iou_kinds: Optional[Sequence[IoUKind]] = None, parallelism: int = 1) -> EvalReport:
    """
    Runs a detector on the scenes of every domain and computes the APs of the protocol.

    Parameters
    ----------
    detector : Detector
        the detector
    corpora : Sequence[Tuple[DomainProfile, Sequence[Scene]]]
        the scenes of every evaluated domain; domains without scenes are left out of the report
    protocol : Protocol
        the evaluation protocol
        default: Protocol.INDOOR
    thresholds : Optional[Sequence[float]]
        a subset of the protocol thresholds
        default: None
    iou_kinds : Optional[Sequence[IoUKind]]
        the IoU kinds; 3D for the indoor protocol, 3D and BEV for the KITTI-style protocol by default
        default: None
    parallelism : int
        the number of inference threads
        default: 1

    Returns
    -------
    evaluate : EvalReport
        the report
    """
    thresholds = protocol_thresholds(protocol, thresholds)
    iou_kinds = tuple(iou_kinds) if iou_kinds is not None else PROTOCOL_IOU_KINDS[protocol]
    report = EvalReport(detector.name(), protocol, PROTOCOL_AP_MODES[protocol], thresholds, iou_kinds)
    for profile, scenes in corpora:
        if len(scenes) == 0:
            continue
        detections = _detect_all(detector, profile, scenes, parallelism)
        report.domains[profile.name] = evaluate_domain(detections, profile, scenes, protocol, thresholds, iou_kinds)
        log.info(f"{detector.name()} on {profile.name}: mean AP "
                 + ", ".join(f"{key} {value:.4f}"
                             for key, value in report.domains[profile.name].mean_ap[iou_kinds[0].value].items()))
    return report


class DetectionEvaluator:
    """
    Runs every detector of an evaluation case on all of its domains and offers the per-domain mean APs to the sinks.
    Series are named after the detectors; the step of a data point is its run.

    Parameters
    ----------
    evaluation_case : EvaluationCase
        the detectors, domains and protocol
    sinks : Union[DataSink, Iterable[DataSink]]
        one or multiple data sinks to write results to
    parallelism : int
        the number of inference threads
        default: 1
    """
    __evaluation_case: EvaluationCase
    __sinks: List[DataSink]
    __parallelism: int

    def __init__(self, evaluation_case: EvaluationCase, sinks: Union[DataSink, Iterable[DataSink]],
                 parallelism: int = 1):
        self.__evaluation_case = evaluation_case
        self.__sinks = [sinks] if isinstance(sinks, DataSink) else list(sinks)
        self.__parallelism = parallelism

    def run(self) -> List[EvalReport]:
        case = self.__evaluation_case
        log.info(f"Running {case.runs()} evaluation runs with parallelism {self.__parallelism}")
        log.info("Evaluated Detectors:")
        for detector in case.detectors():
            log.info(f" - {detector.name()}")
            for sink in self.__sinks:
                sink.register_series(detector.name())

        stopwatch = Stopwatch()
        stopwatch.start()
        reports = []
        for run in range(1, case.runs() + 1):
            log.info("######################################################################################")
            log.info(f"# RUN {run}")
            log.info("######################################################################################")
            for detector in case.detectors():
                report = evaluate(detector, case.corpora(), case.protocol(), case.thresholds(),
                                  parallelism=self.__parallelism)
                reports.append(report)
                for name, domain in report.domains.items():
                    values = {f"{name}/{kind}@{key}": ap for kind, aps in domain.mean_ap.items()
                              for key, ap in aps.items()}
                    for sink in self.__sinks:
                        sink.offer_data(detector.name(), run, values)
            log.info(f"RUN {run} COMPLETED IN {stopwatch.lap()}")

        log.info("######################################################################################")
        log.info(f"Evaluation completed in {stopwatch.stop()}")
        for sink in self.__sinks:
            sink.flush()
        return reports
