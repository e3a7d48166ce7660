"""
For License information see the LICENSE file.

"""
from abc import ABC, abstractmethod
from logging import getLogger
from typing import Any, Dict, Generic, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Type, TypeVar, Union

import numpy as np

from ..api.constants import APMode, ConfigError, IoUKind, Protocol, DEFAULT_NMS_THRESHOLD, DEFAULT_SCORE_THRESHOLD
from ..model import JointDetector, load_model
from ..preprocessing import DomainProfile, Scene

log = getLogger(__name__)


class ScoredBox(NamedTuple):
    """A detection by class name: the (7,) box and its score."""
    class_name: str
    box: np.ndarray
    score: float


class Detector(ABC):
    """
    Anything producing detections for a scene. Detectors are created from a `DetectorDefinition` so that an
    evaluation case can hold several parameterizations of the same detector type.
    """

    @classmethod
    def definition(cls, **kwargs) -> 'DetectorDefinition':
        return DetectorDefinition(cls, kwargs)

    @abstractmethod
    def name(self) -> str:
        raise NotImplementedError

    @abstractmethod
    def detect(self, scene: Scene, profile: DomainProfile) -> List[ScoredBox]:
        """Returns the detections of `scene`, which belongs to the domain described by `profile`."""
        raise NotImplementedError

    def __call__(self, scene: Scene, profile: DomainProfile) -> List[ScoredBox]:
        return self.detect(scene, profile)


T = TypeVar("T", bound=Detector, covariant=True)


class DetectorDefinition(Generic[T]):
    """A detector type together with its construction arguments."""
    __detector: Type[T]
    __kwargs: Dict[str, Any]

    def __init__(self, detector: Type[T], kwargs: Dict[str, Any]):
        self.__detector = detector
        self.__kwargs = kwargs

    def create(self) -> T:
        return self.__detector(**self.__kwargs)


class ModelDetector(Detector):
    """
    Wraps a `JointDetector`, given directly or as a checkpoint file. Scenes of domains the model was not trained on
    are voxelized with their profile's voxel size and routed by the model.

    Parameters
    ----------
    model : Optional[JointDetector]
        the model
        default: None
    checkpoint : Optional[str]
        a checkpoint to load the model from if no model is given
        default: None
    label : str
        the name of the detector in reports
        default: "model"
    score_threshold : float
        the detection score threshold
        default: DEFAULT_SCORE_THRESHOLD
    nms_threshold : float
        the NMS threshold
        default: DEFAULT_NMS_THRESHOLD
    """

    def __init__(self, model: Optional[JointDetector] = None, checkpoint: Optional[str] = None, label: str = "model",
                 score_threshold: float = DEFAULT_SCORE_THRESHOLD, nms_threshold: float = DEFAULT_NMS_THRESHOLD):
        if model is None:
            if checkpoint is None:
                raise ValueError("Either a model or a checkpoint is required")
            model, _ = load_model(checkpoint)
        self.__model = model
        self.__label = label
        self.__score_threshold = score_threshold
        self.__nms_threshold = nms_threshold

    def name(self) -> str:
        return self.__label

    def detect(self, scene: Scene, profile: DomainProfile) -> List[ScoredBox]:
        detections = self.__model.predict(scene, profile.voxel_size, self.__score_threshold, self.__nms_threshold,
                                          classes=profile.label_space)
        return [ScoredBox(self.__model.class_names[d.label], d.box.to_array(), d.score) for d in detections]


class OracleDetector(Detector):
    """Echoes the ground truth with score 1, the upper bound of every metric."""

    def name(self) -> str:
        return "oracle"

    def detect(self, scene: Scene, profile: DomainProfile) -> List[ScoredBox]:
        return [ScoredBox(name, box.copy(), 1.0) for name, box in zip(scene.class_names, scene.boxes)]


PROTOCOL_THRESHOLDS: Dict[Protocol, Tuple[float, ...]] = {
    Protocol.INDOOR: (0.25, 0.5),
    Protocol.KITTI: (0.7,),
}

PROTOCOL_AP_MODES: Dict[Protocol, APMode] = {
    Protocol.INDOOR: APMode.ALL_POINTS,
    Protocol.KITTI: APMode.FORTY_POINT,
}

PROTOCOL_IOU_KINDS: Dict[Protocol, Tuple[IoUKind, ...]] = {
    Protocol.INDOOR: (IoUKind.IOU_3D,),
    Protocol.KITTI: (IoUKind.IOU_3D, IoUKind.BEV),
}


def protocol_thresholds(protocol: Protocol, thresholds: Optional[Sequence[float]] = None) -> Tuple[float, ...]:
    """
    Returns the IoU thresholds of a protocol run: all protocol thresholds by default, otherwise the given ones, which
    must belong to the protocol.
    """
    allowed = PROTOCOL_THRESHOLDS[protocol]
    if thresholds is None:
        return allowed
    thresholds = tuple(float(t) for t in thresholds)
    if len(thresholds) == 0:
        raise ConfigError(f"No IoU thresholds given for protocol {protocol.value}")
    wrong = [t for t in thresholds if not any(np.isclose(t, a) for a in allowed)]
    if wrong:
        raise ConfigError(f"Thresholds {wrong} do not belong to protocol {protocol.value} (allowed: {allowed})")
    return thresholds


class EvaluationCase:
    """
    Detectors to evaluate on the scenes of a set of domains under one protocol.

    Parameters
    ----------
    detectors : Union[DetectorDefinition, Detector, Iterable[Union[DetectorDefinition, Detector]]]
        the detectors, or definitions to create them from
    corpora : Sequence[Tuple[DomainProfile, Sequence[Scene]]]
        the scenes of every evaluated domain
    protocol : Protocol
        the evaluation protocol
        default: Protocol.INDOOR
    thresholds : Optional[Sequence[float]]
        a subset of the protocol thresholds
        default: None
    runs : int
        the number of repetitions
        default: 1
    """
    __detectors: List[Detector]
    __corpora: List[Tuple[DomainProfile, List[Scene]]]
    __protocol: Protocol
    __thresholds: Tuple[float, ...]
    __runs: int

    def __init__(self, detectors: Union[DetectorDefinition, Detector, Iterable[Union[DetectorDefinition, Detector]]],
                 corpora: Sequence[Tuple[DomainProfile, Sequence[Scene]]], protocol: Protocol = Protocol.INDOOR,
                 thresholds: Optional[Sequence[float]] = None, runs: int = 1):
        if runs < 1:
            raise ValueError("Run count must be at least 1")
        if isinstance(detectors, (DetectorDefinition, Detector)):
            detectors = [detectors]
        self.__detectors = [d.create() if isinstance(d, DetectorDefinition) else d for d in detectors]
        self.__corpora = [(profile, list(scenes)) for profile, scenes in corpora]
        self.__protocol = protocol
        self.__thresholds = protocol_thresholds(protocol, thresholds)
        self.__runs = runs

    def detectors(self) -> List[Detector]:
        return self.__detectors

    def corpora(self) -> List[Tuple[DomainProfile, List[Scene]]]:
        return self.__corpora

    def protocol(self) -> Protocol:
        return self.__protocol

    def thresholds(self) -> Tuple[float, ...]:
        return self.__thresholds

    def runs(self) -> int:
        return self.__runs
