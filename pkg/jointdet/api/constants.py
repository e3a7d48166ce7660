"""
For License information see the LICENSE file.

"""
import os
from enum import Enum

DATA_DIRECTORY: str = os.environ.get("JOINTDET_OUTPUT_DIR", "data/")

CHECKPOINT_DIRECTORY: str = os.path.join(DATA_DIRECTORY, "checkpoints/")

CORPUS_DIRECTORY: str = os.path.join(DATA_DIRECTORY, "corpora/")

FIGURE_DIRECTORY: str = os.path.join(DATA_DIRECTORY, "figures/")

LOG_DIRECTORY: str = os.path.join(DATA_DIRECTORY, "logs/")

PICKLE_DIRECTORY: str = os.path.join(DATA_DIRECTORY, "pickle/")

CHECKPOINT_FORMAT_VERSION: int = 1

MANIFEST_FORMAT_VERSION: int = 1

SCENE_FORMAT_VERSION: int = 1

SCENE_MAGIC: bytes = b"JDSC"

INDOOR_VOXEL_SIZE: float = 0.01  # meters

OUTDOOR_VOXEL_SIZE: float = 0.05  # meters

UNIFIED_ATTRIBUTE_CHANNELS: int = 6

PROBABILITY_CLAMP: float = 1e-7

DEFAULT_TEMPERATURE: float = 0.07

DEFAULT_FOCAL_ALPHA: float = 0.25

DEFAULT_FOCAL_GAMMA: float = 2.0

DEFAULT_NORM_MOMENTUM: float = 0.9

DEFAULT_NORM_EPSILON: float = 1e-5

DEFAULT_SCORE_THRESHOLD: float = 0.6

DEFAULT_NMS_THRESHOLD: float = 0.5

GRAD_CHECK_TOLERANCE: float = 1e-4


class JointDetError(Exception):
    """Base class of all errors raised by jointdet. `exit_code` is the process exit code used by the CLI."""
    exit_code: int = 1


class ContractViolation(JointDetError):
    """A pre-condition of an operation does not hold."""
    exit_code = 1


class ConfigError(JointDetError):
    exit_code = 2


class FormatError(JointDetError):
    """A file or schema does not match the expected format. The message names the file and the offending field."""
    exit_code = 2


class EmptySceneError(JointDetError):
    exit_code = 1


class RejectedInputError(JointDetError):
    exit_code = 1


class NonFiniteError(JointDetError):
    exit_code = 3


class GradCheckFailure(JointDetError):
    exit_code = 4


class ContextMode(Enum):
    """
    Domains receiving a context-partition transform.

    INDOOR_ONLY - one transform per indoor domain
    ALL - one transform per domain
    OFF - no context partitioning
    """
    INDOOR_ONLY = "indoor-only"
    ALL = "all"
    OFF = "off"


class ClassificationMode(Enum):
    """
    Design of the classification branch.

    DUAL - class-agnostic sparse conv objectness times frozen-embedding class-specific probability
    CONV_ONLY - class-specific sparse conv
    EMBEDDING_ONLY - frozen embeddings without the class-agnostic branch
    EMBEDDING_TRAINABLE - embeddings copied into trainable parameters, no class-agnostic branch
    """
    DUAL = "dual"
    CONV_ONLY = "conv-only"
    EMBEDDING_ONLY = "embedding-only"
    EMBEDDING_TRAINABLE = "embedding-trainable"


class SoftTarget(Enum):
    """
    Classification target of the focal loss for positive locations.

    IOU_BEV - IoU of the footprints
    IOU_3D - volumetric IoU
    DECOUPLED - mean of the footprint IoU and the vertical overlap ratio
    HARD - binary class label (plain focal loss)
    """
    IOU_BEV = "iou-bev"
    IOU_3D = "iou-3d"
    DECOUPLED = "decoupled"
    HARD = "hard"


class ProbSource(Enum):
    """Where the domain probabilities driving the partitioned layers come from during training."""
    ONE_HOT = "one-hot"
    ROUTER = "router"


class Protocol(Enum):
    """
    Evaluation protocols.

    INDOOR - 3D IoU thresholds 0.25/0.50, all-points integration
    KITTI - IoU threshold 0.70, 40 recall positions
    """
    INDOOR = "indoor"
    KITTI = "kitti"


class APMode(Enum):
    ALL_POINTS = "all-points"
    FORTY_POINT = "40-point"


class IoUKind(Enum):
    IOU_3D = "3d"
    BEV = "bev"


class View(Enum):
    FRONT = "front"
    FULL = "360"


class NormMode(Enum):
    TRAIN = "train"
    INFER = "infer"
