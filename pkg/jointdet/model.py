"""
The joint multi-domain detector: domain router, partitioned sparse backbone and anchor-free head.

For License information see the LICENSE file.

"""
from dataclasses import dataclass, asdict
from logging import getLogger
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .api.constants import ClassificationMode, ContextMode, NormMode, ProbSource, SoftTarget, ConfigError, \
    FormatError, DEFAULT_TEMPERATURE, DEFAULT_SCORE_THRESHOLD, DEFAULT_NMS_THRESHOLD, DEFAULT_FOCAL_ALPHA, \
    DEFAULT_FOCAL_GAMMA
from .autodiff import Module, Value, load_checkpoint, read_checkpoint, save_checkpoint
from .domain import Router, route
from .geometry import OrientedBox3D, rotated_nms
from .head import AssignmentTargets, Detection, DetectionHead, HeadOutputs, assign_targets, decode_values
from .loss import LossBreakdown, sample_losses, total_objective
from .preprocessing import DomainProfile, Scene
from .sparse import SparseTensor, voxelize, voxelize_batch
from .sparse.backbone import BackboneConfig, Backbone, build_backbone

log = getLogger(__name__)


@dataclass(frozen=True)
class DomainSpec:
    """What the model knows about a training domain."""
    domain_id: int
    name: str
    indoor: bool
    voxel_size: float
    label_space: Tuple[str, ...]

    @classmethod
    def from_profile(cls, profile: DomainProfile) -> 'DomainSpec':
        return cls(profile.domain_id, profile.name, profile.indoor, profile.voxel_size, tuple(profile.label_space))


class JointDetector(Module):
    """
    A detector trained on several domains at once. Normalization affines and context transforms are partitioned
    over the training domains and mixed with domain probabilities: the one-hot domain label (or the router output)
    during training, the router output at inference.

    Parameters
    ----------
    domains : Sequence[DomainSpec]
        the training domains in partition order
    class_names : Sequence[str]
        the union label space
    table : np.ndarray
        (K, E) class-name embeddings of `class_names`
    base_dims : np.ndarray
        (K, 3) base box dimensions of every class
    backbone : BackboneConfig
        the backbone layout
        default: BackboneConfig()
    scatter : bool
        whether normalization affines are partitioned per domain
        default: True
    context_mode : ContextMode
        which domains get context partitioning
        default: ContextMode.INDOOR_ONLY
    classification : ClassificationMode
        the classification branch design
        default: ClassificationMode.DUAL
    temperature : float
        cosine temperature of the class-specific branch
        default: DEFAULT_TEMPERATURE
    router_hidden : int
        channels of the router convolution
        default: 16
    seed : int
        the initialization seed
        default: 0
    """
    router: Router
    backbone: Backbone
    head: DetectionHead

    def __init__(self, domains: Sequence[DomainSpec], class_names: Sequence[str], table: np.ndarray,
                 base_dims: np.ndarray, backbone: BackboneConfig = BackboneConfig(), scatter: bool = True,
                 context_mode: ContextMode = ContextMode.INDOOR_ONLY,
                 classification: ClassificationMode = ClassificationMode.DUAL,
                 temperature: float = DEFAULT_TEMPERATURE, router_hidden: int = 16, seed: int = 0):
        super().__init__()
        if len(domains) == 0:
            raise ConfigError("At least one training domain is required")
        ids = [d.domain_id for d in domains]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"Duplicate domain ids {ids}")
        table = np.asarray(table, dtype=np.float64)
        base_dims = np.asarray(base_dims, dtype=np.float64)
        if table.shape[0] != len(class_names) or base_dims.shape != (len(class_names), 3):
            raise ConfigError(f"{len(class_names)} classes but a table of shape {table.shape} and base dims of "
                              f"shape {base_dims.shape}")
        for domain in domains:
            unknown = [name for name in domain.label_space if name not in class_names]
            if unknown:
                raise ConfigError(f"Domain {domain.name}: classes {unknown} are not in the label space")

        rng = np.random.default_rng(seed)
        self.domains = tuple(domains)
        self.class_names = tuple(class_names)
        self.settings = {"backbone": asdict(backbone), "scatter": scatter, "context_mode": context_mode.value,
                         "classification": classification.value, "temperature": temperature,
                         "router_hidden": router_hidden, "seed": seed, "table_shape": list(table.shape)}
        self.router = Router(backbone.in_channels, len(domains), router_hidden, rng=rng)
        self.backbone = build_backbone(backbone, [d.indoor for d in domains], scatter, context_mode, rng)
        self.head = DetectionHead(backbone.channels[-1], table, classification, temperature, rng)
        self.register_buffer("base_dims", base_dims)

    @property
    def n_domains(self) -> int:
        return len(self.domains)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def in_channels(self) -> int:
        return self.backbone.config.in_channels

    def domain_index(self, domain_id: int) -> int:
        for i, domain in enumerate(self.domains):
            if domain.domain_id == domain_id:
                return i
        raise ConfigError(f"Domain {domain_id} is not a training domain of the model")

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise ConfigError(f"Class {name} is not in the label space of the model")

    def class_mask(self, domain_indices: Sequence[int]) -> np.ndarray:
        """Returns the (B, K) label-space membership of the given training domains."""
        mask = np.zeros((len(domain_indices), self.n_classes))
        for row, index in enumerate(domain_indices):
            mask[row, [self.class_index(name) for name in self.domains[index].label_space]] = 1.0
        return mask

    def voxelize(self, scenes: Sequence[Scene], voxel_sizes: Optional[Sequence[float]] = None) -> SparseTensor:
        """Voxelizes scenes of training domains, or of any domain when `voxel_sizes` are given."""
        if voxel_sizes is None:
            voxel_sizes = [self.domains[self.domain_index(s.domain_id)].voxel_size for s in scenes]
        return voxelize_batch([(s.positions, s.attributes, vs) for s, vs in zip(scenes, voxel_sizes)],
                              self.in_channels)

    def forward(self, tensor: SparseTensor, probs: Value, mode: Optional[NormMode] = None) -> HeadOutputs:
        return self.head(self.backbone(tensor, probs, mode))

    def describe(self) -> Dict[str, Any]:
        """The constructor arguments apart from the arrays, which live in the state."""
        return {"domains": [asdict(d) for d in self.domains], "class_names": list(self.class_names), **self.settings}

    @classmethod
    def from_description(cls, description: Dict[str, Any]) -> 'JointDetector':
        domains = [DomainSpec(d["domain_id"], d["name"], d["indoor"], d["voxel_size"], tuple(d["label_space"]))
                   for d in description["domains"]]
        backbone = description["backbone"]
        config = BackboneConfig(backbone["in_channels"], tuple(backbone["channels"]), tuple(backbone["strides"]),
                                backbone["blocks"])
        n_classes = len(description["class_names"])
        return cls(domains, description["class_names"], np.ones(description["table_shape"]), np.ones((n_classes, 3)),
                   config, description["scatter"], ContextMode(description["context_mode"]),
                   ClassificationMode(description["classification"]), description["temperature"],
                   description["router_hidden"], description["seed"])

    def predict(self, scene: Scene, voxel_size: Optional[float] = None,
                score_threshold: float = DEFAULT_SCORE_THRESHOLD, nms_threshold: float = DEFAULT_NMS_THRESHOLD,
                classes: Optional[Sequence[str]] = None) -> List[Detection]:
        """
        Detects objects in one scene.

        Parameters
        ----------
        scene : Scene
            the scene
        voxel_size : Optional[float]
            the voxel size to use; required for scenes of domains the model was not trained on
            default: None
        score_threshold : float
            detections scoring below this value are dropped
            default: DEFAULT_SCORE_THRESHOLD
        nms_threshold : float
            BEV IoU above which lower-scoring detections of the same class are suppressed
            default: DEFAULT_NMS_THRESHOLD
        classes : Optional[Sequence[str]]
            restricts detection to these classes
            default: None

        Returns
        -------
        predict : List[Detection]
            detections by descending score
        """
        return predict(self, scene, voxel_size, score_threshold, nms_threshold, classes)


def predict(model: JointDetector, scene: Scene, voxel_size: Optional[float] = None,
            score_threshold: float = DEFAULT_SCORE_THRESHOLD, nms_threshold: float = DEFAULT_NMS_THRESHOLD,
            classes: Optional[Sequence[str]] = None) -> List[Detection]:
    """
    Full inference: voxelize, route, run backbone and head, fuse the scores of every (site, class) candidate as the
    geometric mean of the class, centerness and IoU probabilities, filter by `score_threshold` and suppress
    overlapping candidates per class. Candidates are decoded with the base dimensions of their class.
    """
    if scene.n_points == 0:
        return []
    if voxel_size is None:
        voxel_size = model.domains[model.domain_index(scene.domain_id)].voxel_size
    tensor = voxelize(scene.positions, scene.attributes, voxel_size, model.in_channels)

    # running statistics only, the module flag is left alone
    outputs = model.forward(tensor, route(tensor, model.router), NormMode.INFER)

    quality = expit(outputs.centerness.data[:, 0]) * expit(outputs.iou.data[:, 0])
    scores = np.cbrt(outputs.class_probs.data * quality[:, None])
    locations = outputs.tensor.locations()
    cells = outputs.tensor.voxel_sizes[outputs.tensor.batch]

    wanted = range(model.n_classes) if classes is None else \
        [model.class_index(name) for name in classes if name in model.class_names]
    detections = []
    for k in wanted:
        sites = np.flatnonzero(scores[:, k] >= score_threshold)
        if sites.size == 0:
            continue
        boxes = decode_values(locations[sites], Value(outputs.regression.data[sites]), cells[sites],
                              np.tile(model.base_dims[k], (sites.size, 1))).data
        finite = np.all(np.isfinite(boxes), axis=1) & np.all(boxes[:, 3:6] > 0, axis=1)
        boxes, class_scores = boxes[finite], scores[sites[finite], k]
        for i in rotated_nms(boxes, class_scores, nms_threshold):
            detections.append(Detection(OrientedBox3D.from_array(boxes[i]), k, float(min(class_scores[i], 1.0))))
    detections.sort(key=lambda d: -d.score)
    log.debug(f"Scene {scene.scene_id}: {len(detections)} detections from {len(tensor)} voxels")
    return detections


@dataclass(frozen=True)
class ObjectiveConfig:
    """Loss settings of a training step."""
    soft_target: SoftTarget = SoftTarget.IOU_BEV
    alpha: float = DEFAULT_FOCAL_ALPHA
    gamma: float = DEFAULT_FOCAL_GAMMA
    router_weight: float = 1.0
    prob_source: ProbSource = ProbSource.ONE_HOT


def batch_targets(model: JointDetector, outputs: HeadOutputs, scenes: Sequence[Scene]) -> AssignmentTargets:
    """Assigns the head sites of every batch element to the ground truth of its scene."""
    tensor = outputs.tensor
    v = len(tensor)
    matched = np.full(v, -1, dtype=np.int64)
    labels = np.full(v, -1, dtype=np.int64)
    ctr = np.zeros(v)
    boxes = np.zeros((v, 7))
    locations = tensor.locations()
    for b, scene in enumerate(scenes):
        sites = tensor.element(b)
        scene_labels = np.array([model.class_index(name) for name in scene.class_names], dtype=np.int64)
        targets = assign_targets(locations[sites], scene.boxes, scene_labels)
        matched[sites] = targets.matched
        labels[sites] = targets.labels
        ctr[sites] = targets.centerness
        boxes[sites] = targets.boxes
    return AssignmentTargets(matched, labels, ctr, boxes)


def training_objective(model: JointDetector, scenes: Sequence[Scene],
                       config: ObjectiveConfig = ObjectiveConfig()) -> Tuple[Value, LossBreakdown]:
    """
    Forward pass and multi-domain objective of one batch. Must run under an active `Tape` for gradients.

    Parameters
    ----------
    model : JointDetector
        the model, in training mode
    scenes : Sequence[Scene]
        the batch, all of training domains and non-empty
    config : ObjectiveConfig
        the loss settings
        default: ObjectiveConfig()

    Returns
    -------
    training_objective : Tuple[Value, LossBreakdown]
        the scalar objective and its breakdown
    """
    domains = np.array([model.domain_index(scene.domain_id) for scene in scenes], dtype=np.int64)
    tensor = model.voxelize(scenes)
    router_logits = model.router.logits(tensor)
    if config.prob_source == ProbSource.ROUTER:
        probs = Value(route(tensor, model.router).data)
    else:
        probs = Value(np.eye(model.n_domains)[domains])

    outputs = model.forward(tensor, probs)
    targets = batch_targets(model, outputs, scenes)
    site_dims = np.ones((len(outputs.tensor), 3))
    positive = targets.positive
    site_dims[positive] = model.base_dims[targets.labels[positive]]
    decoded = decode_values(outputs.tensor.locations(), outputs.regression,
                            outputs.tensor.voxel_sizes[outputs.tensor.batch], site_dims)

    losses = sample_losses(outputs, targets, decoded, model.class_mask(domains), config.soft_target, config.alpha,
                           config.gamma)
    return total_objective(losses, domains, model.n_domains, router_logits, config.router_weight)


def save_model(model: JointDetector, filename: str, meta: Optional[Dict[str, Any]] = None) -> None:
    save_checkpoint(model, filename, {"model": model.describe(), **(meta or {})})


def load_model(filename: str) -> Tuple[JointDetector, Dict[str, Any]]:
    """Rebuilds a model from a checkpoint written by `save_model` and returns it in eval mode, together with the
    checkpoint meta data.
    """
    meta = read_checkpoint(filename)["meta"]
    if "model" not in meta:
        raise FormatError(f"{filename}: meta.model: missing")
    model = JointDetector.from_description(meta["model"])
    load_checkpoint(model, filename)
    model.eval()
    return model, meta
