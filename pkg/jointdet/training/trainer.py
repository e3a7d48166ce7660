"""
For License information see the LICENSE file.

"""
import json
import os
from dataclasses import dataclass, field
from logging import getLogger
from math import ceil
from typing import Dict, IO, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import RunConfig
from ..api import DataSink
from ..api.constants import NonFiniteError, ConfigError, SoftTarget
from ..autodiff import AdamW, CyclicSchedule, OptimizerState, Tape, backward
from ..head import base_dims_cache, base_dims_table
from ..model import DomainSpec, JointDetector, ObjectiveConfig, save_model, training_objective
from ..domain import route
from ..preprocessing import CorpusManifest, DomainProfile, Scene, augment, fallback_table, load_embedding_table, \
    sample_indices
from ..util.time import Stopwatch

log = getLogger(__name__)

COMPLETED: str = "completed"
DIVERGED: str = "diverged"


class JsonLinesSink(DataSink):
    """Appends one JSON object per offered data point: {"series": ..., "step": ..., <values>}."""
    __filename: str
    __file: Optional[IO]

    def __init__(self, filename: str):
        self.__filename = filename
        self.__file = None

    def register_series(self, series_id: str) -> None:
        if self.__file is None:
            directory = os.path.dirname(self.__filename)
            if directory:
                os.makedirs(directory, exist_ok=True)
            self.__file = open(self.__filename, "w")

    def offer_data(self, series_id: str, step: int, values: Mapping[str, float]) -> None:
        record = {"series": series_id, "step": step}
        record.update({k: (float(v) if np.isfinite(v) else str(v)) for k, v in values.items()})
        self.__file.write(json.dumps(record) + "\n")

    def flush(self) -> None:
        if self.__file is not None:
            self.__file.close()
            self.__file = None


@dataclass
class TrainingResult:
    """The outcome of a training run."""
    model: JointDetector
    outcome: str
    epochs: int
    steps: int
    losses: List[float] = field(default_factory=list)
    checkpoints: List[str] = field(default_factory=list)

    @property
    def diverged(self) -> bool:
        return self.outcome == DIVERGED


def training_profiles(config: RunConfig, manifest: CorpusManifest) -> List[DomainProfile]:
    """The training domains: those named by the config, or all domains that are not held out."""
    if config.domains is None:
        profiles = [p for p in manifest.profiles if not p.held_out]
    else:
        profiles = [manifest.profile(domain_id) for domain_id in config.domains]
    if not profiles:
        raise ConfigError("No training domains selected")
    return profiles


def load_corpora(manifest: CorpusManifest, profiles: Sequence[DomainProfile]) -> List[List[Scene]]:
    corpora = []
    for profile in profiles:
        scenes = [scene for scene in manifest.load_corpus(profile.domain_id) if scene.n_points > 0]
        if not scenes:
            raise ConfigError(f"Domain {profile.name} has no non-empty scenes")
        corpora.append(scenes)
    return corpora


def build_model(config: RunConfig, manifest: CorpusManifest, profiles: Sequence[DomainProfile],
                corpora: Sequence[Sequence[Scene]]) -> JointDetector:
    """
    Creates an untrained model: the label space is the union over the manifest, base dimensions come from the
    training boxes and the class-name embeddings from the configured table (or the offline fallback).
    """
    class_names = manifest.label_union()
    class_boxes: Dict[str, List[np.ndarray]] = {}
    for scenes in corpora:
        for scene in scenes:
            for name, box in zip(scene.class_names, scene.boxes):
                class_boxes.setdefault(name, []).append(box)
    cache = base_dims_cache({name: np.array(boxes) for name, boxes in class_boxes.items()})
    if config.embeddings is not None:
        table = load_embedding_table(config.embeddings).subtable(class_names)
    else:
        table = fallback_table(class_names, config.embedding_dim, config.embedding_seed).vectors()
    return JointDetector([DomainSpec.from_profile(p) for p in profiles], class_names, table,
                         base_dims_table(cache, class_names), config.backbone, config.scatter, config.context_mode,
                         config.classification, config.temperature, config.router_hidden, config.seed)


def router_accuracy(model: JointDetector, scenes: Sequence[Scene]) -> float:
    """The share of non-empty scenes of training domains that the router assigns to their own domain."""
    scenes = [scene for scene in scenes if scene.n_points > 0]
    if not scenes:
        return 0.0
    correct = 0
    for scene in scenes:
        probs = route(model.voxelize([scene]), model.router).data[0]
        correct += int(np.argmax(probs) == model.domain_index(scene.domain_id))
    return correct / len(scenes)


def _is_stalled(losses: Sequence[float], window: int) -> bool:
    # the mean of the later half of the window does not undercut the earlier half
    if len(losses) < window:
        return False
    recent = np.asarray(losses[-window:])
    half = window // 2
    return bool(np.mean(recent[half:]) >= np.mean(recent[:half]))


class Trainer:
    """
    Joint training on the training domains of a corpus: dataset-aware batches, global augmentation, the
    multi-domain objective and AdamW updates. Every step's loss breakdown is offered to the sinks, checkpoints are
    written every `checkpoint_every` epochs and after the final one.

    Parameters
    ----------
    config : RunConfig
        the run configuration
    manifest : CorpusManifest
        the corpus
    sinks : Union[DataSink, Iterable[DataSink]]
        data sinks for the per-step loss records
        default: ()
    """
    __config: RunConfig
    __manifest: CorpusManifest
    __sinks: List[DataSink]

    def __init__(self, config: RunConfig, manifest: CorpusManifest, sinks: Union[DataSink, Iterable[DataSink]] = ()):
        config.validate()
        self.__config = config
        self.__manifest = manifest
        self.__sinks = [sinks] if isinstance(sinks, DataSink) else list(sinks)

    def __divergence_allowed(self) -> bool:
        return self.__config.allow_divergence or self.__config.loss.soft_target == SoftTarget.HARD

    def run(self) -> TrainingResult:
        config = self.__config
        profiles = training_profiles(config, self.__manifest)
        corpora = load_corpora(self.__manifest, profiles)
        model = build_model(config, self.__manifest, profiles, corpora)
        model.train()

        optimizer_config = config.optimizer
        schedule = None
        if optimizer_config.schedule_period > 1:
            schedule = CyclicSchedule(optimizer_config.lr, optimizer_config.schedule_period)
        params = model.parameters()
        optimizer = AdamW(params, OptimizerState(optimizer_config.lr, tuple(optimizer_config.betas),
                                                 optimizer_config.eps, optimizer_config.weight_decay), schedule)
        objective = ObjectiveConfig(config.loss.soft_target, config.loss.alpha, config.loss.gamma,
                                    config.loss.router_weight, config.prob_source)

        rng = np.random.default_rng(config.seed)
        sizes = [len(scenes) for scenes in corpora]
        steps_per_epoch = config.steps_per_epoch or max(1, ceil(sum(sizes) / config.batch_size))
        checkpoint_dir = os.path.join(config.run_directory(), "checkpoints")

        log.info(f"Training on {[p.name for p in profiles]} ({sizes} scenes), {model.n_parameters()} parameters, "
                 f"{config.epochs} epochs of {steps_per_epoch} steps")
        for sink in self.__sinks:
            sink.register_series(config.run_name)

        result = TrainingResult(model, COMPLETED, 0, 0)
        stopwatch = Stopwatch()
        stopwatch.start()
        for epoch in range(1, config.epochs + 1):
            log.info("######################################################################################")
            log.info(f"# EPOCH {epoch}")
            log.info("######################################################################################")
            epoch_losses = []
            for _ in range(steps_per_epoch):
                batch = [augment(corpora[d][i], profiles[d], rng, config.augment)
                         for d, i in sample_indices(sizes, config.batch_size, rng)]
                optimizer.zero_grad()
                with Tape() as tape:
                    total, breakdown = training_objective(model, batch, objective)
                finite = breakdown.is_finite()
                if finite:
                    backward(tape, total, params.values())
                    finite = all(np.all(np.isfinite(p.grad)) for p in params.values())

                result.steps += 1
                values = breakdown.to_dict()
                values["lr"] = optimizer.current_lr()
                for sink in self.__sinks:
                    sink.offer_data(config.run_name, result.steps, values)
                log.debug(f"Step {result.steps}: {breakdown}")

                if not finite:
                    if not self.__divergence_allowed():
                        raise NonFiniteError(f"Non-finite loss or gradient at step {result.steps}")
                    log.warning(f"Training diverged at step {result.steps}: non-finite loss or gradient")
                    result.outcome = DIVERGED
                    break
                optimizer.step()
                result.losses.append(breakdown.total)
                epoch_losses.append(breakdown.total)
                if self.__divergence_allowed() and _is_stalled(result.losses, config.divergence_window):
                    log.warning(f"Training diverged at step {result.steps}: loss stopped decreasing over "
                                f"{config.divergence_window} steps")
                    result.outcome = DIVERGED
                    break

            result.epochs = epoch
            if epoch_losses:
                log.info(f"EPOCH {epoch} COMPLETED IN {stopwatch.lap()}, mean loss {np.mean(epoch_losses):.6f}")
            if result.diverged:
                break
            if epoch % config.checkpoint_every == 0 or epoch == config.epochs:
                filename = os.path.join(checkpoint_dir, f"epoch_{epoch:03d}.ckpt")
                save_model(model, filename, {"config": config.to_dict(), "epoch": epoch, "step": result.steps})
                result.checkpoints.append(filename)

        log.info(f"Training {result.outcome} after {result.steps} steps in {stopwatch.stop()}")
        for sink in self.__sinks:
            sink.flush()
        return result


def train(config: RunConfig, manifest: CorpusManifest, sinks: Union[DataSink, Iterable[DataSink]] = ()) \
        -> TrainingResult:
    """Runs a `Trainer` and writes the outcome next to the checkpoints."""
    result = Trainer(config, manifest, sinks).run()
    directory = config.run_directory()
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "outcome.json"), "w") as f:
        json.dump({"outcome": result.outcome, "epochs": result.epochs, "steps": result.steps,
                   "checkpoints": result.checkpoints}, f, indent=1)
    return result
