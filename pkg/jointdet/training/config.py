"""
Run configuration. A run is configured by a JSON file whose keys mirror the dataclass tree below; every key may be
overridden with "dotted.key=value" strings (values are parsed as JSON literals, falling back to plain strings).
Precedence: overrides > file > defaults.

For License information see the LICENSE file.

"""
import json
import os
from dataclasses import dataclass, field, fields, is_dataclass, replace, asdict
from enum import Enum
from logging import getLogger
from typing import Any, Dict, Iterable, Optional, Tuple

from ..api.constants import ClassificationMode, ConfigError, ContextMode, ProbSource, SoftTarget, DATA_DIRECTORY, \
    DEFAULT_FOCAL_ALPHA, DEFAULT_FOCAL_GAMMA, DEFAULT_TEMPERATURE
from ..preprocessing import AugmentConfig
from ..sparse.backbone import BackboneConfig

log = getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    """AdamW settings. With `schedule_period` > 1 the rate follows a triangular cycle peaking at `lr`."""
    lr: float = 1e-2
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 1e-4
    schedule_period: int = 0


@dataclass(frozen=True)
class LossConfig:
    soft_target: SoftTarget = SoftTarget.IOU_BEV
    alpha: float = DEFAULT_FOCAL_ALPHA
    gamma: float = DEFAULT_FOCAL_GAMMA
    router_weight: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a training or evaluation run depends on.

    `domains` selects the training domains by id (all domains of the manifest that are not held out by default).
    `embeddings` names an embedding table file; without one a fallback table of dimension `embedding_dim` seeded by
    `embedding_seed` is used. `allow_divergence` turns a non-finite or non-decreasing loss into a recorded outcome
    instead of an error; hard-target runs always allow it.
    """
    manifest: Optional[str] = None
    embeddings: Optional[str] = None
    embedding_seed: int = 0
    embedding_dim: int = 32
    domains: Optional[Tuple[int, ...]] = None
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    scatter: bool = True
    context_mode: ContextMode = ContextMode.INDOOR_ONLY
    classification: ClassificationMode = ClassificationMode.DUAL
    temperature: float = DEFAULT_TEMPERATURE
    prob_source: ProbSource = ProbSource.ONE_HOT
    router_hidden: int = 16
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    epochs: int = 5
    batch_size: int = 4
    steps_per_epoch: Optional[int] = None
    seed: int = 0
    checkpoint_every: int = 1
    allow_divergence: bool = False
    divergence_window: int = 20
    output_dir: str = os.path.join(DATA_DIRECTORY, "runs")
    run_name: str = "run"

    def validate(self) -> None:
        """Checks value ranges. Enum fields are checked on construction from dictionaries."""
        self.backbone.validate()
        checks = [
            (self.epochs >= 1, f"epochs must be >= 1, got {self.epochs}"),
            (self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}"),
            (self.steps_per_epoch is None or self.steps_per_epoch >= 1,
             f"steps_per_epoch must be >= 1, got {self.steps_per_epoch}"),
            (self.optimizer.lr > 0, f"optimizer.lr must be > 0, got {self.optimizer.lr}"),
            (self.optimizer.weight_decay >= 0, f"optimizer.weight_decay must be >= 0"),
            (self.optimizer.schedule_period == 0 or self.optimizer.schedule_period >= 2,
             f"optimizer.schedule_period must be 0 or >= 2, got {self.optimizer.schedule_period}"),
            (0 <= self.loss.alpha <= 1, f"loss.alpha must be in [0, 1], got {self.loss.alpha}"),
            (self.loss.gamma >= 0, f"loss.gamma must be >= 0, got {self.loss.gamma}"),
            (self.loss.router_weight >= 0, f"loss.router_weight must be >= 0"),
            (self.temperature > 0, f"temperature must be > 0, got {self.temperature}"),
            (self.embedding_dim >= 1, f"embedding_dim must be >= 1, got {self.embedding_dim}"),
            (self.router_hidden >= 1, f"router_hidden must be >= 1, got {self.router_hidden}"),
            (self.checkpoint_every >= 1, f"checkpoint_every must be >= 1, got {self.checkpoint_every}"),
            (self.divergence_window >= 2, f"divergence_window must be >= 2, got {self.divergence_window}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def resolved(self) -> 'RunConfig':
        """Returns a copy with absolute paths. Given input files must exist."""
        for name in ("manifest", "embeddings"):
            path = getattr(self, name)
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"{name}: file {path} does not exist")
        absolute = (lambda p: None if p is None else os.path.abspath(p))
        return replace(self, manifest=absolute(self.manifest), embeddings=absolute(self.embeddings),
                       output_dir=os.path.abspath(self.output_dir))

    def run_directory(self) -> str:
        return os.path.join(self.output_dir, self.run_name)

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'RunConfig':
        return _build(cls, values, "")

    @classmethod
    def from_json(cls, filename: str) -> 'RunConfig':
        try:
            with open(filename) as f:
                values = json.load(f)
        except OSError as e:
            raise ConfigError(f"{filename}: cannot read config ({e})")
        except json.JSONDecodeError as e:
            raise ConfigError(f"{filename}: line {e.lineno}: {e.msg}")
        if not isinstance(values, dict):
            raise ConfigError(f"{filename}: top level must be an object")
        return cls.from_dict(values)

    def with_overrides(self, overrides: Iterable[str]) -> 'RunConfig':
        """Applies "dotted.key=value" overrides and logs every overridden key."""
        values = self.to_dict()
        for override in overrides:
            if "=" not in override:
                raise ConfigError(f"Override {override!r} is not of the form key=value")
            key, raw = override.split("=", 1)
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            *path, last = key.strip().split(".")
            target = values
            for step in path:
                if not isinstance(target.get(step), dict):
                    raise ConfigError(f"Unknown config key {key}")
                target = target[step]
            if last not in target:
                raise ConfigError(f"Unknown config key {key}")
            log.info(f"Config override {key} = {value!r} (was {target[last]!r})")
            target[last] = value
        return RunConfig.from_dict(values)


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _build(cls, values: Dict[str, Any], prefix: str):
    if not isinstance(values, dict):
        raise ConfigError(f"{prefix or 'config'}: must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigError(f"Unknown config keys {sorted(prefix + k for k in unknown)}")
    defaults = cls()
    kwargs = {}
    for name, value in values.items():
        default = getattr(defaults, name)
        key = prefix + name
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, key + ".")
        elif isinstance(default, Enum):
            try:
                kwargs[name] = type(default)(value)
            except ValueError:
                raise ConfigError(f"{key}: {value!r} is not one of {[m.value for m in type(default)]}")
        elif isinstance(default, tuple) or (name == "domains" and value is not None):
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key}: must be a list")
            kwargs[name] = tuple(value)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{key}: must be true or false")
            kwargs[name] = value
        elif isinstance(default, (int, float)) and not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: must be a number")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def load_config(filename: Optional[str] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """Resolves defaults < file < overrides into a validated configuration."""
    config = RunConfig() if filename is None else RunConfig.from_json(filename)
    if filename is not None:
        log.info(f"Loaded config from {filename}")
    config = config.with_overrides(overrides)
    config.validate()
    return config
