"""
Global scene augmentations. Every augmentation transforms points and boxes together, so point-in-box membership is
preserved.

For License information see the LICENSE file.

"""
from dataclasses import dataclass
from logging import getLogger
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .pipeline import MapFilter, Filter, IdentityFilter
from .synthetic import Scene, DomainProfile
from ..geometry import normalize_yaw

log = getLogger(__name__)


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def flip_scene(scene: Scene, axis: str) -> Scene:
    """
    Mirrors a scene. A flip "along the x axis" mirrors across the x axis (y -> -y, yaw -> -yaw), a flip along the
    y axis mirrors across the y axis (x -> -x, yaw -> pi - yaw).
    """
    positions = scene.positions.copy()
    boxes = scene.boxes.copy()
    if axis == "x":
        positions[:, 1] = -positions[:, 1]
        boxes[:, 1] = -boxes[:, 1]
        boxes[:, 6] = normalize_yaw(-boxes[:, 6])
    elif axis == "y":
        positions[:, 0] = -positions[:, 0]
        boxes[:, 0] = -boxes[:, 0]
        boxes[:, 6] = normalize_yaw(np.pi - boxes[:, 6])
    else:
        raise ValueError(f"Unknown flip axis {axis}")
    return scene.replace(positions=positions, boxes=boxes)


def rotate_scene(scene: Scene, theta: float) -> Scene:
    """Rotates a scene by `theta` about the vertical axis through the origin."""
    rotation = _rotation(theta)
    boxes = scene.boxes.copy()
    boxes[:, :3] = boxes[:, :3] @ rotation.T
    boxes[:, 6] = normalize_yaw(boxes[:, 6] + theta)
    return scene.replace(positions=scene.positions @ rotation.T, boxes=boxes)


def scale_scene(scene: Scene, factor: float) -> Scene:
    if factor <= 0:
        raise ValueError(f"Scale factor must be > 0, got {factor}")
    boxes = scene.boxes.copy()
    boxes[:, :6] *= factor
    return scene.replace(positions=scene.positions * factor, boxes=boxes)


def translate_scene(scene: Scene, offset: Sequence[float]) -> Scene:
    offset = np.asarray(offset, dtype=np.float64).reshape(3)
    boxes = scene.boxes.copy()
    boxes[:, :3] += offset
    return scene.replace(positions=scene.positions + offset, boxes=boxes)


class RandomFlip(MapFilter[Scene]):
    """
    Flips each scene with probability 1/2 independently along every configured axis.

    Parameters
    ----------
    axes : Iterable[str]
        the flip axes, a subset of ("x", "y")
    rng : np.random.Generator
        the random generator
    """

    def __init__(self, axes: Iterable[str], rng: np.random.Generator):
        self.__axes = tuple(axes)
        self.__rng = rng

    def apply(self, scene: Scene) -> Scene:
        for axis in self.__axes:
            if self.__rng.random() < 0.5:
                scene = flip_scene(scene, axis)
        return scene


class RandomRotation(MapFilter[Scene]):
    """Rotates by a yaw angle drawn uniformly from [-max_angle, max_angle]."""

    def __init__(self, max_angle: float, rng: np.random.Generator):
        self.__max_angle = max_angle
        self.__rng = rng

    def apply(self, scene: Scene) -> Scene:
        return rotate_scene(scene, self.__rng.uniform(-self.__max_angle, self.__max_angle))


class RandomScaling(MapFilter[Scene]):
    """Scales uniformly by a factor drawn from [low, high]."""

    def __init__(self, low: float, high: float, rng: np.random.Generator):
        if not 0 < low <= high:
            raise ValueError(f"Invalid scaling range [{low}, {high}]")
        self.__low = low
        self.__high = high
        self.__rng = rng

    def apply(self, scene: Scene) -> Scene:
        return scale_scene(scene, self.__rng.uniform(self.__low, self.__high))


class RandomTranslation(MapFilter[Scene]):
    """Translates by a Gaussian offset with per-axis standard deviation `std`."""

    def __init__(self, std: float, rng: np.random.Generator):
        self.__std = std
        self.__rng = rng

    def apply(self, scene: Scene) -> Scene:
        return translate_scene(scene, self.__rng.normal(0.0, self.__std, size=3))


class PointSubsample(MapFilter[Scene]):
    """Keeps a uniformly drawn subset of at most `n_points` points. Boxes are left unchanged."""

    def __init__(self, n_points: int, rng: np.random.Generator):
        if n_points < 1:
            raise ValueError(f"n_points must be >= 1, got {n_points}")
        self.__n_points = n_points
        self.__rng = rng

    def apply(self, scene: Scene) -> Scene:
        if scene.n_points <= self.__n_points:
            return scene
        keep = np.sort(self.__rng.choice(scene.n_points, size=self.__n_points, replace=False))
        return scene.replace(positions=scene.positions[keep], attributes=scene.attributes[keep])


@dataclass(frozen=True)
class AugmentConfig:
    """Switches and ranges of the global augmentations. Flip axes and subsampling come from the domain profile."""
    flip: bool = True
    rotation: float = np.pi / 36
    scaling: Sequence[float] = (0.95, 1.05)
    translation: float = 0.0
    subsample: bool = True


def augmentation(profile: DomainProfile, config: AugmentConfig, rng: np.random.Generator) -> Filter[Scene, Scene]:
    """Builds the augmentation filter chain of a domain."""
    filters: List[Filter[Scene, Scene]] = []
    if config.subsample and profile.subsample is not None:
        filters.append(PointSubsample(profile.subsample, rng))
    if config.flip and profile.flip_axes:
        filters.append(RandomFlip(profile.flip_axes, rng))
    if config.rotation > 0:
        filters.append(RandomRotation(config.rotation, rng))
    low, high = config.scaling
    if (low, high) != (1.0, 1.0):
        filters.append(RandomScaling(low, high, rng))
    if config.translation > 0:
        filters.append(RandomTranslation(config.translation, rng))

    chain: Filter[Scene, Scene] = IdentityFilter()
    for f in filters:
        chain = chain | f
    return chain


def augment(scene: Scene, profile: DomainProfile, rng: np.random.Generator,
            config: Optional[AugmentConfig] = None) -> Scene:
    """
    Applies the configured augmentations of `profile` to one scene.

    Parameters
    ----------
    scene : Scene
        the scene
    profile : DomainProfile
        the domain of the scene
    rng : np.random.Generator
        the random generator
    config : Optional[AugmentConfig]
        the augmentation switches
        default: AugmentConfig()

    Returns
    -------
    augment : Scene
        the augmented scene
    """
    chain = augmentation(profile, AugmentConfig() if config is None else config, rng)
    return next(iter(chain([scene])))
