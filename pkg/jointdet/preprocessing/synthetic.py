"""
Synthetic multi-domain corpora. Every `DomainProfile` mimics the range, view and sparsity of one benchmark style:
objects are cuboid shells sampled on their surfaces (with a share of interior points), the background is a ground
plane plus uniform clutter over the profile range. Object sizes are synthetic choices, not measured statistics.

For License information see the LICENSE file.

"""
from dataclasses import dataclass, field
from logging import getLogger
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple
from zlib import crc32

import numpy as np

from .pipeline import Source
from ..api.constants import View, ConfigError, INDOOR_VOXEL_SIZE, OUTDOOR_VOXEL_SIZE
from ..geometry import bev_corners, pairwise_iou, normalize_yaw
from ..api.constants import IoUKind

log = getLogger(__name__)

FRONT_VIEW_YAW: float = np.pi / 4


@dataclass(frozen=True)
class Scene:
    """
    A point cloud with its ground truth: (P, 3) positions, (P, D) attributes, (G, 7) boxes and the class name of each
    box.
    """
    scene_id: str
    domain_id: int
    positions: np.ndarray
    attributes: np.ndarray
    boxes: np.ndarray
    class_names: Tuple[str, ...]

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        attributes = np.asarray(self.attributes, dtype=np.float64).reshape(positions.shape[0], -1)
        boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 7)
        if len(self.class_names) != boxes.shape[0]:
            raise ValueError(f"Scene {self.scene_id}: {boxes.shape[0]} boxes but {len(self.class_names)} names")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "attributes", attributes)
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_points(self) -> int:
        return self.positions.shape[0]

    def replace(self, positions: Optional[np.ndarray] = None, attributes: Optional[np.ndarray] = None,
                boxes: Optional[np.ndarray] = None) -> 'Scene':
        return Scene(self.scene_id, self.domain_id, self.positions if positions is None else positions,
                     self.attributes if attributes is None else attributes, self.boxes if boxes is None else boxes,
                     self.class_names)

    def equals(self, other: 'Scene') -> bool:
        """Bitwise equality of all fields."""
        return self.scene_id == other.scene_id and self.domain_id == other.domain_id and \
            self.class_names == other.class_names and np.array_equal(self.positions, other.positions) and \
            np.array_equal(self.attributes, other.attributes) and np.array_equal(self.boxes, other.boxes)


@dataclass(frozen=True)
class DomainProfile:
    """
    Metadata and generator parameters of one domain.

    `class_sizes` holds the mean (length, width, height) of every generated class; classes missing from
    `label_space` must be mapped onto it by `class_aliases`. `points` and `objects` are inclusive (min, max) ranges
    of the background point count and of the object count of a scene.
    """
    domain_id: int
    name: str
    indoor: bool
    range_min: Tuple[float, float, float]
    range_max: Tuple[float, float, float]
    label_space: Tuple[str, ...]
    class_sizes: Mapping[str, Tuple[float, float, float]]
    voxel_size: float
    view: View = View.FULL
    ground_z: Optional[float] = None
    points: Tuple[int, int] = (1500, 2500)
    objects: Tuple[int, int] = (1, 3)
    points_per_object: int = 300
    interior_fraction: float = 0.1
    size_jitter: float = 0.1
    native_attributes: int = 6
    flip_axes: Tuple[str, ...] = ("x",)
    subsample: Optional[int] = None
    class_aliases: Mapping[str, str] = field(default_factory=dict)
    held_out: bool = False

    def validate(self) -> None:
        low, high = np.asarray(self.range_min, dtype=np.float64), np.asarray(self.range_max, dtype=np.float64)
        if low.shape != (3,) or high.shape != (3,) or np.any(low >= high):
            raise ConfigError(f"Domain {self.name}: range min {self.range_min} must be below max {self.range_max}")
        if self.voxel_size <= 0:
            raise ConfigError(f"Domain {self.name}: voxel_size must be > 0, got {self.voxel_size}")
        if len(self.label_space) == 0:
            raise ConfigError(f"Domain {self.name}: label space is empty")
        for name in self.class_sizes:
            if self.resolve(name) not in self.label_space:
                raise ConfigError(f"Domain {self.name}: class {name} is not in the label space")
        if self.native_attributes not in (1, 2, 3, 6):
            raise ConfigError(f"Domain {self.name}: native_attributes must divide 6, got {self.native_attributes}")
        if not self.objects[0] <= self.objects[1] or not self.points[0] <= self.points[1]:
            raise ConfigError(f"Domain {self.name}: invalid count ranges {self.objects}, {self.points}")

    def resolve(self, name: str) -> str:
        return self.class_aliases.get(name, name)

    def effective_range(self) -> Tuple[np.ndarray, np.ndarray]:
        """The generation range; front-view profiles are restricted to the positive-x half-space."""
        low = np.array(self.range_min, dtype=np.float64)
        high = np.array(self.range_max, dtype=np.float64)
        if self.view == View.FRONT:
            low[0] = max(low[0], 0.0)
        return low, high

    def ground(self) -> float:
        return self.range_min[2] if self.ground_z is None else self.ground_z

    def to_dict(self) -> Dict:
        return {"domain_id": self.domain_id, "name": self.name, "indoor": self.indoor,
                "range_min": list(self.range_min), "range_max": list(self.range_max),
                "label_space": list(self.label_space),
                "class_sizes": {k: list(v) for k, v in self.class_sizes.items()}, "voxel_size": self.voxel_size,
                "view": self.view.value, "ground_z": self.ground_z, "points": list(self.points),
                "objects": list(self.objects), "points_per_object": self.points_per_object,
                "interior_fraction": self.interior_fraction, "size_jitter": self.size_jitter,
                "native_attributes": self.native_attributes, "flip_axes": list(self.flip_axes),
                "subsample": self.subsample, "class_aliases": dict(self.class_aliases), "held_out": self.held_out}

    @classmethod
    def from_dict(cls, values: Mapping) -> 'DomainProfile':
        return cls(int(values["domain_id"]), str(values["name"]), bool(values["indoor"]),
                   tuple(values["range_min"]), tuple(values["range_max"]), tuple(values["label_space"]),
                   {k: tuple(v) for k, v in values["class_sizes"].items()}, float(values["voxel_size"]),
                   View(values.get("view", View.FULL.value)), values.get("ground_z"),
                   tuple(values.get("points", (1500, 2500))), tuple(values.get("objects", (1, 3))),
                   int(values.get("points_per_object", 300)), float(values.get("interior_fraction", 0.1)),
                   float(values.get("size_jitter", 0.1)), int(values.get("native_attributes", 6)),
                   tuple(values.get("flip_axes", ("x",))), values.get("subsample"),
                   dict(values.get("class_aliases", {})), bool(values.get("held_out", False)))


def default_profiles() -> List[DomainProfile]:
    """
    Six profiles modeled on the ranges and views of common indoor and outdoor benchmarks. The S3DIS-like and
    Waymo-like profiles are held out for cross-domain evaluation.
    """
    indoor_sizes = {"chair": (0.6, 0.6, 0.9), "table": (1.2, 0.8, 0.75), "bed": (2.0, 1.5, 0.9),
                    "sofa": (1.9, 0.9, 0.8)}
    scan_sizes = {"chair": (0.6, 0.6, 0.9), "table": (1.2, 0.8, 0.75), "cabinet": (1.0, 0.5, 1.2),
                  "door": (0.9, 0.2, 2.0)}
    office_sizes = {"chair": (0.6, 0.6, 0.9), "table": (1.4, 0.8, 0.75), "bookcase": (1.0, 0.4, 1.8)}
    return [
        DomainProfile(0, "sunrgbd-like", True, (-3.2, -0.2, -2.0), (3.2, 6.2, 0.56),
                      ("chair", "table", "bed", "sofa"), indoor_sizes, INDOOR_VOXEL_SIZE, View.FRONT,
                      flip_axes=("x",), subsample=10000),
        DomainProfile(1, "scannet-like", True, (-6.4, -6.4, -0.1), (6.4, 6.4, 2.46),
                      ("chair", "table", "cabinet", "door"), scan_sizes, INDOOR_VOXEL_SIZE, View.FULL, ground_z=0.0,
                      points=(2500, 3500), objects=(2, 4), flip_axes=("x", "y"), subsample=10000),
        DomainProfile(2, "kitti-like", False, (0.0, -40.0, -3.0), (70.4, 40.0, 1.0),
                      ("car", "pedestrian", "cyclist"),
                      {"car": (3.9, 1.6, 1.56), "van": (5.0, 1.9, 2.1), "pedestrian": (0.8, 0.6, 1.73),
                       "cyclist": (1.76, 0.6, 1.73)},
                      OUTDOOR_VOXEL_SIZE, View.FRONT, ground_z=-1.73, points=(2000, 3000), objects=(2, 5),
                      native_attributes=3, flip_axes=("x",), subsample=18000, class_aliases={"van": "car"}),
        DomainProfile(3, "nuscenes-like", False, (-51.2, -51.2, -5.0), (51.2, 51.2, 3.0),
                      ("car", "truck", "pedestrian", "barrier"),
                      {"car": (4.6, 1.9, 1.7), "truck": (6.9, 2.5, 2.8), "pedestrian": (0.7, 0.7, 1.8),
                       "barrier": (2.5, 0.5, 1.0)},
                      OUTDOOR_VOXEL_SIZE, View.FULL, ground_z=-1.8, points=(2500, 3500), objects=(3, 6),
                      native_attributes=3, flip_axes=("x", "y")),
        DomainProfile(4, "s3dis-like", True, (-9.6, -9.6, 0.0), (9.6, 9.6, 4.8),
                      ("chair", "table", "bookcase"), office_sizes, INDOOR_VOXEL_SIZE, View.FULL, ground_z=0.0,
                      points=(3000, 4000), objects=(2, 4), flip_axes=("x", "y"), held_out=True),
        DomainProfile(5, "waymo-like", False, (-75.2, -75.2, -2.0), (75.2, 75.2, 4.0),
                      ("car", "pedestrian", "cyclist"),
                      {"car": (4.8, 2.1, 1.8), "pedestrian": (0.9, 0.9, 1.75), "cyclist": (1.8, 0.8, 1.75)},
                      OUTDOOR_VOXEL_SIZE, View.FULL, ground_z=0.0, points=(3000, 4000), objects=(3, 6),
                      native_attributes=3, flip_axes=("x", "y"), held_out=True),
    ]


def class_intensity(name: str) -> float:
    """A fixed per-class reflectance level in [0.4, 1.0]."""
    return 0.4 + 0.6 * (crc32(name.encode("utf-8")) % 1000) / 999


def _surface_points(rng: np.random.Generator, dims: np.ndarray, n: int,
                    interior_fraction: float) -> Tuple[np.ndarray, np.ndarray]:
    # points in the box frame with their outward unit normals (zero normal for interior points)
    half = dims / 2
    n_interior = int(round(n * interior_fraction))
    n_surface = n - n_interior
    areas = np.array([dims[1] * dims[2], dims[0] * dims[2], dims[0] * dims[1]])
    axes = rng.choice(3, size=n_surface, p=np.repeat(areas, 1) / areas.sum())
    signs = rng.choice([-1.0, 1.0], size=n_surface)
    local = rng.uniform(-half, half, size=(n_surface, 3))
    local[np.arange(n_surface), axes] = signs * half[axes]
    normals = np.zeros((n_surface, 3))
    normals[np.arange(n_surface), axes] = signs
    interior = rng.uniform(-half, half, size=(n_interior, 3))
    return np.vstack([local, interior]), np.vstack([normals, np.zeros((n_interior, 3))])


def _attributes(intensity: np.ndarray, normals: np.ndarray, dim: int) -> np.ndarray:
    full = np.column_stack([intensity, normals, np.zeros((intensity.size, 2))])
    if dim == 6:
        return full
    # lidar-style profiles carry (intensity, vertical normal component, 0)
    compact = np.column_stack([intensity, normals[:, 2], np.zeros(intensity.size)])
    return compact[:, :dim]


def _sample_boxes(profile: DomainProfile, rng: np.random.Generator) -> Tuple[np.ndarray, List[str]]:
    low, high = profile.effective_range()
    names = sorted(profile.class_sizes)
    k = int(rng.integers(profile.objects[0], profile.objects[1] + 1))
    boxes, labels = [], []
    for _ in range(k):
        for _ in range(100):
            name = names[int(rng.integers(len(names)))]
            dims = np.asarray(profile.class_sizes[name]) * rng.uniform(1 - profile.size_jitter,
                                                                        1 + profile.size_jitter, size=3)
            if profile.view == View.FRONT:
                yaw = rng.uniform(-FRONT_VIEW_YAW, FRONT_VIEW_YAW)
            else:
                yaw = rng.uniform(-np.pi, np.pi)
            margin = np.hypot(dims[0], dims[1]) / 2
            if np.any(high[:2] - low[:2] <= 2 * margin):
                break
            center_xy = rng.uniform(low[:2] + margin, high[:2] - margin)
            center_z = min(profile.ground() + dims[2] / 2, high[2] - dims[2] / 2)
            box = np.array([center_xy[0], center_xy[1], center_z, *dims, float(normalize_yaw(yaw))])
            if boxes and np.any(pairwise_iou(box[None], np.array(boxes), IoUKind.BEV) > 0):
                continue
            boxes.append(box)
            labels.append(profile.resolve(name))
            break
    return np.array(boxes).reshape(-1, 7), labels


def generate_scene(profile: DomainProfile, seed: int, index: int = 0) -> Scene:
    """
    Generates a synthetic scene of `profile`. The result is a deterministic function of (profile, seed, index).

    Parameters
    ----------
    profile : DomainProfile
        the domain to generate for
    seed : int
        the corpus seed
    index : int
        the index of the scene within the corpus
        default: 0

    Returns
    -------
    generate_scene : Scene
        the scene
    """
    profile.validate()
    low, high = profile.effective_range()
    for name, size in profile.class_sizes.items():
        dims = np.asarray(size) * (1 + profile.size_jitter)
        if np.hypot(dims[0], dims[1]) >= np.min(high[:2] - low[:2]) or dims[2] > high[2] - low[2]:
            raise ConfigError(f"Domain {profile.name}: class {name} of size {tuple(size)} does not fit the range")

    rng = np.random.default_rng([seed, profile.domain_id, index])
    boxes, labels = _sample_boxes(profile, rng)

    positions, normals, intensity = [], [], []
    for box, label in zip(boxes, labels):
        local, local_normals = _surface_points(rng, box[3:6], profile.points_per_object, profile.interior_fraction)
        c, s = np.cos(box[6]), np.sin(box[6])
        rotation = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        positions.append(local @ rotation.T + box[:3])
        normals.append(local_normals @ rotation.T)
        intensity.append(np.clip(class_intensity(label) + rng.normal(0, 0.05, size=local.shape[0]), 0, 1))

    n_background = int(rng.integers(profile.points[0], profile.points[1] + 1))
    n_ground = n_background // 2
    ground = rng.uniform(low, high, size=(n_ground, 3))
    ground[:, 2] = np.clip(profile.ground() + rng.normal(0, 0.02, size=n_ground), low[2], high[2])
    clutter = rng.uniform(low, high, size=(n_background - n_ground, 3))
    positions += [ground, clutter]
    normals += [np.tile([0.0, 0.0, 1.0], (n_ground, 1)), np.zeros((clutter.shape[0], 3))]
    intensity += [rng.uniform(0.0, 0.3, size=n_ground), rng.uniform(0.0, 0.3, size=clutter.shape[0])]

    positions = np.clip(np.vstack(positions), low, high)
    attributes = _attributes(np.concatenate(intensity), np.vstack(normals), profile.native_attributes)
    return Scene(f"{profile.name}-{seed}-{index:05d}", profile.domain_id, positions, attributes, boxes,
                 tuple(labels))


class SyntheticSceneSource(Source[Scene]):
    """
    Yields `n_scenes` generated scenes of a profile. The source can be iterated repeatedly.

    Parameters
    ----------
    profile : DomainProfile
        the domain
    seed : int
        the corpus seed
    n_scenes : int
        the number of scenes
    """

    def __init__(self, profile: DomainProfile, seed: int, n_scenes: int):
        self.__profile = profile
        self.__seed = seed
        self.__n_scenes = n_scenes

    def elements(self) -> Iterator[Scene]:
        for index in range(self.__n_scenes):
            yield generate_scene(self.__profile, self.__seed, index)


def profiles_by_name(profiles: Sequence[DomainProfile]) -> Dict[str, DomainProfile]:
    return {profile.name: profile for profile in profiles}
