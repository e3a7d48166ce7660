"""
Scene files, corpus manifests and detection outputs.

A scene file holds the header `<magic><u32 version><u64 n_points><u32 attribute dim>` followed by little-endian
float64 positions and attributes. Its labels live in a JSON sidecar next to it (`<scene>.json`).

For License information see the LICENSE file.

"""
import json
import os
import struct
from dataclasses import dataclass
from logging import getLogger
from multiprocessing.pool import ThreadPool
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .pipeline import Sink, Source
from .synthetic import DomainProfile, Scene, generate_scene
from ..api.constants import FormatError, ConfigError, SCENE_MAGIC, SCENE_FORMAT_VERSION, MANIFEST_FORMAT_VERSION, \
    View
from ..geometry import OrientedBox3D

log = getLogger(__name__)

_HEADER = struct.Struct("<4sIQI")
_FLOAT = np.dtype("<f8")


def sidecar_path(filename: str) -> str:
    return os.path.splitext(filename)[0] + ".json"


def write_scene(scene: Scene, filename: str) -> None:
    """Writes a scene file and its JSON sidecar."""
    directory = os.path.dirname(filename)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(filename, "wb") as f:
        f.write(_HEADER.pack(SCENE_MAGIC, SCENE_FORMAT_VERSION, scene.n_points, scene.attributes.shape[1]))
        f.write(scene.positions.astype(_FLOAT).tobytes())
        f.write(scene.attributes.astype(_FLOAT).tobytes())
    labels = {"scene_id": scene.scene_id, "domain_id": scene.domain_id,
              "boxes": [{"class": name, "box": [float(v) for v in box]}
                        for name, box in zip(scene.class_names, scene.boxes)]}
    with open(sidecar_path(filename), "w") as f:
        json.dump(labels, f, indent=1)


def read_scene(filename: str) -> Scene:
    """Reads a scene written by `write_scene`. Malformed files raise a `FormatError` naming the offending field."""
    try:
        with open(filename, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise FormatError(f"{filename}: cannot read scene file ({e})")
    if len(raw) < _HEADER.size:
        raise FormatError(f"{filename}: header: truncated")
    magic, version, n_points, dim = _HEADER.unpack_from(raw)
    if magic != SCENE_MAGIC:
        raise FormatError(f"{filename}: magic: expected {SCENE_MAGIC!r}, got {magic!r}")
    if version != SCENE_FORMAT_VERSION:
        raise FormatError(f"{filename}: version: unsupported version {version}")
    expected = _HEADER.size + 8 * n_points * (3 + dim)
    if len(raw) != expected:
        raise FormatError(f"{filename}: payload: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype=_FLOAT, offset=_HEADER.size).astype(np.float64)
    positions = data[:3 * n_points].reshape(n_points, 3)
    attributes = data[3 * n_points:].reshape(n_points, dim)

    sidecar = sidecar_path(filename)
    try:
        with open(sidecar) as f:
            labels = json.load(f)
    except OSError as e:
        raise FormatError(f"{sidecar}: cannot read label sidecar ({e})")
    except json.JSONDecodeError as e:
        raise FormatError(f"{sidecar}: line {e.lineno}: {e.msg}")
    try:
        boxes = [entry["box"] for entry in labels["boxes"]]
        names = [str(entry["class"]) for entry in labels["boxes"]]
        scene_id, domain_id = str(labels["scene_id"]), int(labels["domain_id"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{sidecar}: missing or invalid field {e}")
    if any(len(box) != 7 for box in boxes):
        raise FormatError(f"{sidecar}: boxes: every box needs 7 values")
    return Scene(scene_id, domain_id, positions, attributes, np.array(boxes, dtype=np.float64).reshape(-1, 7),
                 tuple(names))


@dataclass(frozen=True)
class CorpusManifest:
    """
    The domains of a corpus and the scene files of every domain. Scene paths are relative to `root`.
    """
    root: str
    profiles: Tuple[DomainProfile, ...]
    scenes: Mapping[int, Tuple[str, ...]]

    @property
    def n_domains(self) -> int:
        return len(self.profiles)

    def profile(self, domain_id: int) -> DomainProfile:
        for profile in self.profiles:
            if profile.domain_id == domain_id:
                return profile
        raise ConfigError(f"Unknown domain id {domain_id}")

    def label_union(self) -> List[str]:
        """The union of all label spaces in first-seen order. Its length is the number of classes K."""
        names: List[str] = []
        for profile in self.profiles:
            names.extend(name for name in profile.label_space if name not in names)
        return names

    def scene_paths(self, domain_id: int) -> List[str]:
        return [os.path.join(self.root, path) for path in self.scenes.get(domain_id, ())]

    def load_corpus(self, domain_id: int) -> List[Scene]:
        return [read_scene(path) for path in self.scene_paths(domain_id)]

    def n_scenes(self) -> int:
        return sum(len(paths) for paths in self.scenes.values())

    def to_dict(self) -> Dict:
        return {"format_version": MANIFEST_FORMAT_VERSION,
                "domains": [profile.to_dict() for profile in self.profiles],
                "scenes": {str(d): list(paths) for d, paths in sorted(self.scenes.items())}}


def write_manifest(manifest: CorpusManifest, filename: str) -> None:
    with open(filename, "w") as f:
        json.dump(manifest.to_dict(), f, indent=1)


_REQUIRED_DOMAIN_FIELDS = ("domain_id", "name", "indoor", "range_min", "range_max", "label_space", "class_sizes",
                           "voxel_size")


def _check_domain(values, where: str) -> DomainProfile:
    if not isinstance(values, dict):
        raise FormatError(f"{where}: must be an object")
    for name in _REQUIRED_DOMAIN_FIELDS:
        if name not in values:
            raise FormatError(f"{where}.{name}: missing")
    for name in ("range_min", "range_max"):
        if not isinstance(values[name], list) or len(values[name]) != 3:
            raise FormatError(f"{where}.{name}: must be a list of 3 numbers")
    if not isinstance(values["voxel_size"], (int, float)) or values["voxel_size"] <= 0:
        raise FormatError(f"{where}.voxel_size: must be > 0")
    if not isinstance(values["label_space"], list) or len(values["label_space"]) == 0:
        raise FormatError(f"{where}.label_space: must be a non-empty list")
    if "view" in values and values["view"] not in [v.value for v in View]:
        raise FormatError(f"{where}.view: must be one of {[v.value for v in View]}")
    try:
        profile = DomainProfile.from_dict(values)
        profile.validate()
    except (ConfigError, KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{where}: {e}")
    return profile


def read_manifest(filename: str) -> CorpusManifest:
    """
    Reads and validates a corpus manifest.

    Parameters
    ----------
    filename : str
        the manifest path

    Returns
    -------
    read_manifest : CorpusManifest
        the manifest, with scene paths relative to the manifest directory
    """
    try:
        with open(filename) as f:
            values = json.load(f)
    except OSError as e:
        raise FormatError(f"{filename}: cannot read manifest ({e})")
    except json.JSONDecodeError as e:
        raise FormatError(f"{filename}: line {e.lineno}: {e.msg}")
    if not isinstance(values, dict):
        raise FormatError(f"{filename}: top level must be an object")
    if values.get("format_version") != MANIFEST_FORMAT_VERSION:
        raise FormatError(f"{filename}: format_version: expected {MANIFEST_FORMAT_VERSION}, "
                          f"got {values.get('format_version')}")
    if not isinstance(values.get("domains"), list):
        raise FormatError(f"{filename}: domains: must be a list")

    profiles = []
    for i, domain in enumerate(values["domains"]):
        profile = _check_domain(domain, f"{filename}: domains[{i}]")
        if any(p.domain_id == profile.domain_id for p in profiles):
            raise FormatError(f"{filename}: domains[{i}].domain_id: duplicate id {profile.domain_id}")
        profiles.append(profile)

    scenes = values.get("scenes", {})
    if not isinstance(scenes, dict):
        raise FormatError(f"{filename}: scenes: must be an object")
    known = {p.domain_id for p in profiles}
    parsed = {}
    for key, paths in scenes.items():
        try:
            domain_id = int(key)
        except ValueError:
            raise FormatError(f"{filename}: scenes.{key}: not a domain id")
        if domain_id not in known:
            raise FormatError(f"{filename}: scenes.{key}: unknown domain")
        if not isinstance(paths, list) or not all(isinstance(p, str) for p in paths):
            raise FormatError(f"{filename}: scenes.{key}: must be a list of paths")
        parsed[domain_id] = tuple(paths)
    return CorpusManifest(os.path.dirname(os.path.abspath(filename)), tuple(profiles), parsed)


class SceneFileSource(Source[Scene]):
    """Reads the scenes of the given files in order."""

    def __init__(self, filenames: Iterable[str]):
        self.__filenames = list(filenames)

    def elements(self) -> Iterator[Scene]:
        for filename in self.__filenames:
            yield read_scene(filename)


class SceneFileWriter(Sink[Scene]):
    """Writes every scene to `<directory>/<scene id>.bin` and remembers the written paths."""

    def __init__(self, directory: str):
        self.__directory = directory
        self.__written: List[str] = []

    def run(self, source: Iterable[Scene]) -> None:
        for scene in source:
            path = os.path.join(self.__directory, f"{scene.scene_id}.bin")
            write_scene(scene, path)
            self.__written.append(path)

    def written(self) -> List[str]:
        return self.__written


def generate_corpus(profiles: Sequence[DomainProfile], directory: str, seed: int, n_scenes: int,
                    workers: int = 1) -> CorpusManifest:
    """
    Generates `n_scenes` scenes per profile below `directory` and writes `manifest.json` there. Scenes are generated
    by a thread pool; the manifest lists them in index order.

    Parameters
    ----------
    profiles : Sequence[DomainProfile]
        the domains
    directory : str
        the output directory
    seed : int
        the corpus seed
    n_scenes : int
        the number of scenes per domain
    workers : int
        the number of generator threads
        default: 1

    Returns
    -------
    generate_corpus : CorpusManifest
        the written manifest
    """
    if n_scenes < 0:
        raise ConfigError(f"n_scenes must be >= 0, got {n_scenes}")
    ids = [p.domain_id for p in profiles]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"Duplicate domain ids {ids}")
    for profile in profiles:
        profile.validate()

    def _generate(job: Tuple[DomainProfile, int]) -> str:
        profile, index = job
        scene = generate_scene(profile, seed, index)
        relative = os.path.join(profile.name, f"{scene.scene_id}.bin")
        write_scene(scene, os.path.join(directory, relative))
        return relative

    jobs = [(profile, index) for profile in profiles for index in range(n_scenes)]
    os.makedirs(directory, exist_ok=True)
    with ThreadPool(processes=max(1, workers)) as pool:
        written = pool.map(_generate, jobs)

    scenes = {p.domain_id: tuple(written[i * n_scenes:(i + 1) * n_scenes]) for i, p in enumerate(profiles)}
    manifest = CorpusManifest(os.path.abspath(directory), tuple(profiles), scenes)
    write_manifest(manifest, os.path.join(directory, "manifest.json"))
    log.info(f"Generated {len(jobs)} scenes of {len(profiles)} domains in {directory}")
    return manifest


def write_detections(records: Iterable[Mapping], filename: str) -> None:
    """Writes detection records (`scene_id`, `class`, `score`, `box`) as JSON lines."""
    with open(filename, "w") as f:
        for record in records:
            f.write(json.dumps(dict(record)) + "\n")


def read_detections(filename: str) -> List[Dict]:
    records = []
    with open(filename) as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise FormatError(f"{filename}: line {number}: {e.msg}")
    return records


_BOX_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7))


def write_ply_wireframes(boxes: np.ndarray, filename: str) -> None:
    """Writes (M, 7) boxes as an ASCII PLY file with 8 vertices and 12 edges per box."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 7)
    corners = [OrientedBox3D.from_array(box).corners() for box in boxes]
    with open(filename, "w") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {8 * len(corners)}\nproperty double x\nproperty double y\nproperty double z\n")
        f.write(f"element edge {12 * len(corners)}\nproperty int vertex1\nproperty int vertex2\nend_header\n")
        for box_corners in corners:
            for x, y, z in box_corners:
                f.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
        for i in range(len(corners)):
            for a, b in _BOX_EDGES:
                f.write(f"{8 * i + a} {8 * i + b}\n")
