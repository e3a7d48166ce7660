"""
For License information see the LICENSE file.

"""
import logging
import os
import sys

import numpy as np

from jointdet.api.constants import Protocol
from jointdet.evaluation import DetectionEvaluator, EvaluationCase, ModelDetector, OracleDetector
from jointdet.gradsuite import run_suite
from jointdet.model import load_model
from jointdet.plotting import APBarSink, LossCurveSink
from jointdet.preprocessing import AugmentConfig, CollectingSink, DomainProfile, Preprocessor, RandomFlip, \
    RandomRotation, SceneFileWriter, SyntheticSceneSource, augmentation, default_profiles, generate_corpus, \
    generate_scene, write_detections, write_ply_wireframes
from jointdet.training import JsonLinesSink, RunConfig, router_accuracy, train

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

file = logging.FileHandler('examples.log', 'w', 'utf-8')
file.setFormatter(f)

logging.basicConfig(handlers=[console, file], level=logging.INFO)

log = logging.getLogger(__name__)

"""
This file gives a brief overview of jointdet: synthetic corpora, joint training of one detector on several domains,
evaluation and inference. The evaluation/ scripts run the full ablations.
"""

# ----- 1: Synthetic data -----#

###### DOMAINS ######
# A domain is described by a DomainProfile: its spatial range, label space, voxel size, object sizes and point
# density. default_profiles() ships four training domains (two indoor, two outdoor) and two held-out ones.
# For a quick start we pair a small indoor profile with the KITTI-like one.
profiles = default_profiles()
room = DomainProfile(0, "room", True, (-3.0, -3.0, 0.0), (3.0, 3.0, 2.5), ("chair", "table"),
                     {"chair": (0.6, 0.6, 0.9), "table": (1.2, 0.8, 0.75)}, 0.05, points=(300, 500),
                     objects=(1, 3), points_per_object=120)
street = profiles[2]

###### PRE-PROCESSING ######
# Scenes flow through pipelines of Sources, Filters and Sinks. A filter chain `a | b` is attached to a sink
# with `>`, a Preprocessor feeds one source into several sinks.
rng = np.random.default_rng(0)
collected = CollectingSink()
Preprocessor(SyntheticSceneSource(room, seed=0, n_scenes=4),
             [RandomFlip(room.flip_axes, rng) | RandomRotation(np.pi / 36, rng) > collected,
              SceneFileWriter("data/examples/raw")]).run()
log.info(f"Augmented {len(collected.elements())} scenes")

# The augmentation chain used during training is built from the profile and an AugmentConfig:
chain = augmentation(street, AugmentConfig(translation=0.2), rng)
street_scenes = list(chain(SyntheticSceneSource(street, seed=0, n_scenes=2)))
log.info(f"Augmented street scenes keep {[s.n_points for s in street_scenes]} points")

# Training reads corpora through a manifest. generate_corpus writes the scenes and manifest.json in one go.
manifest = generate_corpus([room, street], "data/examples/corpus", seed=0, n_scenes=12, workers=2)

# ----- 2: Training -----#

# A run is configured by a RunConfig; every field can be overridden with "dotted.key=value" strings, just like
# `python -m jointdet train --set key=value`.
config = RunConfig(output_dir="data/examples/runs", run_name="quickstart").with_overrides(
    ["backbone.channels=[16, 16]", "backbone.strides=[2, 2]", "epochs=3", "batch_size=4"])

# Every step's loss breakdown is offered to data sinks, here a JSON lines log and a loss curve.
result = train(config, manifest, [JsonLinesSink(os.path.join(config.run_directory(), "losses.jsonl")),
                                  LossCurveSink(out_file="quickstart_loss.png")])
log.info(f"Training {result.outcome} after {result.steps} steps, checkpoints {result.checkpoints}")

# The domain router learns to tell the domains apart:
scenes = manifest.load_corpus(room.domain_id) + manifest.load_corpus(street.domain_id)
log.info(f"Router accuracy {router_accuracy(result.model, scenes):.3f}")

# ----- 3: Evaluation -----#

# An EvaluationCase pairs detectors with corpora and a protocol. The oracle echoes the ground truth and marks the
# upper bound. Mean APs are offered to the sinks, APBarSink plots them.
model, meta = load_model(result.checkpoints[-1])
case = EvaluationCase([OracleDetector(), ModelDetector(model, label="quickstart")],
                      [(room, manifest.load_corpus(room.domain_id))], Protocol.INDOOR)
reports = DetectionEvaluator(case, APBarSink(out_file="quickstart_ap.png"), parallelism=2).run()
for report in reports:
    report.write_json(f"data/examples/{report.detector}.json")

# Outdoor domains use the KITTI-style protocol (IoU 0.7, 40 recall positions, 3D and BEV IoU):
case = EvaluationCase(ModelDetector(model, label="quickstart"), [(street, manifest.load_corpus(street.domain_id))],
                      Protocol.KITTI)
DetectionEvaluator(case, []).run()[0].write_csv("data/examples/quickstart_kitti.csv")

# ----- 4: Inference -----#

# Scenes of training domains are voxelized with the voxel size of their domain.
scene = collected.elements()[0]
detections = model.predict(scene, score_threshold=0.3)
write_detections(({"scene_id": scene.scene_id, "class": model.class_names[d.label], "score": d.score,
                   "box": d.box.to_array().tolist()} for d in detections), "data/examples/detections.jsonl")
write_ply_wireframes([d.box.to_array() for d in detections], "data/examples/detections.ply")
# Scenes of other domains need a voxel size; the router then mixes the domain parameters.
held_out = profiles[4]
unseen = generate_scene(held_out, seed=0, index=0)
log.info(f"{len(model.predict(unseen, voxel_size=held_out.voxel_size))} detections in a {held_out.name} scene")

# ----- 5: Gradient checks -----#

# Every custom backward rule is checked against central finite differences:
for name, error in run_suite(points=2).items():
    log.info(f"{name}: {error:.2e}")
