"""
Domain router accuracy after a short joint training run, and detection on the held-out domains, where the router
mixes the partitioned parameters. Run generate_corpora.py first.

For License information see the LICENSE file.

"""
import logging
import os
import sys

from jointdet.api.constants import CORPUS_DIRECTORY, DATA_DIRECTORY, Protocol
from jointdet.evaluation import DetectionEvaluator, EvaluationCase, ModelDetector
from jointdet.plotting import APBarSink, LossCurveSink
from jointdet.preprocessing import read_manifest
from jointdet.training import JsonLinesSink, RunConfig, router_accuracy, train

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

file = logging.FileHandler('eval_router.log', 'w', 'utf-8')
file.setFormatter(f)

logging.basicConfig(handlers=[console, file], level=logging.INFO)

log = logging.getLogger(__name__)

train_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "train", "manifest.json"))
eval_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "eval", "manifest.json"))

config = RunConfig(output_dir=os.path.join(DATA_DIRECTORY, "router"), run_name="router").with_overrides(
    ["backbone.channels=[16, 16]", "backbone.strides=[2, 2]", "epochs=2", "batch_size=4"])
result = train(config, train_manifest, [JsonLinesSink(os.path.join(config.run_directory(), "losses.jsonl")),
                                        LossCurveSink(out_file="router_loss.png", component="router")])

model = result.model
scenes = [scene for profile in eval_manifest.profiles if not profile.held_out
          for scene in eval_manifest.load_corpus(profile.domain_id)]
accuracy = router_accuracy(model, scenes)
log.info(f"Router accuracy on {len(scenes)} evaluation scenes after {result.epochs} epochs: {accuracy:.4f}")

held_out = [(p, eval_manifest.load_corpus(p.domain_id)) for p in eval_manifest.profiles if p.held_out]
detector = ModelDetector(model, label="joint")
for protocol, indoor in [(Protocol.INDOOR, True), (Protocol.KITTI, False)]:
    corpora = [(profile, scenes) for profile, scenes in held_out if profile.indoor == indoor]
    if corpora:
        DetectionEvaluator(EvaluationCase(detector, corpora, protocol),
                           APBarSink(out_file=f"held_out_{protocol.value}.png"), parallelism=4).run()
