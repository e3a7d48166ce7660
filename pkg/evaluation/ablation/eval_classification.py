"""
Design of the classification branch: class-specific sparse conv, trainable embeddings, frozen embeddings and the
dual branch. Run generate_corpora.py first.

For License information see the LICENSE file.

"""
import logging
import os
import sys

from jointdet.api.constants import CORPUS_DIRECTORY
from jointdet.plotting import APBarSink
from jointdet.preprocessing import read_manifest
from jointdet.training import AblationCase, AblationRunner, summarize

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

file = logging.FileHandler('eval_classification.log', 'w', 'utf-8')
file.setFormatter(f)

logging.basicConfig(handlers=[console, file], level=logging.INFO)

log = logging.getLogger(__name__)

BASE = ["backbone.channels=[16, 16]", "backbone.strides=[2, 2]", "epochs=10", "batch_size=4"]
SEEDS = [0, 1, 2]

train_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "train", "manifest.json"))
eval_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "eval", "manifest.json"))

outcomes = AblationRunner(AblationCase.named("classification", SEEDS, BASE), train_manifest, eval_manifest,
                          sinks=APBarSink(out_file="classification.png"), parallelism=4).run()
summarize(outcomes, 0.25)

for seed in SEEDS:
    per_seed = {o.setting: o.overall_mean_ap(0.25) for o in outcomes if o.seed == seed}
    dual, frozen = per_seed["dual"], per_seed["embedding-frozen"]
    log.info(f"Seed {seed}: dual {dual:.4f} vs frozen embeddings only {frozen:.4f} "
             f"({'ok' if dual >= frozen else 'below'})")
