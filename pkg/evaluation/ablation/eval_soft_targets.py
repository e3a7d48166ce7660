"""
Classification loss: the hard-target focal loss against soft targets from the BEV IoU, the 3D IoU and the
decoupled IoU. Hard-target runs may diverge, which is recorded as an outcome. Run generate_corpora.py first.

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

file = logging.FileHandler('eval_soft_targets.log', 'w', 'utf-8')
file.setFormatter(f)

logging.basicConfig(handlers=[console, file], level=logging.INFO)

log = logging.getLogger(__name__)

BASE = ["backbone.channels=[16, 16]", "backbone.strides=[2, 2]", "epochs=10", "batch_size=4",
        "divergence_window=40"]
SEEDS = [0, 1, 2]

train_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "train", "manifest.json"))
eval_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "eval", "manifest.json"))

outcomes = AblationRunner(AblationCase.named("soft_target", SEEDS, BASE), train_manifest, eval_manifest,
                          sinks=APBarSink(out_file="soft_targets.png"), parallelism=4).run()
summarize(outcomes, 0.25)

diverged = [o.seed for o in outcomes if o.setting == "hard" and o.diverged]
log.info(f"Hard-target focal loss diverged on seeds {diverged}")
for seed in SEEDS:
    per_seed = {o.setting: o.overall_mean_ap(0.25) for o in outcomes if o.seed == seed}
    log.info(f"Seed {seed}: best target {max(per_seed, key=per_seed.get)}, "
             + ", ".join(f"{setting} {ap:.4f}" for setting, ap in per_seed.items()))
