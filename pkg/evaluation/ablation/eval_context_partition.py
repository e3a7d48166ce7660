"""
Placement of context partitioning: off, for every domain and for indoor domains only. Run generate_corpora.py first.

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

file = logging.FileHandler('eval_context_partition.log', 'w', 'utf-8')
file.setFormatter(f)

logging.basicConfig(handlers=[console, file], level=logging.INFO)

log = logging.getLogger(__name__)

BASE = ["backbone.channels=[16, 16]", "backbone.strides=[2, 2]", "epochs=10", "batch_size=4"]

train_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "train", "manifest.json"))
eval_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "eval", "manifest.json"))

outcomes = AblationRunner(AblationCase.named("context_partition", [0, 1, 2], BASE), train_manifest, eval_manifest,
                          sinks=APBarSink(out_file="context_partition.png"), held_out=True, parallelism=4).run()

for threshold in [0.25, 0.5]:
    summary = summarize(outcomes, threshold)
    best = max(summary, key=lambda setting: summary[setting]["overall"])
    log.info(f"AP@{threshold}: best placement {best}")
