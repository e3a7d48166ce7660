"""
Interference between domains: joint training with fully shared normalization, with scatter partitioning and with
scatter and context partitioning, against one single-domain model per training domain. Run generate_corpora.py
first.

For License information see the LICENSE file.

"""
import logging
import os
import sys

from jointdet.api.constants import CORPUS_DIRECTORY
from jointdet.evaluation import merge_reports
from jointdet.plotting import APBarSink
from jointdet.preprocessing import read_manifest
from jointdet.training import ABLATIONS, AblationCase, AblationRunner, summarize

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

file = logging.FileHandler('eval_partitioning.log', 'w', 'utf-8')
file.setFormatter(f)

logging.basicConfig(handlers=[console, file], level=logging.INFO)

log = logging.getLogger(__name__)

BASE = ["backbone.channels=[16, 16]", "backbone.strides=[2, 2]", "epochs=10", "batch_size=4"]
SEEDS = [0, 1, 2]

train_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "train", "manifest.json"))
eval_manifest = read_manifest(os.path.join(CORPUS_DIRECTORY, "eval", "manifest.json"))
domains = [p for p in train_manifest.profiles if not p.held_out]

# Joint training
joint = AblationRunner(AblationCase("partitioning", ABLATIONS["partitioning"], SEEDS, BASE, thresholds=[0.25]),
                       train_manifest, eval_manifest, sinks=APBarSink(out_file="partitioning_ap25.png"),
                       parallelism=4).run()
joint_summary = summarize(joint, 0.25)

# One model per domain
single = AblationRunner(AblationCase("single_domain", {p.name: (f"domains=[{p.domain_id}]",) for p in domains}, SEEDS,
                                     BASE, thresholds=[0.25]),
                        train_manifest, eval_manifest, sinks=APBarSink(out_file="single_domain_ap25.png"),
                        parallelism=4).run()

# the single-domain reports of a seed form one report over all domains
single_reports = {seed: merge_reports([o.report for o in single if o.seed == seed and o.report is not None],
                                      detector="single-domain")
                  for seed in SEEDS}
single_ap = {p.name: sum(single_reports[seed].mean_ap(p.name, 0.25) for seed in SEEDS) / len(SEEDS)
             for p in domains}
log.info("single-domain: " + ", ".join(f"{name} {value:.4f}" for name, value in single_ap.items()))

partitioned = joint_summary["scatter+context"]
shared = joint_summary["shared"]
above_shared = [p.name for p in domains if partitioned[p.name] > shared[p.name]]
above_single = [p.name for p in domains if partitioned[p.name] >= single_ap[p.name]]
log.info(f"Partitioned joint training beats shared normalization on {above_shared} "
         f"({len(above_shared)} of {len(domains)} domains)")
log.info(f"Partitioned joint training matches single-domain training on {above_single} "
         f"({len(above_single)} of {len(domains)} domains)")
