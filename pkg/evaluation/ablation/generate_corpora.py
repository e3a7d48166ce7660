"""
Generates the training and evaluation corpora of the ablation scripts once. Both use the default domain profiles;
the evaluation corpus is drawn with another seed.

For License information see the LICENSE file.

"""
import logging
import os
import sys

from jointdet.api.constants import CORPUS_DIRECTORY
from jointdet.preprocessing import default_profiles, generate_corpus

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

file = logging.FileHandler('generate_corpora.log', 'w', 'utf-8')
file.setFormatter(f)

logging.basicConfig(handlers=[console, file], level=logging.INFO)

log = logging.getLogger(__name__)

profiles = default_profiles()

for name, seed, scenes in [("train", 0, 50), ("eval", 1, 20)]:
    directory = os.path.join(CORPUS_DIRECTORY, name)
    manifest = generate_corpus(profiles, directory, seed, scenes, workers=4)
    log.info(f"Corpus {name}: {manifest.n_scenes()} scenes of {[p.name for p in manifest.profiles]}")
