"""
For License information see the LICENSE file.

"""
import json
import logging
import os
import sys

import pytest

from jointdet.cli import main
from jointdet.evaluation import EvalReport
from jointdet.preprocessing import DomainProfile, generate_corpus, read_detections, read_manifest

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

log = logging.getLogger(__name__)

logging.basicConfig(handlers=[console], level=logging.INFO)

PROFILES = [
    DomainProfile(0, "room", True, (-2.0, -2.0, 0.0), (2.0, 2.0, 2.0), ("chair", "table"),
                  {"chair": (0.6, 0.6, 0.9), "table": (1.0, 0.8, 0.75)}, 0.1, points=(150, 250), objects=(1, 2),
                  points_per_object=60),
    DomainProfile(1, "street", False, (-10.0, -10.0, -2.0), (10.0, 10.0, 2.0), ("car",), {"car": (3.9, 1.6, 1.56)},
                  0.4, ground_z=-1.5, points=(150, 250), objects=(1, 2), points_per_object=60, native_attributes=3),
]

QUIET = ["--log-file", ""]


def run(*argv: str) -> int:
    return main(QUIET + list(argv))


@pytest.fixture
def template(tmp_path):
    """A manifest carrying the small profiles, used as the profile source of gen-data."""
    generate_corpus(PROFILES, str(tmp_path / "template"), 0, 1)
    return str(tmp_path / "template" / "manifest.json")


def test_grad_check():
    assert run("grad-check", "--op", "bce", "--op", "router_ce", "--points", "2") == 0
    assert run("grad-check", "--op", "bce", "--points", "1", "--tolerance", "0") == 4


def test_gen_data_and_oracle_eval(template, tmp_path):
    corpus = str(tmp_path / "corpus")
    assert run("gen-data", "--manifest", template, "--domains", "room", "--out", corpus, "--scenes", "3",
               "--workers", "2") == 0
    manifest = read_manifest(os.path.join(corpus, "manifest.json"))
    assert [p.name for p in manifest.profiles] == ["room"]
    assert manifest.n_scenes() == 3

    out = str(tmp_path / "reports" / "oracle.json")
    csv_file = str(tmp_path / "oracle.csv")
    assert run("eval", "--manifest", os.path.join(corpus, "manifest.json"), "--oracle", "--out", out,
               "--csv", csv_file) == 0
    report = EvalReport.read_json(out)
    assert report.overall_mean_ap(0.25) == pytest.approx(1.0)
    assert os.path.isfile(csv_file)


def test_gen_data_unknown_domain(template, tmp_path):
    assert run("gen-data", "--manifest", template, "--domains", "moon", "--out", str(tmp_path / "c")) == 2


def test_eval_empty_corpus(template, tmp_path):
    corpus = str(tmp_path / "empty")
    assert run("gen-data", "--manifest", template, "--out", corpus, "--scenes", "0") == 0
    out = str(tmp_path / "empty.json")
    assert run("eval", "--manifest", os.path.join(corpus, "manifest.json"), "--oracle", "--out", out) == 0
    assert EvalReport.read_json(out).is_empty()


def test_eval_errors(template, tmp_path):
    assert run("eval", "--manifest", template, "--out", str(tmp_path / "r.json")) == 2
    assert run("eval", "--oracle", "--out", str(tmp_path / "r.json")) == 2
    broken = str(tmp_path / "broken.json")
    with open(broken, "w") as f:
        f.write("[]")
    assert run("eval", "--manifest", broken, "--oracle", "--out", str(tmp_path / "r.json")) == 2


def test_train_errors(tmp_path):
    assert run("train", "--set", f"output_dir={tmp_path}") == 2
    assert run("train", "--manifest", str(tmp_path / "missing.json")) == 2
    assert run("train", "--set", "epochs=0") == 2


def test_train_eval_infer(template, tmp_path):
    corpus = str(tmp_path / "corpus")
    assert run("gen-data", "--manifest", template, "--out", corpus, "--scenes", "2") == 0
    manifest_file = os.path.join(corpus, "manifest.json")
    runs = str(tmp_path / "runs")
    assert run("train", "--manifest", manifest_file, "--set", f"output_dir={runs}", "--set", "run_name=cli",
               "--set", "epochs=1", "--set", "steps_per_epoch=1", "--set", "batch_size=2",
               "--set", "backbone.channels=[8, 8]", "--set", "backbone.strides=[1, 2]") == 0
    checkpoint = os.path.join(runs, "cli", "checkpoints", "epoch_001.ckpt")
    assert os.path.isfile(checkpoint)
    with open(os.path.join(runs, "cli", "outcome.json")) as f:
        assert json.load(f)["outcome"] == "completed"
    with open(os.path.join(runs, "cli", "losses.jsonl")) as f:
        assert len(f.readlines()) == 1

    report = str(tmp_path / "model.json")
    assert run("eval", "--manifest", manifest_file, "--checkpoint", checkpoint, "--protocol", "kitti",
               "--domains", "street", "--out", report) == 0
    assert set(EvalReport.read_json(report).domains) == {"street"}

    scene = os.path.join(corpus, read_manifest(manifest_file).scenes[0][0])
    detections = str(tmp_path / "out" / "detections.jsonl")
    os.makedirs(os.path.dirname(detections))
    assert run("infer", "--checkpoint", checkpoint, "--scene", scene, "--out", detections,
               "--score-threshold", "0.0") == 0
    records = read_detections(detections)
    assert records
    assert {r["class"] for r in records} <= {"chair", "table", "car"}
    assert all(len(r["box"]) == 7 for r in records)
    assert os.path.isfile(str(tmp_path / "out" / "detections.ply"))
