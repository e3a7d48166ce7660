"""
Command-line entry point: `python -m jointdet <command>` with the commands gen-data, train, eval, infer and
grad-check. Exit codes: 0 success, 1 other errors, 2 configuration or format errors, 3 non-finite values,
4 gradient-check failures.

For License information see the LICENSE file.

"""
import argparse
import logging
import os
import sys
from logging import getLogger
from typing import List, Optional, Sequence

from .api.constants import CORPUS_DIRECTORY, DEFAULT_NMS_THRESHOLD, DEFAULT_SCORE_THRESHOLD, GRAD_CHECK_TOLERANCE, \
    LOG_DIRECTORY, ConfigError, GradCheckFailure, JointDetError, Protocol
from .evaluation import ModelDetector, OracleDetector, evaluate
from .gradsuite import check_names, run_suite
from .model import load_model
from .plotting import LossCurveSink
from .preprocessing import default_profiles, generate_corpus, profiles_by_name, read_manifest, read_scene, \
    write_detections, write_ply_wireframes
from .training import JsonLinesSink, load_config, train

log = getLogger(__name__)

LOG_FORMAT = '{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}'


def setup_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    f = logging.Formatter(fmt=LOG_FORMAT, style='{')

    console = logging.StreamHandler(sys.stdout)
    console.setFormatter(f)
    handlers: List[logging.Handler] = [console]

    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        file = logging.FileHandler(log_file, 'w', 'utf-8')
        file.setFormatter(f)
        handlers.append(file)

    logging.basicConfig(handlers=handlers, level=getattr(logging, level.upper()), force=True)


def _gen_data(args: argparse.Namespace) -> int:
    if args.manifest is not None:
        profiles = list(read_manifest(args.manifest).profiles)
    else:
        profiles = default_profiles()
    if args.domains:
        by_name = profiles_by_name(profiles)
        unknown = [name for name in args.domains if name not in by_name]
        if unknown:
            raise ConfigError(f"Unknown domains {unknown}, known are {sorted(by_name)}")
        profiles = [by_name[name] for name in args.domains]
    manifest = generate_corpus(profiles, args.out, args.seed, args.scenes, args.workers)
    log.info(f"Wrote {manifest.n_scenes()} scenes of {manifest.n_domains} domains to {args.out}")
    return 0


def _train(args: argparse.Namespace) -> int:
    overrides = list(args.set)
    if args.manifest is not None:
        overrides.append(f"manifest={args.manifest}")
    config = load_config(args.config, overrides)
    if config.manifest is None:
        raise ConfigError("No corpus manifest configured (set manifest in the config or pass --manifest)")
    config = config.resolved()
    manifest = read_manifest(config.manifest)

    sinks = [JsonLinesSink(os.path.join(config.run_directory(), "losses.jsonl"))]
    if args.plot:
        sinks.append(LossCurveSink(f"{config.run_name}_loss.png"))
    result = train(config, manifest, sinks)
    log.info(f"Run {config.run_name}: {result.outcome} after {result.epochs} epochs, "
             f"checkpoints {result.checkpoints}")
    return 0


def _eval(args: argparse.Namespace) -> int:
    manifest_file = args.manifest
    if manifest_file is None and args.config is not None:
        manifest_file = load_config(args.config, args.set).resolved().manifest
    if manifest_file is None:
        raise ConfigError("No corpus manifest given (pass --manifest or a config naming one)")
    manifest = read_manifest(manifest_file)

    if args.oracle:
        detector = OracleDetector()
    elif args.checkpoint is not None:
        detector = ModelDetector(checkpoint=args.checkpoint, label=os.path.basename(args.checkpoint),
                                 score_threshold=args.score_threshold, nms_threshold=args.nms_threshold)
    else:
        raise ConfigError("Either --checkpoint or --oracle is required")

    profiles = list(manifest.profiles)
    if args.domains:
        by_name = profiles_by_name(profiles)
        unknown = [name for name in args.domains if name not in by_name]
        if unknown:
            raise ConfigError(f"Unknown domains {unknown}, known are {sorted(by_name)}")
        profiles = [by_name[name] for name in args.domains]
    corpora = [(profile, manifest.load_corpus(profile.domain_id)) for profile in profiles]

    report = evaluate(detector, corpora, Protocol(args.protocol), args.thresholds, parallelism=args.parallelism)
    if report.is_empty():
        log.warning("No scenes to evaluate, the report is empty")
    directory = os.path.dirname(args.out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    report.write_json(args.out)
    if args.csv is not None:
        report.write_csv(args.csv)
    log.info(f"Wrote report to {args.out}")
    return 0


def _infer(args: argparse.Namespace) -> int:
    model, _ = load_model(args.checkpoint)
    scene = read_scene(args.scene)

    voxel_size = args.voxel_size
    if voxel_size is None and scene.domain_id not in [d.domain_id for d in model.domains]:
        known = {p.domain_id: p for p in default_profiles()}
        if scene.domain_id not in known:
            raise ConfigError(f"Scene domain {scene.domain_id} is unknown, pass --voxel-size")
        voxel_size = known[scene.domain_id].voxel_size

    detections = model.predict(scene, voxel_size, args.score_threshold, args.nms_threshold)
    write_detections(({"scene_id": scene.scene_id, "class": model.class_names[d.label], "score": d.score,
                       "box": d.box.to_array().tolist()} for d in detections), args.out)
    ply = args.ply if args.ply is not None else os.path.splitext(args.out)[0] + ".ply"
    write_ply_wireframes([d.box.to_array() for d in detections], ply)
    log.info(f"{len(detections)} detections in {scene.scene_id}, written to {args.out} and {ply}")
    return 0


def _grad_check(args: argparse.Namespace) -> int:
    errors = run_suite(args.op or None, args.points, args.seed)
    failed = False
    for name, error in errors.items():
        ok = error < args.tolerance
        failed |= not ok
        print(f"{name:24} {error:.3e} {'ok' if ok else 'FAILED'}")
    if failed:
        raise GradCheckFailure(f"Gradient checks above tolerance {args.tolerance}")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jointdet", description="Multi-domain 3D object detection on synthetic "
                                                                  "point clouds")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-file", default=os.path.join(LOG_DIRECTORY, "jointdet.log"),
                        help="log file, empty to log to stdout only")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-data", help="generate synthetic corpora")
    gen.add_argument("--manifest", help="take the domain profiles from this manifest instead of the defaults")
    gen.add_argument("--domains", nargs="+", help="profile names to generate (all by default)")
    gen.add_argument("--out", default=CORPUS_DIRECTORY)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--scenes", type=int, default=20, help="scenes per domain")
    gen.add_argument("--workers", type=int, default=1)
    gen.set_defaults(run=_gen_data)

    tr = commands.add_parser("train", help="train a joint detector")
    tr.add_argument("--config", help="JSON run configuration")
    tr.add_argument("--manifest", help="corpus manifest, same as --set manifest=...")
    tr.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    tr.add_argument("--plot", action="store_true", help="plot the loss curve")
    tr.set_defaults(run=_train)

    ev = commands.add_parser("eval", help="evaluate a checkpoint")
    ev.add_argument("--config", help="JSON run configuration naming the corpus")
    ev.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ev.add_argument("--checkpoint")
    ev.add_argument("--oracle", action="store_true", help="evaluate the ground truth itself")
    ev.add_argument("--manifest")
    ev.add_argument("--domains", nargs="+", help="profile names to evaluate (all by default)")
    ev.add_argument("--protocol", default=Protocol.INDOOR.value, choices=[p.value for p in Protocol])
    ev.add_argument("--thresholds", type=float, nargs="+")
    ev.add_argument("--score-threshold", type=float, default=DEFAULT_SCORE_THRESHOLD)
    ev.add_argument("--nms-threshold", type=float, default=DEFAULT_NMS_THRESHOLD)
    ev.add_argument("--parallelism", type=int, default=1)
    ev.add_argument("--out", default="report.json")
    ev.add_argument("--csv")
    ev.set_defaults(run=_eval)

    inf = commands.add_parser("infer", help="detect objects in a scene file")
    inf.add_argument("--checkpoint", required=True)
    inf.add_argument("--scene", required=True)
    inf.add_argument("--out", default="detections.jsonl")
    inf.add_argument("--ply", help="wireframe file, next to --out by default")
    inf.add_argument("--voxel-size", type=float)
    inf.add_argument("--score-threshold", type=float, default=DEFAULT_SCORE_THRESHOLD)
    inf.add_argument("--nms-threshold", type=float, default=DEFAULT_NMS_THRESHOLD)
    inf.set_defaults(run=_infer)

    gc = commands.add_parser("grad-check", help="run the finite-difference gradient suite")
    gc.add_argument("--op", action="append", choices=check_names(), help="check to run (all by default)")
    gc.add_argument("--points", type=int, default=5)
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--tolerance", type=float, default=GRAD_CHECK_TOLERANCE)
    gc.set_defaults(run=_grad_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file or None)
    try:
        return args.run(args)
    except JointDetError as e:
        log.error(f"{type(e).__name__}: {e}")
        return e.exit_code
