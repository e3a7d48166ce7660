"""
Ablation runs: train one model per (setting, seed) and evaluate it on its training domains.

For License information see the LICENSE file.

"""
import os
from dataclasses import dataclass
from logging import getLogger
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import RunConfig
from .trainer import COMPLETED, DIVERGED, train, training_profiles
from ..api import DataSink
from ..api.constants import DATA_DIRECTORY, IoUKind, Protocol
from ..evaluation import EvalReport, ModelDetector, evaluate, threshold_key
from ..preprocessing import CorpusManifest, DomainProfile
from ..util.time import Stopwatch

log = getLogger(__name__)

# every ablation maps its settings to the config overrides selecting them
ABLATIONS: Dict[str, Dict[str, Tuple[str, ...]]] = {
    "partitioning": {
        "shared": ("scatter=false", "context_mode=off"),
        "scatter": ("scatter=true", "context_mode=off"),
        "scatter+context": ("scatter=true", "context_mode=indoor-only"),
    },
    "context_partition": {
        "no-cp": ("context_mode=off",),
        "cp-all": ("context_mode=all",),
        "cp-indoor-only": ("context_mode=indoor-only",),
    },
    "classification": {
        "conv-only": ("classification=conv-only",),
        "embedding-trainable": ("classification=embedding-trainable",),
        "embedding-frozen": ("classification=embedding-only",),
        "dual": ("classification=dual",),
    },
    "soft_target": {
        "hard": ("loss.soft_target=hard",),
        "iou-3d": ("loss.soft_target=iou-3d",),
        "decoupled": ("loss.soft_target=decoupled",),
        "iou-bev": ("loss.soft_target=iou-bev",),
    },
}


@dataclass
class AblationOutcome:
    """The result of one (setting, seed) run. Diverged runs carry no report."""
    setting: str
    seed: int
    outcome: str
    report: Optional[EvalReport]

    @property
    def diverged(self) -> bool:
        return self.outcome == DIVERGED

    def mean_ap(self, domain: str, threshold: float, kind: IoUKind = IoUKind.IOU_3D) -> float:
        """The mean AP of a domain; 0 for diverged runs."""
        if self.report is None:
            return 0.0
        return self.report.mean_ap(domain, threshold, kind)

    def overall_mean_ap(self, threshold: float, kind: IoUKind = IoUKind.IOU_3D) -> float:
        if self.report is None:
            return 0.0
        return self.report.overall_mean_ap(threshold, kind)


class AblationCase:
    """
    The settings and seeds of one ablation.

    Parameters
    ----------
    name : str
        the ablation name, used in run names
    settings : Mapping[str, Sequence[str]]
        the config overrides of every setting
    seeds : Sequence[int]
        the seeds every setting is trained with
    base_overrides : Sequence[str]
        overrides shared by all settings, applied first
        default: ()
    protocol : Protocol
        the evaluation protocol
        default: Protocol.INDOOR
    thresholds : Optional[Sequence[float]]
        a subset of the protocol thresholds
        default: None
    """
    __name: str
    __settings: Dict[str, Tuple[str, ...]]
    __seeds: Tuple[int, ...]
    __base_overrides: Tuple[str, ...]
    __protocol: Protocol
    __thresholds: Optional[Tuple[float, ...]]

    def __init__(self, name: str, settings: Mapping[str, Sequence[str]], seeds: Sequence[int],
                 base_overrides: Sequence[str] = (), protocol: Protocol = Protocol.INDOOR,
                 thresholds: Optional[Sequence[float]] = None):
        if len(settings) == 0:
            raise ValueError("An ablation needs at least one setting")
        if len(seeds) == 0:
            raise ValueError("An ablation needs at least one seed")
        self.__name = name
        self.__settings = {setting: tuple(overrides) for setting, overrides in settings.items()}
        self.__seeds = tuple(seeds)
        self.__base_overrides = tuple(base_overrides)
        self.__protocol = protocol
        self.__thresholds = None if thresholds is None else tuple(thresholds)

    @classmethod
    def named(cls, name: str, seeds: Sequence[int], base_overrides: Sequence[str] = (),
              protocol: Protocol = Protocol.INDOOR) -> 'AblationCase':
        """The case of one of the predefined `ABLATIONS`."""
        if name not in ABLATIONS:
            raise ValueError(f"Unknown ablation {name}, known are {sorted(ABLATIONS)}")
        return cls(name, ABLATIONS[name], seeds, base_overrides, protocol)

    def name(self) -> str:
        return self.__name

    def settings(self) -> Dict[str, Tuple[str, ...]]:
        return dict(self.__settings)

    def seeds(self) -> Tuple[int, ...]:
        return self.__seeds

    def protocol(self) -> Protocol:
        return self.__protocol

    def thresholds(self) -> Optional[Tuple[float, ...]]:
        return self.__thresholds

    def config(self, setting: str, seed: int, output_dir: str) -> RunConfig:
        """The run configuration of one setting and seed."""
        overrides = list(self.__base_overrides) + list(self.__settings[setting]) + [f"seed={seed}"]
        return RunConfig(output_dir=output_dir, run_name=os.path.join(self.__name, setting, f"seed_{seed}")) \
            .with_overrides(overrides)


class AblationRunner:
    """
    Trains and evaluates every setting of an ablation case with every seed. The evaluated domains are the training
    domains of each run (and the held-out domains if requested). Mean APs are offered to the sinks with the setting
    as series, the seed position as step and "<domain>/<iou>@<threshold>" keys.

    Parameters
    ----------
    case : AblationCase
        the settings and seeds
    manifest : CorpusManifest
        the training corpus
    evaluation : Optional[CorpusManifest]
        the evaluation corpus, the training corpus if not given
        default: None
    sinks : Union[DataSink, Iterable[DataSink]]
        one or multiple data sinks to write results to
        default: ()
    output_dir : str
        the directory below which runs are written
        default: DATA_DIRECTORY/ablations
    held_out : bool
        whether to also evaluate on the held-out domains of the evaluation corpus
        default: False
    parallelism : int
        the number of inference threads
        default: 1
    """
    __case: AblationCase
    __manifest: CorpusManifest
    __evaluation: CorpusManifest
    __sinks: List[DataSink]
    __output_dir: str
    __held_out: bool
    __parallelism: int

    def __init__(self, case: AblationCase, manifest: CorpusManifest, evaluation: Optional[CorpusManifest] = None,
                 sinks: Union[DataSink, Iterable[DataSink]] = (),
                 output_dir: str = os.path.join(DATA_DIRECTORY, "ablations"), held_out: bool = False,
                 parallelism: int = 1):
        self.__case = case
        self.__manifest = manifest
        self.__evaluation = evaluation if evaluation is not None else manifest
        self.__sinks = [sinks] if isinstance(sinks, DataSink) else list(sinks)
        self.__output_dir = output_dir
        self.__held_out = held_out
        self.__parallelism = parallelism

    def __evaluated_profiles(self, config: RunConfig) -> List[DomainProfile]:
        ids = [p.domain_id for p in training_profiles(config, self.__manifest)]
        profiles = [p for p in self.__evaluation.profiles if p.domain_id in ids]
        if self.__held_out:
            profiles += [p for p in self.__evaluation.profiles if p.held_out and p.domain_id not in ids]
        return profiles

    def run(self) -> List[AblationOutcome]:
        case = self.__case
        settings = case.settings()
        log.info(f"Running ablation {case.name()}: {len(settings)} settings x {len(case.seeds())} seeds")
        for setting in settings:
            log.info(f" - {setting}: {list(settings[setting]) or 'defaults'}")
            for sink in self.__sinks:
                sink.register_series(setting)

        stopwatch = Stopwatch()
        stopwatch.start()
        outcomes = []
        for step, seed in enumerate(case.seeds(), start=1):
            log.info("######################################################################################")
            log.info(f"# SEED {seed}")
            log.info("######################################################################################")
            for setting in settings:
                config = case.config(setting, seed, self.__output_dir)
                result = train(config, self.__manifest)
                if result.diverged:
                    log.warning(f"{setting} (seed {seed}) diverged after {result.steps} steps")
                    outcomes.append(AblationOutcome(setting, seed, DIVERGED, None))
                    continue

                detector = ModelDetector(result.model, label=setting)
                corpora = [(p, self.__evaluation.load_corpus(p.domain_id)) for p in self.__evaluated_profiles(config)]
                report = evaluate(detector, corpora, case.protocol(), case.thresholds(),
                                  parallelism=self.__parallelism)
                outcomes.append(AblationOutcome(setting, seed, COMPLETED, report))
                values = {f"{name}/{kind}@{key}": ap for name, domain in report.domains.items()
                          for kind, aps in domain.mean_ap.items() for key, ap in aps.items()}
                for sink in self.__sinks:
                    sink.offer_data(setting, step, values)
            log.info(f"SEED {seed} COMPLETED IN {stopwatch.lap()}")

        log.info(f"Ablation {case.name()} completed in {stopwatch.stop()}")
        for sink in self.__sinks:
            sink.flush()
        return outcomes


def summarize(outcomes: Sequence[AblationOutcome], threshold: float,
              kind: IoUKind = IoUKind.IOU_3D) -> Dict[str, Dict[str, float]]:
    """
    The mean AP of every setting and domain averaged over the seeds, with diverged runs counted as 0. The key
    "overall" holds the average of the per-domain values.
    """
    table: Dict[str, Dict[str, List[float]]] = {}
    domains = sorted({name for o in outcomes if o.report is not None for name in o.report.domains})
    for outcome in outcomes:
        row = table.setdefault(outcome.setting, {})
        for name in domains:
            if outcome.report is not None and name not in outcome.report.domains:
                continue
            row.setdefault(name, []).append(outcome.mean_ap(name, threshold, kind))
    summary = {}
    for setting, row in table.items():
        summary[setting] = {name: float(np.mean(values)) for name, values in row.items()}
        if summary[setting]:
            summary[setting]["overall"] = float(np.mean(list(summary[setting].values())))
        log.info(f"{setting}: " + ", ".join(f"{name} {value:.4f}" for name, value in summary[setting].items())
                 + f" (AP@{threshold_key(threshold)})")
    return summary
