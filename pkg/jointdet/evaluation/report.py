"""
For License information see the LICENSE file.

"""
import csv
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..api.constants import APMode, Protocol, IoUKind, FormatError


def threshold_key(threshold: float) -> str:
    return f"{threshold:.2f}"


@dataclass
class DomainReport:
    """
    The results of one domain. `ap[kind][class][threshold]` holds per-class APs, `mean_ap[kind][threshold]` their
    mean over the classes with ground truth. Classes without ground truth are listed in `no_ground_truth`.
    """
    domain_id: int
    n_scenes: int
    n_detections: int
    n_gt: Dict[str, int]
    ap: Dict[str, Dict[str, Dict[str, float]]] = field(default_factory=dict)
    mean_ap: Dict[str, Dict[str, float]] = field(default_factory=dict)
    no_ground_truth: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"domain_id": self.domain_id, "n_scenes": self.n_scenes, "n_detections": self.n_detections,
                "n_gt": dict(self.n_gt), "ap": self.ap, "mean_ap": self.mean_ap,
                "no_ground_truth": list(self.no_ground_truth)}

    @classmethod
    def from_dict(cls, values: Dict) -> 'DomainReport':
        return cls(int(values["domain_id"]), int(values["n_scenes"]), int(values["n_detections"]),
                   dict(values["n_gt"]), values["ap"], values["mean_ap"], list(values.get("no_ground_truth", [])))


@dataclass
class EvalReport:
    """
    Evaluation results of one detector on one or more domains.

    Parameters
    ----------
    detector : str
        the name of the evaluated detector
    protocol : Protocol
        the evaluation protocol
    ap_mode : APMode
        the AP integration
    thresholds : Sequence[float]
        the IoU thresholds
    iou_kinds : Sequence[IoUKind]
        the IoU kinds evaluated
    domains : Dict[str, DomainReport]
        the results by domain name
    """
    detector: str
    protocol: Protocol
    ap_mode: APMode
    thresholds: Sequence[float]
    iou_kinds: Sequence[IoUKind]
    domains: Dict[str, DomainReport] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return len(self.domains) == 0

    def mean_ap(self, domain: str, threshold: float, kind: IoUKind = IoUKind.IOU_3D) -> float:
        return self.domains[domain].mean_ap[kind.value][threshold_key(threshold)]

    def overall_mean_ap(self, threshold: float, kind: IoUKind = IoUKind.IOU_3D) -> float:
        """Mean over the domains; 0 for an empty report."""
        values = [self.mean_ap(name, threshold, kind) for name in self.domains]
        return float(np.mean(values)) if values else 0.0

    def to_dict(self) -> Dict:
        return {"detector": self.detector, "protocol": self.protocol.value, "ap_mode": self.ap_mode.value,
                "thresholds": [float(t) for t in self.thresholds], "iou_kinds": [k.value for k in self.iou_kinds],
                "metadata": {"integration": self.ap_mode.value,
                             "tie_break": "score desc, scene id asc, detection index asc"},
                "domains": {name: report.to_dict() for name, report in sorted(self.domains.items())}}

    @classmethod
    def from_dict(cls, values: Dict) -> 'EvalReport':
        return cls(values["detector"], Protocol(values["protocol"]), APMode(values["ap_mode"]),
                   list(values["thresholds"]), [IoUKind(k) for k in values["iou_kinds"]],
                   {name: DomainReport.from_dict(d) for name, d in values["domains"].items()})

    def write_json(self, filename: str) -> None:
        with open(filename, "w") as f:
            json.dump(self.to_dict(), f, indent=1, sort_keys=True)

    @classmethod
    def read_json(cls, filename: str) -> 'EvalReport':
        try:
            with open(filename) as f:
                return cls.from_dict(json.load(f))
        except json.JSONDecodeError as e:
            raise FormatError(f"{filename}: line {e.lineno}: {e.msg}")
        except (KeyError, ValueError) as e:
            raise FormatError(f"{filename}: invalid report field {e}")

    def rows(self) -> List[List]:
        """Summary rows (detector, domain, iou kind, class, threshold, AP, n_gt); class "mean" holds the means."""
        rows = []
        for name, report in sorted(self.domains.items()):
            for kind in self.iou_kinds:
                for class_name, aps in sorted(report.ap.get(kind.value, {}).items()):
                    for key, ap in sorted(aps.items()):
                        rows.append([self.detector, name, kind.value, class_name, key, ap,
                                     report.n_gt.get(class_name, 0)])
                for key, ap in sorted(report.mean_ap.get(kind.value, {}).items()):
                    rows.append([self.detector, name, kind.value, "mean", key, ap, sum(report.n_gt.values())])
        return rows

    def write_csv(self, filename: str) -> None:
        with open(filename, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["detector", "domain", "iou", "class", "threshold", "ap", "n_gt"])
            writer.writerows(self.rows())


def merge_reports(reports: Sequence[EvalReport], detector: Optional[str] = None) -> EvalReport:
    """Combines reports over disjoint domains with equal settings."""
    if not reports:
        raise ValueError("Nothing to merge")
    first = reports[0]
    merged = EvalReport(detector or first.detector, first.protocol, first.ap_mode, first.thresholds, first.iou_kinds)
    for report in reports:
        merged.domains.update(report.domains)
    return merged
