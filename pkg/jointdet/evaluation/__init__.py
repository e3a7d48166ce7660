from .matching import match_detections, detection_order
from .precision import average_precision, precision_recall, precision_envelope, RECALL_POSITIONS
from .report import DomainReport, EvalReport, threshold_key, merge_reports
from .param import ScoredBox, Detector, DetectorDefinition, ModelDetector, OracleDetector, EvaluationCase, \
    protocol_thresholds, PROTOCOL_THRESHOLDS
from .evaluator import evaluate, evaluate_domain, DetectionEvaluator

__all__ = [
    'match_detections', 'detection_order',  # matching.py

    'average_precision', 'precision_recall', 'precision_envelope', 'RECALL_POSITIONS',  # precision.py

    'DomainReport', 'EvalReport', 'threshold_key', 'merge_reports',  # report.py

    'ScoredBox', 'Detector', 'DetectorDefinition', 'ModelDetector', 'OracleDetector', 'EvaluationCase',
    'protocol_thresholds', 'PROTOCOL_THRESHOLDS',  # param.py

    'evaluate', 'evaluate_domain', 'DetectionEvaluator',  # evaluator.py
]
