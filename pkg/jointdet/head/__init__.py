from .targets import AssignmentTargets, assign_targets, centerness, centerness_from_local
from .coding import decode_values, decode_box, encode_boxes, encode_box, base_dims_cache, base_dims_table, \
    geometric_mean_dims, REGRESSION_SIZE
from .classify import classify, cosine_logits, Classifier, ClassifierOutputs
from .head import Detection, HeadOutputs, DetectionHead

__all__ = [
    'AssignmentTargets', 'assign_targets', 'centerness', 'centerness_from_local',  # targets.py

    'decode_values', 'decode_box', 'encode_boxes', 'encode_box', 'base_dims_cache', 'base_dims_table',
    'geometric_mean_dims', 'REGRESSION_SIZE',  # coding.py

    'classify', 'cosine_logits', 'Classifier', 'ClassifierOutputs',  # classify.py

    'Detection', 'HeadOutputs', 'DetectionHead',  # head.py
]
