from .constants import JointDetError, ContractViolation, ConfigError, FormatError, EmptySceneError, \
    RejectedInputError, NonFiniteError, GradCheckFailure, ContextMode, ClassificationMode, SoftTarget, ProbSource, \
    Protocol, APMode, IoUKind, View, NormMode
from .sink import DataSink

__all__ = [
    'JointDetError', 'ContractViolation', 'ConfigError', 'FormatError', 'EmptySceneError', 'RejectedInputError',
    'NonFiniteError', 'GradCheckFailure', 'ContextMode', 'ClassificationMode', 'SoftTarget', 'ProbSource', 'Protocol',
    'APMode', 'IoUKind', 'View', 'NormMode',  # constants.py

    'DataSink',  # sink.py
]
