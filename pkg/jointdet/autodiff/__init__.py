from .value import Value, Parameter, Tape, backward, active_tape, as_value
from .module import Module
from .optim import OptimizerState, optimizer_step, AdamW, CyclicSchedule
from .gradcheck import grad_check
from .checkpoint import save_checkpoint, read_checkpoint, load_checkpoint
from . import ops

__all__ = [
    'Value', 'Parameter', 'Tape', 'backward', 'active_tape', 'as_value',  # value.py

    'Module',  # module.py

    'OptimizerState', 'optimizer_step', 'AdamW', 'CyclicSchedule',  # optim.py

    'grad_check',  # gradcheck.py

    'save_checkpoint', 'read_checkpoint', 'load_checkpoint',  # checkpoint.py

    'ops',  # ops.py
]
