from .config import OptimizerConfig, LossConfig, RunConfig, load_config
from .trainer import JsonLinesSink, TrainingResult, Trainer, train, build_model, training_profiles, load_corpora, \
    router_accuracy, COMPLETED, DIVERGED
from .ablation import ABLATIONS, AblationOutcome, AblationCase, AblationRunner, summarize

__all__ = [
    'OptimizerConfig', 'LossConfig', 'RunConfig', 'load_config',  # config.py

    'JsonLinesSink', 'TrainingResult', 'Trainer', 'train', 'build_model', 'training_profiles', 'load_corpora',
    'router_accuracy', 'COMPLETED', 'DIVERGED',  # trainer.py

    'ABLATIONS', 'AblationOutcome', 'AblationCase', 'AblationRunner', 'summarize',  # ablation.py
]
