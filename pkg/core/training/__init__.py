# core/training/__init__.py
"""
Entrenamiento SGD y ajuste fino min-max
"""
from .trainer import (TrainConfig, TrainResult, EpochRecord, CURVE_HEADER, sgd_step, train,
                      write_curve, epoch_shuffle_seed)
from .bayes_finetune import (FinetuneConfig, FinetuneResult, CorrectedGradient, GradientCounter,
                             worst_case_direction, corrected_gradient, corrected_gradient_from,
                             finetune)

__all__ = [
    'TrainConfig', 'TrainResult', 'EpochRecord', 'CURVE_HEADER', 'sgd_step', 'train',
    'write_curve', 'epoch_shuffle_seed',
    'FinetuneConfig', 'FinetuneResult', 'CorrectedGradient', 'GradientCounter',
    'worst_case_direction', 'corrected_gradient', 'corrected_gradient_from', 'finetune'
]
