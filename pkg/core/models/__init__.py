# core/models/__init__.py
"""
Especificaciones de arquitectura, parámetros planos y checkpoints
"""
from .model_types import (LayerKind, LayerSpec, ModelRole, ModelSpec, MODEL_FAMILIES,
                          DEFAULT_SUBSTITUTE, DEFAULT_VICTIMS, build_spec, default_registry,
                          validate_model_spec)
from .model_zoo import (ParamVector, LossGraph, init_params, flatten, unflatten, forward_loss,
                        loss_and_param_grad, loss_and_input_grad, param_grad_fn, logits, predict,
                        predict_labels, accuracy)
from .checkpoint import CHECKPOINT_MAGIC, save_checkpoint, load_checkpoint

__all__ = [
    'LayerKind', 'LayerSpec', 'ModelRole', 'ModelSpec', 'MODEL_FAMILIES',
    'DEFAULT_SUBSTITUTE', 'DEFAULT_VICTIMS', 'build_spec', 'default_registry',
    'validate_model_spec',
    'ParamVector', 'LossGraph', 'init_params', 'flatten', 'unflatten', 'forward_loss',
    'loss_and_param_grad', 'loss_and_input_grad', 'param_grad_fn', 'logits', 'predict',
    'predict_labels', 'accuracy',
    'CHECKPOINT_MAGIC', 'save_checkpoint', 'load_checkpoint'
]
