# core/autodiff/__init__.py
"""
Diferenciación automática en modo reverso (float64, CPU)
"""
from .tensor import Tensor, Tape, grad_wrt_params, grad_wrt_input
from . import ops

__all__ = [
    'Tensor',
    'Tape',
    'grad_wrt_params',
    'grad_wrt_input',
    'ops'
]
