# core/attack/__init__.py
"""
Ataques FGSM / I-FGSM contra modelos y posteriors
"""
from .attack_engine import (AttackMethod, AttackMode, SamplingMode, AttackJob, AdvBatch, ADV_MAGIC,
                            ensemble_input_grad, input_grad_over, draw_models, params_digest,
                            project, fgsm, ifgsm, run_attack, save_adv_batch, load_adv_batch)

__all__ = [
    'AttackMethod', 'AttackMode', 'SamplingMode', 'AttackJob', 'AdvBatch', 'ADV_MAGIC',
    'ensemble_input_grad', 'input_grad_over', 'draw_models', 'params_digest', 'project',
    'fgsm', 'ifgsm', 'run_attack', 'save_adv_batch', 'load_adv_batch'
]
