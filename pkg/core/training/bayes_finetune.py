# core/training/bayes_finetune.py
"""
Ajuste fino min-max sobre la media de la posterior

Por lote: Δw* = λ·g/‖g‖ (peor perturbación dentro del radio λ) y gradiente
corregido g(ŵ) + (g(ŵ + γΔw*) - g(ŵ))/γ con γ = gamma_numerator/‖Δw*‖,
aproximación por diferencias finitas de ∇L + HΔw*.
"""
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from core.data.dataset import Dataset, batches
from core.errors import ConfigError, DivergenceError
from core.models.model_types import ModelSpec
from core.models.model_zoo import ParamVector, accuracy, check_params, loss_and_param_grad
from core.posterior.posterior import SwagMoments, swag_update
from core.training.trainer import EpochRecord, epoch_shuffle_seed, sgd_step
from utils.logger import log_system, log_training

LossGradFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]


@dataclass
class FinetuneConfig:
    lambda_radius: float = 0.2
    gamma_numerator: float = 0.1
    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 10
    batch_size: int = 32
    collect_swag: bool = True
    full_batch: bool = False
    seed: int = 2

    def validate(self) -> List[str]:
        errors = []
        if not self.lambda_radius > 0:
            errors.append("lambda_radius debe ser > 0")
        if not self.gamma_numerator > 0:
            errors.append("gamma_numerator debe ser > 0")
        if self.learning_rate < 0:
            errors.append("learning_rate debe ser >= 0")
        if not 0.0 <= self.momentum < 1.0:
            errors.append("momentum debe estar en [0, 1)")
        if self.weight_decay < 0:
            errors.append("weight_decay debe ser >= 0")
        if self.epochs < 0:
            errors.append("epochs debe ser >= 0")
        if self.batch_size < 1:
            errors.append("batch_size debe ser >= 1")
        return errors


class CorrectedGradient(NamedTuple):
    gradient: np.ndarray
    loss: float
    evaluations: int
    gamma: float         # inf cuando Δw* = 0


@dataclass
class FinetuneResult:
    params: ParamVector
    moments: Optional[SwagMoments] = None
    curve: List[EpochRecord] = field(default_factory=list)
    gradient_evaluations: int = 0


class GradientCounter:
    """Envoltorio que cuenta evaluaciones de (pérdida, gradiente)"""

    def __init__(self, loss_grad_fn: LossGradFn):
        self._fn = loss_grad_fn
        self.calls = 0

    def __call__(self, values: np.ndarray) -> Tuple[float, np.ndarray]:
        self.calls += 1
        return self._fn(values)


def worst_case_direction(grad, lambda_radius: float):
    """
    Δw* = λ·g/‖g‖₂; vector cero si g = 0

    Conserva el tipo de entrada (ParamVector o arreglo)
    """
    values = grad.values if isinstance(grad, ParamVector) else np.asarray(grad, dtype=np.float64)
    norm = float(np.linalg.norm(values))
    direction = np.zeros_like(values) if norm == 0.0 else (lambda_radius / norm) * values
    return grad.with_values(direction) if isinstance(grad, ParamVector) else direction


def corrected_gradient_from(loss_grad_fn: LossGradFn, values: np.ndarray, lambda_radius: float,
                            gamma_numerator: float = 0.1) -> CorrectedGradient:
    """
    Gradiente corregido para cualquier función (pérdida, gradiente)

    Args:
        loss_grad_fn: w -> (L(w), ∇L(w))
        values: Punto ŵ
        lambda_radius: Radio λ
        gamma_numerator: Numerador de γ

    Returns:
        CorrectedGradient: dos evaluaciones, o una si Δw* = 0
    """
    values = np.asarray(values, dtype=np.float64)
    loss, grad = loss_grad_fn(values)
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise DivergenceError("Gradiente no finito en ŵ")

    delta = worst_case_direction(grad, lambda_radius)
    delta_norm = float(np.linalg.norm(delta))
    if delta_norm == 0.0:
        return CorrectedGradient(grad, float(loss), 1, float('inf'))

    gamma = gamma_numerator / delta_norm
    _, shifted_grad = loss_grad_fn(values + gamma * delta)
    if not np.all(np.isfinite(shifted_grad)):
        raise DivergenceError("Gradiente no finito en ŵ + γΔw*")

    return CorrectedGradient(grad + (shifted_grad - grad) / gamma, float(loss), 2, gamma)


def corrected_gradient(spec: ModelSpec, params, batch: Tuple[np.ndarray, np.ndarray],
                       lambda_radius: float, gamma_numerator: float = 0.1) -> ParamVector:
    """Gradiente corregido de la entropía cruzada del modelo sobre un lote"""
    x, y = batch
    if len(y) == 0:
        raise ConfigError("El lote está vacío")
    values = check_params(spec, params)

    def loss_grad(w: np.ndarray) -> Tuple[float, np.ndarray]:
        return loss_and_param_grad(spec, w, x, y)

    result = corrected_gradient_from(loss_grad, values, lambda_radius, gamma_numerator)
    return ParamVector(result.gradient, spec.id)


def finetune(spec: ModelSpec, start_params: ParamVector, ds: Dataset, cfg: FinetuneConfig,
             test_ds: Optional[Dataset] = None) -> FinetuneResult:
    """
    Ajuste fino de la media de la posterior

    Args:
        spec: Arquitectura del sustituto
        start_params: Parámetros del modelo fuente entrenado
        ds: Conjunto de entrenamiento
        cfg: Hiperparámetros del ajuste fino
        test_ds: Conjunto para la curva (opcional)

    Returns:
        FinetuneResult: parámetros finales, momentos SWAG (una instantánea por época) y curva
    """
    errors = cfg.validate()
    if errors:
        raise ConfigError("FinetuneConfig inválida: " + "; ".join(errors))
    if len(ds) == 0:
        raise ConfigError("El conjunto de entrenamiento está vacío")

    values = check_params(spec, start_params).copy()
    velocity = np.zeros_like(values)
    moments = SwagMoments.empty(values.size, spec.id) if cfg.collect_swag else None
    result = FinetuneResult(params=ParamVector(values, spec.id), moments=moments)

    log_system(f"Ajuste fino de {spec.id}: λ={cfg.lambda_radius}, lr={cfg.learning_rate}, "
               f"{cfg.epochs} épocas, SWAG={'sí' if cfg.collect_swag else 'no'}")

    batch_size = len(ds) if cfg.full_batch else cfg.batch_size

    for epoch in range(1, cfg.epochs + 1):
        losses = []
        for x, y in batches(ds, batch_size, epoch_shuffle_seed(cfg.seed, epoch)):
            counter = GradientCounter(lambda w, x=x, y=y: loss_and_param_grad(spec, w, x, y))
            try:
                step = corrected_gradient_from(counter, values, cfg.lambda_radius, cfg.gamma_numerator)
            except DivergenceError as e:
                raise DivergenceError(f"{spec.id}, época {epoch}: {e}",
                                      last_good_params=values.copy()) from e

            new_values, new_velocity = sgd_step(values, step.gradient, velocity, cfg)
            if not np.all(np.isfinite(new_values)):
                raise DivergenceError(f"{spec.id}, época {epoch}: parámetros no finitos",
                                      last_good_params=values.copy())
            values, velocity = new_values, new_velocity
            losses.append(step.loss * len(y))
            result.gradient_evaluations += counter.calls

        if moments is not None:
            moments = swag_update(moments, ParamVector(values, spec.id))

        train_loss = float(np.sum(losses) / len(ds))
        test_acc = accuracy(spec, values, test_ds.images, test_ds.labels) if test_ds is not None else None
        result.curve.append(EpochRecord(epoch, train_loss, test_acc))
        log_training(f"{spec.id}/finetune", epoch, train_loss, test_acc)

    result.params = ParamVector(values, spec.id)
    result.moments = moments
    return result
