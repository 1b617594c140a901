# core/training/trainer.py
"""
Entrenamiento SGD estándar (víctimas y modelo fuente)
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Protocol, Tuple

import numpy as np

from core.data.dataset import Dataset, batches
from core.errors import ConfigError, DivergenceError, ShapeError
from core.models.checkpoint import save_checkpoint
from core.models.model_types import ModelSpec
from core.models.model_zoo import ParamVector, accuracy, init_params, loss_and_param_grad
from utils.helpers import write_csv
from utils.logger import log_system, log_training
from utils.seed_generator import SeedGenerator

CURVE_HEADER = ('epoch', 'train_loss', 'test_acc')


class SGDSettings(Protocol):
    learning_rate: float
    momentum: float
    weight_decay: float


@dataclass
class TrainConfig:
    """
    Hiperparámetros de entrenamiento SGD
    """
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    seed: int = 1
    checkpoint_every: int = 0      # 0 = sólo el checkpoint final

    def validate(self) -> List[str]:
        errors = []
        if self.epochs < 0:
            errors.append("epochs debe ser >= 0")
        if self.batch_size < 1:
            errors.append("batch_size debe ser >= 1")
        if self.learning_rate < 0:
            errors.append("learning_rate debe ser >= 0")
        if not 0.0 <= self.momentum < 1.0:
            errors.append("momentum debe estar en [0, 1)")
        if self.weight_decay < 0:
            errors.append("weight_decay debe ser >= 0")
        if self.checkpoint_every < 0:
            errors.append("checkpoint_every debe ser >= 0")
        return errors


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    test_acc: Optional[float] = None

    def as_row(self) -> Tuple:
        return (self.epoch, self.train_loss, self.test_acc)


@dataclass
class TrainResult:
    params: ParamVector
    checkpoints: List[Path] = field(default_factory=list)
    curve: List[EpochRecord] = field(default_factory=list)

    @property
    def final_test_accuracy(self) -> Optional[float]:
        return self.curve[-1].test_acc if self.curve else None


def sgd_step(params: np.ndarray, grad: np.ndarray, velocity: np.ndarray,
             cfg: SGDSettings) -> Tuple[np.ndarray, np.ndarray]:
    """
    Paso SGD con momentum y weight decay acoplado

    v' = momentum·v + grad + weight_decay·params
    params' = params - lr·v'

    Returns:
        Tuple[np.ndarray, np.ndarray]: (params', velocity')
    """
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    velocity = np.asarray(velocity, dtype=np.float64)
    if grad.shape != params.shape:
        raise ShapeError('sgd_step', params.shape, grad.shape, "gradiente")
    if velocity.shape != params.shape:
        raise ShapeError('sgd_step', params.shape, velocity.shape, "velocidad")

    new_velocity = cfg.momentum * velocity + grad + cfg.weight_decay * params
    return params - cfg.learning_rate * new_velocity, new_velocity


def epoch_shuffle_seed(seed: int, epoch: int) -> int:
    return SeedGenerator.derive(seed, SeedGenerator.STREAM_SHUFFLE, epoch)


def write_curve(path: Path, curve: List[EpochRecord]) -> Path:
    return write_csv(path, CURVE_HEADER, [record.as_row() for record in curve])


def train(spec: ModelSpec, ds: Dataset, cfg: TrainConfig,
          test_ds: Optional[Dataset] = None,
          checkpoint_dir: Optional[Path] = None,
          start_params: Optional[ParamVector] = None) -> TrainResult:
    """
    Entrenar un modelo con SGD

    Args:
        spec: Arquitectura
        ds: Conjunto de entrenamiento (no vacío)
        cfg: Hiperparámetros
        test_ds: Conjunto para la curva de precisión (opcional)
        checkpoint_dir: Directorio de checkpoints; None no escribe nada
        start_params: Punto de partida; por defecto init_params(spec, cfg.seed)

    Returns:
        TrainResult: parámetros finales, checkpoints escritos y curva por época
    """
    errors = cfg.validate()
    if errors:
        raise ConfigError("TrainConfig inválida: " + "; ".join(errors))
    if len(ds) == 0:
        raise ConfigError("El conjunto de entrenamiento está vacío")

    params = start_params.copy() if start_params is not None else init_params(spec, cfg.seed)
    values = params.values.copy()
    velocity = np.zeros_like(values)
    result = TrainResult(params=params)

    log_system(f"Entrenando {spec.id}: {spec.parameter_count} parámetros, {len(ds)} muestras, "
               f"{cfg.epochs} épocas")

    for epoch in range(1, cfg.epochs + 1):
        losses = []
        for x, y in batches(ds, cfg.batch_size, epoch_shuffle_seed(cfg.seed, epoch)):
            try:
                loss, grad = loss_and_param_grad(spec, values, x, y)
            except DivergenceError as e:
                raise DivergenceError(f"{spec.id}, época {epoch}: {e}",
                                      last_good_params=values.copy()) from e

            new_values, new_velocity = sgd_step(values, grad, velocity, cfg)
            if not (np.isfinite(loss) and np.all(np.isfinite(new_values))):
                raise DivergenceError(f"{spec.id}, época {epoch}: pérdida o parámetros no finitos",
                                      last_good_params=values.copy())
            values, velocity = new_values, new_velocity
            losses.append(loss * len(y))

        train_loss = float(np.sum(losses) / len(ds))
        test_acc = accuracy(spec, values, test_ds.images, test_ds.labels) if test_ds is not None else None
        result.curve.append(EpochRecord(epoch, train_loss, test_acc))
        log_training(spec.id, epoch, train_loss, test_acc)

        if checkpoint_dir is not None and cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0:
            path = Path(checkpoint_dir) / f"{spec.id}_epoch{epoch:03d}.ckpt"
            save_checkpoint(path, ParamVector(values, spec.id), seed=cfg.seed, note=f"epoch {epoch}")
            result.checkpoints.append(path)

    result.params = ParamVector(values, spec.id)

    if checkpoint_dir is not None:
        final_path = Path(checkpoint_dir) / f"{spec.id}.ckpt"
        save_checkpoint(final_path, result.params, seed=cfg.seed, note=f"final, {cfg.epochs} epochs")
        result.checkpoints.append(final_path)

    return result
