# core/attack/attack_engine.py
"""
Motor de ataques ℓ∞ (FGSM / I-FGSM) contra un modelo o contra una posterior

En modo bayesiano cada iteración promedia el gradiente de entrada sobre M
parámetros muestreados de la posterior (frescos por iteración o un conjunto
fijo sorteado antes del ataque).
"""
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import settings
from core.autodiff import ops
from core.errors import ConfigError, DivergenceError, DataFormatError, ShapeError
from core.models.model_types import ModelSpec
from core.models.model_zoo import ParamVector, check_inputs, logits, loss_and_input_grad
from core.posterior.posterior import IsotropicPosterior, Posterior, sample
from utils.binary_format import read_artifact, write_artifact
from utils.logger import log_system
from utils.seed_generator import SeedGenerator

ADV_MAGIC = b"BTADV01"

AttackSource = Union[ParamVector, Posterior]


class AttackMethod(str, Enum):
    FGSM = "fgsm"
    IFGSM = "ifgsm"


class AttackMode(str, Enum):
    DETERMINISTIC = "deterministic"
    BAYESIAN = "bayesian"


class SamplingMode(str, Enum):
    """Muestras frescas en cada iteración o un conjunto fijo por ataque"""
    PER_ITERATION = "per-iteration"
    FIXED_SET = "fixed-set"


@dataclass
class AttackJob:
    """
    Trabajo de ataque sobre un lote limpio
    """
    x: np.ndarray
    y: np.ndarray
    epsilon_budget: float = 8 / 255
    step_size: float = 1 / 255
    iterations: int = 20
    ensemble_size: int = 1
    mode: AttackMode = AttackMode.BAYESIAN
    sampling: SamplingMode = SamplingMode.PER_ITERATION
    rng_seed: int = 3

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        self.mode = AttackMode(self.mode)
        self.sampling = SamplingMode(self.sampling)

    def validate(self) -> List[str]:
        errors = []
        if not 0.0 <= self.epsilon_budget <= 1.0:
            errors.append(f"epsilon_budget debe estar en [0, 1], recibido {self.epsilon_budget}")
        if not self.step_size > 0:
            errors.append("step_size debe ser > 0")
        if self.iterations < 1:
            errors.append("iterations debe ser >= 1")
        if self.ensemble_size < 1:
            errors.append("ensemble_size debe ser >= 1")
        if self.x.shape[:1] != self.y.shape:
            errors.append(f"x {self.x.shape} e y {self.y.shape} no alinean")
        elif self.x.size and (self.x.min() < 0.0 or self.x.max() > 1.0):
            errors.append("x debe estar en [0, 1]")
        return errors

    def settings_dict(self) -> Dict[str, Any]:
        """Configuración serializable (sin los tensores)"""
        return {
            'epsilon_budget': float(self.epsilon_budget),
            'step_size': float(self.step_size),
            'iterations': int(self.iterations),
            'ensemble_size': int(self.ensemble_size),
            'mode': self.mode.value,
            'sampling': self.sampling.value,
            'rng_seed': int(self.rng_seed),
            'samples': int(self.y.size)
        }


@dataclass
class AdvBatch:
    x_adv: np.ndarray
    iterations_run: int
    final_losses: np.ndarray
    sample_digests: List[Tuple[str, ...]] = field(default_factory=list)

    def max_perturbation(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.x_adv - x))) if self.x_adv.size else 0.0


# =======================================================
# GRADIENTES
# =======================================================

def _as_posterior(source: AttackSource) -> Posterior:
    if isinstance(source, ParamVector):
        return IsotropicPosterior(source, 0.0)
    return source


def _mean_params(source: AttackSource) -> ParamVector:
    return source if isinstance(source, ParamVector) else source.mean


def params_digest(params: ParamVector) -> str:
    return hashlib.sha1(params.values.tobytes()).hexdigest()


def draw_models(posterior: Posterior, count: int, rng: np.random.Generator) -> List[ParamVector]:
    return [sample(posterior, rng) for _ in range(count)]


def input_grad_over(spec: ModelSpec, models: Sequence[ParamVector], x: np.ndarray,
                    y: np.ndarray) -> np.ndarray:
    """
    Gradiente de entrada de la pérdida media sobre un conjunto de modelos

    Promedio acumulado: con modelos idénticos el resultado es bit a bit el de uno solo.
    """
    average = None
    for index, params in enumerate(models):
        _, grad = loss_and_input_grad(spec, params, x, y)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"Gradiente de entrada no finito ({spec.id})")
        if average is None:
            average = grad
        else:
            average = average + (grad - average) / (index + 1)
    if average is None:
        raise ConfigError("Se requiere al menos un modelo")
    return average


def ensemble_input_grad(spec: ModelSpec, posterior: Posterior, x: np.ndarray, y: np.ndarray,
                        ensemble_size: int, rng: np.random.Generator) -> np.ndarray:
    """
    ∇x de (1/M) Σ L(x, y, w_i) con w_i ~ posterior, M muestras frescas

    Args:
        spec: Arquitectura del sustituto
        posterior: Posterior (o ParamVector, tratado como σ = 0)
        x: Lote (N, C, H, W)
        y: Etiquetas
        ensemble_size: M >= 1
        rng: Generador dueño del llamador

    Returns:
        np.ndarray: misma forma que x
    """
    if ensemble_size < 1:
        raise ConfigError(f"ensemble_size debe ser >= 1, recibido {ensemble_size}")
    models = draw_models(_as_posterior(posterior), ensemble_size, rng)
    return input_grad_over(spec, models, x, y)


def per_sample_losses(spec: ModelSpec, models: Sequence[ParamVector], x: np.ndarray,
                      y: np.ndarray) -> np.ndarray:
    """Entropía cruzada por muestra promediada sobre los modelos"""
    y = np.asarray(y, dtype=np.int64)
    total = np.zeros(len(y))
    for params in models:
        log_probs = ops.log_softmax(logits(spec, params, x))
        total += -log_probs[np.arange(len(y)), y]
    return total / max(len(models), 1)


# =======================================================
# ATAQUES
# =======================================================

def project(x: np.ndarray, x0: np.ndarray, epsilon: float) -> np.ndarray:
    """Bola ℓ∞ alrededor de x0 y luego la caja [0, 1]"""
    return np.clip(np.clip(x, x0 - epsilon, x0 + epsilon), 0.0, 1.0)


def ifgsm(spec: ModelSpec, source: AttackSource, job: AttackJob, batch_index: int = 0) -> AdvBatch:
    """
    I-FGSM: T pasos x ← clip[0,1](Π_ε(x + step·sign(g)))

    Args:
        spec: Arquitectura del sustituto
        source: ParamVector (determinista) o posterior
        job: Trabajo de ataque
        batch_index: Índice de lote para derivar la corriente aleatoria

    Returns:
        AdvBatch
    """
    errors = job.validate()
    if errors:
        raise ConfigError("AttackJob inválido: " + "; ".join(errors))
    x0 = check_inputs(spec, job.x)

    rng = SeedGenerator.rng_for(job.rng_seed, SeedGenerator.STREAM_ATTACK, batch_index)
    deterministic = job.mode == AttackMode.DETERMINISTIC
    posterior = _as_posterior(source)

    fixed_models = None
    if deterministic:
        fixed_models = [_mean_params(source)]
    elif job.sampling == SamplingMode.FIXED_SET:
        fixed_models = draw_models(posterior, job.ensemble_size, rng)

    x_adv = x0.copy()
    digests: List[Tuple[str, ...]] = []
    models = fixed_models

    for _ in range(job.iterations):
        if fixed_models is None:
            models = draw_models(posterior, job.ensemble_size, rng)
        digests.append(tuple(params_digest(params) for params in models))

        grad = input_grad_over(spec, models, x_adv, job.y)
        x_adv = project(x_adv + job.step_size * np.sign(grad), x0, job.epsilon_budget)

    return AdvBatch(x_adv=x_adv, iterations_run=job.iterations,
                    final_losses=per_sample_losses(spec, models, x_adv, job.y),
                    sample_digests=digests)


def fgsm(spec: ModelSpec, source: AttackSource, job: AttackJob, batch_index: int = 0) -> AdvBatch:
    """FGSM: un solo paso de tamaño ε (I-FGSM con T = 1)"""
    return ifgsm(spec, source, replace(job, iterations=1, step_size=job.epsilon_budget or 1.0),
                 batch_index)


ATTACKS = {
    AttackMethod.FGSM: fgsm,
    AttackMethod.IFGSM: ifgsm,
}


def run_attack(spec: ModelSpec, source: AttackSource, job: AttackJob,
               method: AttackMethod = AttackMethod.IFGSM, batch_size: int = 64,
               threads: Optional[int] = None) -> AdvBatch:
    """
    Atacar un conjunto completo en lotes independientes y en paralelo

    Cada lote usa la corriente (rng_seed, índice de lote); los resultados se
    reúnen en orden de envío, así que no dependen del número de hilos.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size debe ser >= 1, recibido {batch_size}")
    attack = ATTACKS[AttackMethod(method)]
    starts = list(range(0, len(job.y), batch_size))
    if not starts:
        return AdvBatch(job.x.copy(), 0, np.zeros(0))

    def run_batch(index_start: Tuple[int, int]) -> AdvBatch:
        index, start = index_start
        sub_job = replace(job, x=job.x[start:start + batch_size], y=job.y[start:start + batch_size])
        return attack(spec, source, sub_job, batch_index=index)

    workers = max(1, min(threads or settings.THREADS, len(starts)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(executor.map(run_batch, enumerate(starts)))

    log_system(f"Ataque {AttackMethod(method).value} ({job.mode.value}) sobre {len(job.y)} muestras "
               f"en {len(starts)} lotes", "DEBUG")

    return AdvBatch(
        x_adv=np.concatenate([r.x_adv for r in results], axis=0),
        iterations_run=results[0].iterations_run,
        final_losses=np.concatenate([r.final_losses for r in results]),
        sample_digests=[d for r in results for d in r.sample_digests]
    )


# =======================================================
# ARCHIVOS DE LOTES ADVERSARIOS
# =======================================================

def save_adv_batch(path_prefix: Path, adv: AdvBatch, job: AttackJob,
                   extra: Optional[Dict[str, Any]] = None) -> Tuple[Path, Path]:
    """
    Escribir manifiesto JSON (<prefijo>.json) y tensor (<prefijo>.bin)

    Returns:
        Tuple[Path, Path]: (manifiesto, tensor)
    """
    path_prefix = Path(path_prefix)
    tensor_path = path_prefix.with_suffix('.bin')
    manifest_path = path_prefix.with_suffix('.json')

    shape = list(adv.x_adv.shape)
    write_artifact(tensor_path, ADV_MAGIC, {'shape': shape},
                   [adv.x_adv, job.y.astype(np.float64), adv.final_losses])

    manifest = {
        'job': job.settings_dict(),
        'seeds': SeedGenerator.describe(job.rng_seed, SeedGenerator.STREAM_ATTACK),
        'iterations_run': adv.iterations_run,
        'shape': shape,
        'tensor_file': tensor_path.name
    }
    manifest.update(extra or {})
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding='utf-8')
    return manifest_path, tensor_path


def load_adv_batch(path_prefix: Path) -> Tuple[np.ndarray, np.ndarray, Dict[str, Any]]:
    """
    Leer un lote adversario

    Returns:
        (x_adv, y, manifiesto)
    """
    path_prefix = Path(path_prefix)
    manifest_path = path_prefix.with_suffix('.json')
    header, arrays = read_artifact(path_prefix.with_suffix('.bin'), ADV_MAGIC)
    if len(arrays) != 3:
        raise DataFormatError(f"{path_prefix}: se esperaban 3 arreglos, hay {len(arrays)}")

    shape = tuple(int(d) for d in header['shape'])
    if int(np.prod(shape)) != arrays[0].size or shape[0] != arrays[1].size:
        raise ShapeError('load_adv_batch', shape, arrays[0].shape)

    manifest = json.loads(manifest_path.read_text(encoding='utf-8')) if manifest_path.is_file() else {}
    return arrays[0].reshape(shape), arrays[1].astype(np.int64), manifest
