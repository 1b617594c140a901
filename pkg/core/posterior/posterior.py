# core/posterior/posterior.py
"""
Posteriors gaussianas sobre el vector plano de parámetros

- Isotrópica: N(ŵ, σ²I)
- SWAG diagonal: N(w_SWA, s·Σ_diag + βI), con β = σ²
"""
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from core.errors import PosteriorError, ShapeError
from core.models.checkpoint import load_checkpoint
from core.models.model_zoo import ParamVector

DEFAULT_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class IsotropicPosterior:
    mean: ParamVector
    sigma: float

    kind = 'isotropic'

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise PosteriorError(f"sigma debe ser >= 0, recibido {self.sigma}")

    @property
    def spec_id(self) -> str:
        return self.mean.spec_id

    def variance(self) -> np.ndarray:
        return np.full(len(self.mean), float(self.sigma) ** 2)


@dataclass(frozen=True)
class SwagMoments:
    """
    Momentos acumulados de las instantáneas (media y media de cuadrados)
    """
    count: int
    running_mean: np.ndarray
    running_sq_mean: np.ndarray
    spec_id: str = ''

    @classmethod
    def empty(cls, length: int, spec_id: str = '') -> 'SwagMoments':
        return cls(0, np.zeros(length), np.zeros(length), spec_id)

    def raw_variance(self) -> np.ndarray:
        return self.running_sq_mean - self.running_mean ** 2


@dataclass(frozen=True)
class SwagPosterior:
    mean: ParamVector
    diag_var: np.ndarray
    scale: float = 1.5
    beta: float = 0.0

    kind = 'swag_diag'

    def __post_init__(self):
        diag_var = np.asarray(self.diag_var, dtype=np.float64).reshape(-1)
        if diag_var.size != len(self.mean):
            raise ShapeError('SwagPosterior', (len(self.mean),), diag_var.shape, "diag_var")
        if np.any(diag_var < 0) or not np.all(np.isfinite(diag_var)):
            raise PosteriorError("diag_var debe ser finita y >= 0")
        if not self.scale > 0:
            raise PosteriorError(f"scale debe ser > 0, recibido {self.scale}")
        if not self.beta >= 0:
            raise PosteriorError(f"beta debe ser >= 0, recibido {self.beta}")
        object.__setattr__(self, 'diag_var', diag_var)

    @property
    def spec_id(self) -> str:
        return self.mean.spec_id

    def variance(self) -> np.ndarray:
        return self.scale * self.diag_var + self.beta


Posterior = Union[IsotropicPosterior, SwagPosterior]


def sample(posterior: Posterior, rng: np.random.Generator) -> ParamVector:
    """
    Muestra mean + sqrt(varianza) ⊙ z con z ~ N(0, I)

    Las coordenadas con varianza cero devuelven la media bit a bit.
    Siempre consume len(mean) normales de rng.
    """
    mean = posterior.mean.values
    std = np.sqrt(posterior.variance())
    draw = rng.standard_normal(mean.size)
    values = np.where(std > 0, mean + std * draw, mean)
    return ParamVector(values, posterior.spec_id)


def sample_many(posterior: Posterior, rng: np.random.Generator, count: int) -> list:
    return [sample(posterior, rng) for _ in range(count)]


def with_sigma(posterior: Posterior, sigma: float) -> Posterior:
    """
    Misma posterior con otro σ (isotrópica: σ; SWAG: β = σ²)
    """
    if isinstance(posterior, IsotropicPosterior):
        return replace(posterior, sigma=float(sigma))
    return replace(posterior, beta=float(sigma) ** 2)


def isotropic_from_params(params: ParamVector, sigma: float) -> IsotropicPosterior:
    """Posterior isotrópica centrada en parámetros preentrenados"""
    return IsotropicPosterior(params.copy(), float(sigma))


# =======================================================
# SWAG
# =======================================================

def swag_update(moments: SwagMoments, snapshot: ParamVector) -> SwagMoments:
    """
    Actualización incremental de los momentos con una instantánea

    Returns:
        SwagMoments: count + 1
    """
    values = snapshot.values if isinstance(snapshot, ParamVector) else np.asarray(snapshot, dtype=np.float64)
    if values.shape != moments.running_mean.shape:
        raise ShapeError('swag_update', moments.running_mean.shape, values.shape)
    if moments.spec_id and isinstance(snapshot, ParamVector) and snapshot.spec_id != moments.spec_id:
        raise PosteriorError(f"Instantánea de '{snapshot.spec_id}', momentos de '{moments.spec_id}'")

    count = moments.count + 1
    running_mean = moments.running_mean + (values - moments.running_mean) / count
    running_sq_mean = moments.running_sq_mean + (values ** 2 - moments.running_sq_mean) / count
    spec_id = moments.spec_id or (snapshot.spec_id if isinstance(snapshot, ParamVector) else '')
    return SwagMoments(count, running_mean, running_sq_mean, spec_id)


def swag_finalize(moments: SwagMoments, scale: float = 1.5, beta: float = 0.0,
                  var_floor: float = DEFAULT_VAR_FLOOR) -> SwagPosterior:
    """
    Cerrar los momentos en una posterior SWAG diagonal

    Args:
        moments: Momentos con count >= 2
        scale: Factor de reescalado de la covarianza
        beta: Inflación isotrópica (σ²)
        var_floor: Piso de varianza por coordenada

    Returns:
        SwagPosterior
    """
    if moments.count < 2:
        raise PosteriorError(f"SWAG requiere al menos 2 instantáneas, hay {moments.count}")

    diag_var = np.maximum(moments.raw_variance(), var_floor)
    return SwagPosterior(ParamVector(moments.running_mean.copy(), moments.spec_id),
                         diag_var, scale=float(scale), beta=float(beta))


def swag_from_snapshots(snapshots: Iterable[ParamVector], scale: float = 1.5, beta: float = 0.0,
                        var_floor: float = DEFAULT_VAR_FLOOR) -> SwagPosterior:
    moments: Optional[SwagMoments] = None
    for snapshot in snapshots:
        if moments is None:
            moments = SwagMoments.empty(len(snapshot), snapshot.spec_id)
        moments = swag_update(moments, snapshot)
    if moments is None:
        raise PosteriorError("No hay instantáneas para SWAG")
    return swag_finalize(moments, scale, beta, var_floor)


def swag_from_checkpoints(paths: Sequence[Path], scale: float = 1.5, beta: float = 0.0,
                          var_floor: float = DEFAULT_VAR_FLOOR) -> SwagPosterior:
    """
    Posterior SWAG a partir de checkpoints existentes de una misma especificación
    """
    if len(paths) < 2:
        raise PosteriorError(f"Se requieren al menos 2 checkpoints, recibidos {len(paths)}")

    def snapshots():
        spec_id = None
        for path in paths:
            params, _ = load_checkpoint(path)
            if spec_id is not None and params.spec_id != spec_id:
                raise PosteriorError(f"{path}: checkpoint de '{params.spec_id}', se esperaba '{spec_id}'")
            spec_id = params.spec_id
            yield params

    return swag_from_snapshots(snapshots(), scale, beta, var_floor)


# =======================================================
# RADIO DE DENSIDAD
# =======================================================

def log_density(radius: float, sigma: float, dim: int) -> float:
    """log de la densidad N(0, σ²I) en un punto de norma radius"""
    return -0.5 * radius ** 2 / sigma ** 2 - 0.5 * dim * np.log(2.0 * np.pi * sigma ** 2)


def density_radius_log(sigma: float, dim: int, log_threshold: float) -> float:
    """
    density_radius con el umbral en escala logarítmica (dimensiones grandes)
    """
    if not sigma > 0:
        raise PosteriorError(f"sigma debe ser > 0, recibido {sigma}")
    if dim < 1:
        raise PosteriorError(f"dim debe ser >= 1, recibido {dim}")

    log_peak = log_density(0.0, sigma, dim)
    if log_threshold > log_peak:
        raise PosteriorError(
            f"Umbral por encima de la densidad máxima (log {log_threshold:.6g} > {log_peak:.6g}): "
            "región de confianza vacía")

    return float(np.sqrt(max(2.0 * sigma ** 2 * (log_peak - log_threshold), 0.0)))


def density_radius(sigma: float, dim: int, threshold: float) -> float:
    """
    Radio r tal que la densidad isotrópica en ‖Δw‖ = r vale threshold

    r² = -2σ²(ln threshold + (dim/2)·ln(2πσ²))

    Args:
        sigma: Desvío (> 0)
        dim: Dimensión del vector de parámetros
        threshold: Densidad umbral, 0 < threshold <= densidad máxima

    Returns:
        float: radio (λ de la solución analítica)
    """
    if not threshold > 0:
        raise PosteriorError(f"threshold debe ser > 0, recibido {threshold}")
    return density_radius_log(sigma, dim, float(np.log(threshold)))
