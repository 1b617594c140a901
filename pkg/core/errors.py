# core/errors.py
"""
Jerarquía de errores del sistema y códigos de salida del CLI
"""
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np


class ExitCode(IntEnum):
    """
    Códigos de salida del proceso
    """
    OK = 0
    UNEXPECTED = 1
    CONFIG = 2
    IO = 3
    DIVERGENCE = 4


class BTError(Exception):
    """Error base; cada subclase define su código de salida"""
    exit_code: ExitCode = ExitCode.UNEXPECTED


class ShapeError(BTError, ValueError):
    """
    Formas incompatibles en una operación del grafo
    """

    def __init__(self, operation: str, shape_a: Sequence[int], shape_b: Sequence[int] = (),
                 detail: str = ""):
        self.operation = operation
        self.shape_a = tuple(shape_a)
        self.shape_b = tuple(shape_b)
        message = f"{operation}: formas incompatibles {self.shape_a} y {self.shape_b}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class GraphError(BTError, ValueError):
    """Uso inválido de la cinta (pérdida no escalar, entrada desconectada)"""


class ConfigError(BTError, ValueError):
    exit_code = ExitCode.CONFIG


class DataFormatError(BTError, ValueError):
    """Archivo con magic incorrecto, truncado o con conteos inconsistentes"""
    exit_code = ExitCode.IO


class ArtifactIOError(BTError, OSError):
    exit_code = ExitCode.IO


class PosteriorError(BTError, ValueError):
    pass


class DivergenceError(BTError, ArithmeticError):
    """
    Valores no finitos durante entrenamiento, ajuste fino o ataque
    """
    exit_code = ExitCode.DIVERGENCE

    def __init__(self, message: str, last_good_params: Optional[np.ndarray] = None):
        super().__init__(message)
        self.last_good_params = last_good_params


def exit_code_for(error: BaseException) -> ExitCode:
    """Código de salida para cualquier excepción"""
    if isinstance(error, BTError):
        return error.exit_code
    if isinstance(error, OSError):
        return ExitCode.IO
    return ExitCode.UNEXPECTED
