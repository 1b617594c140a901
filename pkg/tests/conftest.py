# tests/conftest.py
"""
Fixtures compartidas: datos sintéticos diminutos y especificaciones pequeñas
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Agregar directorio raíz al path
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.data.dataset import gen_synthetic
from core.models.model_types import build_spec
from core.models.model_zoo import init_params

TINY_SHAPE = (1, 8, 8)
TINY_CLASSES = 3


def numerical_gradient(fn, point: np.ndarray, indices, eps: float = 1e-6) -> np.ndarray:
    """Diferencias centrales de fn en las coordenadas indicadas"""
    estimates = []
    for index in indices:
        shifted = point.copy().reshape(-1)
        shifted[index] += eps
        upper = fn(shifted.reshape(point.shape))
        shifted[index] -= 2 * eps
        lower = fn(shifted.reshape(point.shape))
        estimates.append((upper - lower) / (2 * eps))
    return np.array(estimates)


def relative_error(actual, expected, floor: float = 1e-4) -> np.ndarray:
    """|a - b| / max(|a|, |b|, floor) elemento a elemento"""
    actual, expected = np.asarray(actual), np.asarray(expected)
    return np.abs(actual - expected) / np.maximum(np.maximum(np.abs(actual), np.abs(expected)), floor)


@pytest.fixture
def tiny_train():
    return gen_synthetic(TINY_CLASSES, per_class=8, side=8, seed=5, pixel_noise=0.05,
                         class_contrast=0.3)


@pytest.fixture
def tiny_test():
    return gen_synthetic(TINY_CLASSES, per_class=4, side=8, seed=5, pixel_noise=0.05,
                         class_contrast=0.3, split='test')


@pytest.fixture
def linear_spec():
    return build_spec('linear', TINY_SHAPE, TINY_CLASSES)


@pytest.fixture
def cnn_spec():
    return build_spec('cnn_substitute', TINY_SHAPE, TINY_CLASSES)


@pytest.fixture
def linear_params(linear_spec):
    return init_params(linear_spec, seed=7)


@pytest.fixture
def cnn_params(cnn_spec):
    return init_params(cnn_spec, seed=7)
