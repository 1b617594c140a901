# core/data/dataset.py
"""
Conjuntos de datos en memoria y generador sintético de imágenes
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from core.errors import ConfigError, DataFormatError
from utils.seed_generator import SeedGenerator

SPLITS = ('train', 'test')

# Claves de corriente dentro de STREAM_DATA
_TEMPLATE_KEY = 0
_SPLIT_KEYS = {'train': 1, 'test': 2}


@dataclass(frozen=True)
class Dataset:
    """
    Imágenes (N, C, H, W) en [0, 1] y etiquetas enteras en [0, c)
    """
    images: np.ndarray
    labels: np.ndarray
    class_count: int
    split: str = 'train'
    source: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None

    def __post_init__(self):
        images = np.array(self.images, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)

        if images.ndim != 4:
            raise DataFormatError(f"Se esperan imágenes (N, C, H, W), forma {images.shape}")
        if images.shape[0] != labels.shape[0]:
            raise DataFormatError(f"Conteo de imágenes ({images.shape[0]}) y etiquetas ({labels.shape[0]}) no coincide")
        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise DataFormatError("Píxeles fuera de [0, 1]")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise DataFormatError(f"Etiquetas fuera de [0, {self.class_count})")
        if self.split not in SPLITS:
            raise DataFormatError(f"Split desconocido: {self.split}")

        images.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, 'images', images)
        object.__setattr__(self, 'labels', labels)

    def __len__(self):
        return int(self.labels.shape[0])

    @property
    def input_shape(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.images.shape[1:])

    def subset(self, indices) -> 'Dataset':
        """Subconjunto por índices (copia)"""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.labels[indices], self.class_count,
                       split=self.split, source=dict(self.source), seed=self.seed)

    def class_counts(self) -> List[int]:
        return np.bincount(self.labels, minlength=self.class_count).tolist()

    def describe(self) -> Dict[str, Any]:
        return {
            'split': self.split,
            'samples': len(self),
            'input_shape': list(self.input_shape),
            'class_count': self.class_count,
            'class_counts': self.class_counts(),
            'source': self.source,
            'seed': self.seed
        }


def _frequency_pairs(count: int) -> List[Tuple[int, int]]:
    """
    Pares de frecuencias espaciales distintos, los de menor frecuencia primero
    """
    radius = 1
    while True:
        pairs = [(f1, f2)
                 for f1 in range(0, radius + 1)
                 for f2 in range(-radius, radius + 1)
                 if (f1, f2) != (0, 0) and not (f1 == 0 and f2 < 0)]
        if len(pairs) >= count:
            pairs.sort(key=lambda p: (p[0] ** 2 + p[1] ** 2, p))
            return pairs[:count]
        radius += 1


def class_templates(classes: int, side: int, seed: int, channels: int = 1,
                    class_contrast: float = 0.03) -> np.ndarray:
    """
    Patrón de baja frecuencia por clase: 0.5 + a·cos(2π(f1·i + f2·j)/S + φ)

    Returns:
        np.ndarray: (classes, channels, side, side)
    """
    rng = SeedGenerator.rng_for(seed, SeedGenerator.STREAM_DATA, _TEMPLATE_KEY)
    rows, cols = np.meshgrid(np.arange(side), np.arange(side), indexing='ij')
    templates = np.empty((classes, channels, side, side))

    for label, (f1, f2) in enumerate(_frequency_pairs(classes)):
        phases = rng.uniform(0.0, 2.0 * np.pi, size=channels)
        for channel in range(channels):
            templates[label, channel] = 0.5 + class_contrast * np.cos(
                2.0 * np.pi * (f1 * rows + f2 * cols) / side + phases[channel])

    return templates


def gen_synthetic(classes: int, per_class: int, side: int, seed: int,
                  pixel_noise: float = 0.15, channels: int = 1,
                  class_contrast: float = 0.03, split: str = 'train') -> Dataset:
    """
    Generar un conjunto sintético balanceado

    Args:
        classes: Número de clases (>= 2)
        per_class: Muestras por clase
        side: Lado de la imagen (>= 4)
        seed: Semilla de datos (plantillas compartidas entre splits)
        pixel_noise: Desvío del ruido gaussiano por píxel
        channels: Canales por imagen
        class_contrast: Amplitud del patrón de clase
        split: 'train' o 'test'; cada split usa su propia corriente de ruido

    Returns:
        Dataset
    """
    if classes < 2:
        raise ConfigError(f"classes debe ser >= 2, recibido {classes}")
    if side < 4:
        raise ConfigError(f"side debe ser >= 4, recibido {side}")
    if per_class < 0 or channels < 1 or pixel_noise < 0:
        raise ConfigError("per_class y pixel_noise deben ser >= 0, channels >= 1")
    if split not in _SPLIT_KEYS:
        raise ConfigError(f"Split desconocido: {split}")

    templates = class_templates(classes, side, seed, channels, class_contrast)
    rng = SeedGenerator.rng_for(seed, SeedGenerator.STREAM_DATA, _SPLIT_KEYS[split])

    labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    labels = labels[rng.permutation(labels.size)]
    noise = rng.normal(0.0, pixel_noise, size=(labels.size, channels, side, side))
    images = np.clip(templates[labels] + noise, 0.0, 1.0)

    source = {
        'kind': 'synthetic',
        'classes': classes,
        'per_class': per_class,
        'side': side,
        'channels': channels,
        'pixel_noise': pixel_noise,
        'class_contrast': class_contrast
    }
    return Dataset(images, labels, classes, split=split, source=source, seed=seed)


def batches(ds: Dataset, batch_size: int,
            shuffle_seed: Optional[int] = None) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Partición de una época en lotes

    Args:
        ds: Conjunto de datos
        batch_size: Tamaño de lote (>= 1); el último puede ser menor
        shuffle_seed: Semilla de barajado; None conserva el orden

    Returns:
        List[(x, y)]: cada muestra aparece exactamente una vez
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size debe ser >= 1, recibido {batch_size}")

    order = np.arange(len(ds))
    if shuffle_seed is not None:
        order = SeedGenerator.rng_for(shuffle_seed, SeedGenerator.STREAM_SHUFFLE).permutation(len(ds))

    return [(ds.images[order[start:start + batch_size]], ds.labels[order[start:start + batch_size]])
            for start in range(0, len(ds), batch_size)]


def iter_batches(ds: Dataset, batch_size: int,
                 shuffle_seed: Optional[int] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Versión perezosa de batches"""
    yield from batches(ds, batch_size, shuffle_seed)
