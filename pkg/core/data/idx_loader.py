# core/data/idx_loader.py
"""
Lector del formato IDX (imágenes 0x00000803, etiquetas 0x00000801, encabezado big-endian)
"""
import struct
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from core.data.dataset import Dataset
from core.errors import ArtifactIOError, DataFormatError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _read_idx(path: Path, expected_magic: int) -> Tuple[Tuple[int, ...], np.ndarray]:
    """
    Leer un archivo IDX de bytes sin signo

    Returns:
        (dimensiones, datos uint8 planos)
    """
    path = Path(path)
    if not path.is_file():
        raise ArtifactIOError(f"Archivo IDX no encontrado: {path}")

    raw = path.read_bytes()
    if len(raw) < 4:
        raise DataFormatError(f"{path}: archivo truncado (sin magic)")

    (magic,) = struct.unpack('>I', raw[:4])
    if magic != expected_magic:
        raise DataFormatError(f"{path}: magic 0x{magic:08x}, se esperaba 0x{expected_magic:08x}")

    ndim = magic & 0xFF
    header_size = 4 + 4 * ndim
    if len(raw) < header_size:
        raise DataFormatError(f"{path}: encabezado truncado")

    dims = struct.unpack(f'>{ndim}I', raw[4:header_size])
    count = int(np.prod(dims)) if dims else 0
    payload = raw[header_size:]
    if len(payload) < count:
        raise DataFormatError(f"{path}: datos truncados ({len(payload)} de {count} bytes)")
    if len(payload) > count:
        raise DataFormatError(f"{path}: {len(payload) - count} bytes sobrantes")

    return tuple(int(d) for d in dims), np.frombuffer(payload, dtype=np.uint8, count=count)


def load_idx(images_path: Path, labels_path: Path, split: str = 'train',
             class_count: Optional[int] = None) -> Dataset:
    """
    Cargar un par imágenes/etiquetas IDX, píxeles escalados a [0, 1]

    Args:
        images_path: Archivo de imágenes (N, filas, columnas)
        labels_path: Archivo de etiquetas (N,)
        split: 'train' o 'test'
        class_count: Número de clases; por defecto max(etiqueta) + 1

    Returns:
        Dataset: imágenes (N, 1, filas, columnas)
    """
    image_dims, pixels = _read_idx(images_path, IDX_IMAGES_MAGIC)
    label_dims, labels = _read_idx(labels_path, IDX_LABELS_MAGIC)

    if image_dims[0] != label_dims[0]:
        raise DataFormatError(
            f"Conteo no coincide: {image_dims[0]} imágenes, {label_dims[0]} etiquetas")

    images = pixels.reshape(image_dims[0], 1, image_dims[1], image_dims[2]).astype(np.float64) / 255.0
    labels = labels.astype(np.int64)

    if class_count is None:
        class_count = max(int(labels.max()) + 1 if labels.size else 0, 2)

    source = {'kind': 'idx', 'images_path': str(images_path), 'labels_path': str(labels_path)}
    return Dataset(images, labels, int(class_count), split=split, source=source)
