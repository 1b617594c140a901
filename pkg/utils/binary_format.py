# utils/binary_format.py
"""
Formato binario común de artefactos (checkpoints, posteriors, lotes adversarios)

Trama: MAGIC | longitud del encabezado (uint32 little-endian) | encabezado JSON UTF-8
| arreglos little-endian consecutivos
"""
import json
import struct
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from core.errors import ArtifactIOError, DataFormatError

SUPPORTED_DTYPES = {
    'float64': np.dtype('<f8'),
    'float32': np.dtype('<f4'),
}

_LENGTH = struct.Struct('<I')


def encode_header(header: Dict[str, Any]) -> bytes:
    """JSON canónico (claves ordenadas, sin espacios)"""
    return json.dumps(header, sort_keys=True, separators=(',', ':')).encode('utf-8')


def write_artifact(path: Path, magic: bytes, header: Dict[str, Any],
                   arrays: Sequence[np.ndarray], dtype: str = 'float64') -> Path:
    """
    Escribir un artefacto binario

    Args:
        path: Archivo destino
        magic: Bytes mágicos del formato
        header: Encabezado JSON (se agregan dtype y array_lengths)
        arrays: Arreglos planos a serializar en orden
        dtype: 'float64' (default) o 'float32' (con pérdida de precisión)

    Returns:
        Path: ruta escrita
    """
    if dtype not in SUPPORTED_DTYPES:
        raise DataFormatError(f"dtype no soportado: {dtype}")

    flat = [np.ascontiguousarray(np.asarray(a, dtype=np.float64).ravel()) for a in arrays]
    full_header = dict(header)
    full_header['dtype'] = dtype
    full_header['array_lengths'] = [int(a.size) for a in flat]
    header_bytes = encode_header(full_header)

    target = SUPPORTED_DTYPES[dtype]
    payload = b''.join(a.astype(target).tobytes() for a in flat)

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'wb') as handle:
            handle.write(magic)
            handle.write(_LENGTH.pack(len(header_bytes)))
            handle.write(header_bytes)
            handle.write(payload)
    except OSError as e:
        raise ArtifactIOError(f"No se pudo escribir {path}: {e}") from e

    return path


def read_artifact(path: Path, magic: bytes) -> Tuple[Dict[str, Any], List[np.ndarray]]:
    """
    Leer y validar un artefacto binario

    Returns:
        Tuple[dict, list]: (encabezado, arreglos float64)
    """
    path = Path(path)
    if not path.is_file():
        raise ArtifactIOError(f"Archivo no encontrado: {path}")

    raw = path.read_bytes()
    offset = len(magic)

    if raw[:offset] != magic:
        raise DataFormatError(f"{path}: magic incorrecto, esperado {magic!r}, recibido {raw[:offset]!r}")

    if len(raw) < offset + _LENGTH.size:
        raise DataFormatError(f"{path}: archivo truncado antes del encabezado")

    (header_length,) = _LENGTH.unpack_from(raw, offset)
    offset += _LENGTH.size

    if len(raw) < offset + header_length:
        raise DataFormatError(f"{path}: encabezado truncado")

    try:
        header = json.loads(raw[offset:offset + header_length].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataFormatError(f"{path}: encabezado JSON inválido: {e}") from e
    offset += header_length

    dtype_name = header.get('dtype', 'float64')
    if dtype_name not in SUPPORTED_DTYPES:
        raise DataFormatError(f"{path}: dtype no soportado {dtype_name}")
    dtype = SUPPORTED_DTYPES[dtype_name]

    arrays = []
    for length in header.get('array_lengths', []):
        n_bytes = int(length) * dtype.itemsize
        if len(raw) < offset + n_bytes:
            raise DataFormatError(f"{path}: datos truncados")
        arrays.append(np.frombuffer(raw, dtype=dtype, count=int(length), offset=offset).astype(np.float64))
        offset += n_bytes

    if offset != len(raw):
        raise DataFormatError(f"{path}: {len(raw) - offset} bytes sobrantes al final")

    return header, arrays
