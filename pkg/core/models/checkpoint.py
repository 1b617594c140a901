# core/models/checkpoint.py
"""
Archivos de checkpoint: b"BTCKPT1" + encabezado JSON + parámetros little-endian
"""
from pathlib import Path
from typing import Optional, Tuple, Dict, Any

from core.errors import DataFormatError
from core.models.model_types import ModelSpec
from core.models.model_zoo import ParamVector, check_params
from utils.binary_format import read_artifact, write_artifact

CHECKPOINT_MAGIC = b"BTCKPT1"


def save_checkpoint(path: Path, params: ParamVector, seed: int = 0, note: str = "",
                    dtype: str = 'float64') -> Path:
    """
    Guardar un vector de parámetros

    Args:
        path: Archivo destino
        params: Vector a guardar
        seed: Semilla que lo produjo
        note: Texto libre (época, origen)
        dtype: 'float64' conserva el vector bit a bit

    Returns:
        Path: ruta escrita
    """
    header = {
        'spec_id': params.spec_id,
        'param_count': len(params),
        'seed': int(seed),
        'note': note
    }
    return write_artifact(path, CHECKPOINT_MAGIC, header, [params.values], dtype=dtype)


def load_checkpoint(path: Path, spec: Optional[ModelSpec] = None) -> Tuple[ParamVector, Dict[str, Any]]:
    """
    Cargar un checkpoint y, si se indica, validarlo contra una especificación

    Returns:
        Tuple[ParamVector, dict]: (parámetros, encabezado)
    """
    header, arrays = read_artifact(path, CHECKPOINT_MAGIC)

    if len(arrays) != 1 or arrays[0].size != int(header.get('param_count', -1)):
        raise DataFormatError(f"{path}: param_count no coincide con los datos")

    params = ParamVector(arrays[0], str(header.get('spec_id', '')))
    if spec is not None:
        if params.spec_id != spec.id:
            raise DataFormatError(f"{path}: checkpoint de '{params.spec_id}', se esperaba '{spec.id}'")
        check_params(spec, params)

    return params, header
